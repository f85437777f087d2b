#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "cas/types.hpp"

namespace cas {

// Train-set moments used to standardize the continuous attention features.
// Binary features (column, class one-hots) and the intercept are untouched.
struct FeatureNormalization {
    // order: rank, offset_top, width, height, width*height
    static constexpr int kCount = 5;

    bool fitted = false;
    std::array<double, kCount> mean{0, 0, 0, 0, 0};
    std::array<double, kCount> stddev{1, 1, 1, 1, 1};

    static FeatureNormalization identity();

    bool operator==(const FeatureNormalization&) const = default;
};

// Attention feature vector phi for one item under a variant's feature mask.
struct FeatureVector {
    std::vector<double> values;

    // Stable, ordered feature names matching `values`; shared per variant.
    static const std::vector<std::string>& layout(const ModelVariant& v);

    bool operator==(const FeatureVector&) const = default;
};

// Population mean/std of rank, offset_top, width, height and width*height
// over all items of the given sessions. Zero-variance features get std 1.
FeatureNormalization fit_normalization(std::span<const Session> sessions);

// Layout: [intercept | rank | class one-hot x10 | offset_top, column, width,
// height, width*height], with disabled groups omitted. Throws Error if the
// normalization is not fitted.
FeatureVector extract_features(const SerpItem& item, const ModelVariant& variant,
                               const FeatureNormalization& norms);

}  // namespace cas
