#include "cas/features.hpp"

#include <cmath>
#include <map>

namespace cas {

FeatureNormalization FeatureNormalization::identity() {
    FeatureNormalization n;
    n.fitted = true;
    return n;
}

const std::vector<std::string>& FeatureVector::layout(const ModelVariant& v) {
    static std::map<int, std::vector<std::string>> cache;
    const int key = (v.use_rank ? 1 : 0) | (v.use_classes ? 2 : 0) |
                    (v.use_geometry ? 4 : 0);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;

    std::vector<std::string> names;
    names.push_back("intercept");
    if (v.use_rank) names.push_back("rank");
    if (v.use_classes) {
        for (int i = 0; i < kNumItemTypes; ++i)
            names.push_back(std::string("class:") +
                            item_type_name(static_cast<ItemType>(i)));
    }
    if (v.use_geometry) {
        names.push_back("geom:offset_top");
        names.push_back("geom:column");
        names.push_back("geom:width");
        names.push_back("geom:height");
        names.push_back("geom:area");
    }
    return cache.emplace(key, std::move(names)).first->second;
}

FeatureNormalization fit_normalization(std::span<const Session> sessions) {
    size_t n = 0;
    for (const Session& s : sessions) n += s.items.size();
    if (n == 0) throw Error("fit_normalization: no items in training sessions");

    FeatureNormalization out;
    std::array<double, FeatureNormalization::kCount> sum{}, sumsq{};
    for (const Session& s : sessions) {
        for (const SerpItem& it : s.items) {
            const double raw[FeatureNormalization::kCount] = {
                static_cast<double>(it.perceived_rank), it.offset_top, it.width,
                it.height, it.width * it.height};
            for (int f = 0; f < FeatureNormalization::kCount; ++f) {
                sum[f] += raw[f];
                sumsq[f] += raw[f] * raw[f];
            }
        }
    }
    for (int f = 0; f < FeatureNormalization::kCount; ++f) {
        const double mean = sum[f] / static_cast<double>(n);
        double var = sumsq[f] / static_cast<double>(n) - mean * mean;
        if (var < 0) var = 0;  // rounding
        out.mean[f] = mean;
        // zero-variance features standardize to 0 with std clamped to 1
        out.stddev[f] = var > 0 ? std::sqrt(var) : 1.0;
    }
    out.fitted = true;
    return out;
}

FeatureVector extract_features(const SerpItem& item, const ModelVariant& variant,
                               const FeatureNormalization& norms) {
    if (!norms.fitted)
        throw Error("extract_features: normalization has not been fitted");

    auto std_val = [&](int f, double raw) {
        return (raw - norms.mean[f]) / norms.stddev[f];
    };

    FeatureVector out;
    out.values.reserve(static_cast<size_t>(variant.feature_dim()));
    out.values.push_back(1.0);
    if (variant.use_rank)
        out.values.push_back(std_val(0, static_cast<double>(item.perceived_rank)));
    if (variant.use_classes) {
        for (int i = 0; i < kNumItemTypes; ++i)
            out.values.push_back(item.item_type == static_cast<ItemType>(i) ? 1.0
                                                                            : 0.0);
    }
    if (variant.use_geometry) {
        out.values.push_back(std_val(1, item.offset_top));
        out.values.push_back(static_cast<double>(item.column));
        out.values.push_back(std_val(2, item.width));
        out.values.push_back(std_val(3, item.height));
        out.values.push_back(std_val(4, item.width * item.height));
    }
    return out;
}

}  // namespace cas
