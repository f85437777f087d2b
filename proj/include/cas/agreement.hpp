#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cas/types.hpp"

namespace cas {

enum class LabelKind { D, R };

const char* label_kind_name(LabelKind k);
LabelKind label_kind_from_name(const std::string& name);

// One raw crowd rating. Grades are 0-2 for D labels and 0-3 for R labels.
struct RatingRecord {
    std::string worker_id;
    std::string item_id;
    LabelKind label_kind = LabelKind::D;
    int grade = 0;
    std::optional<std::string> justification_text;
    std::optional<std::string> source_text;

    bool operator==(const RatingRecord&) const = default;
};

// Cohen's kappa over paired grades (nominal categories). Absent when both
// raters are constant but disagree leaves p_e = 1 with p_o < 1.
std::optional<double> cohen_kappa(std::span<const int> a, std::span<const int> b);

// Mean of cohen_kappa over all worker pairs sharing at least one co-rated
// item, each pair computed on its co-rated items. Pairs with undefined kappa
// are excluded; absent when no pair has a defined value. Records should be of
// a single label kind.
std::optional<double> average_pairwise_kappa(std::span<const RatingRecord> records);

enum class AlphaMetric { Nominal, Ordinal };

// Krippendorff's alpha from the coincidence matrix over items with >= 2
// ratings. Absent when expected disagreement is zero.
std::optional<double> krippendorff_alpha(std::span<const RatingRecord> records,
                                         AlphaMetric metric = AlphaMetric::Nominal);

struct SpamPolicy {
    int min_ratings = 3;
    // justification must be a (case/whitespace-normalized) substring of
    // source_text whenever both are present
    bool require_quote = false;
    // drop workers whose mean pairwise kappa with co-raters falls below this
    std::optional<double> disagreement_threshold;
};

struct RemovedWorker {
    std::string worker_id;
    std::vector<std::string> reasons;
    size_t n_ratings = 0;
};

struct FilterResult {
    std::vector<RatingRecord> kept;
    std::vector<RemovedWorker> removed;
};

// Applies min_ratings and quote checks to the input, then iterates the
// disagreement check on the survivors to a fixed point, which makes the
// whole filter idempotent. Removal reasons compose per worker.
FilterResult filter_spammers(std::span<const RatingRecord> records,
                             const SpamPolicy& policy);

// Per-item rating histograms in the session-format shape (3 D grades,
// 4 R grades), aggregated from rating records.
struct ItemHistograms {
    RatingHistogram d{std::vector<int>(3, 0)};
    RatingHistogram r{std::vector<int>(4, 0)};
};

std::map<std::string, ItemHistograms> aggregate_histograms(
    std::span<const RatingRecord> records);

// Per-label-kind block of the agreement report (the shape of a removal /
// agreement summary table).
struct AgreementStats {
    size_t workers_total = 0;
    size_t workers_removed = 0;
    size_t ratings_total = 0;
    size_t ratings_removed = 0;
    std::optional<double> kappa;  // average pairwise Cohen's kappa, kept workers
    std::optional<double> alpha;  // Krippendorff's alpha, kept workers
};

struct AgreementReport {
    std::map<LabelKind, AgreementStats> per_kind;
    FilterResult filter;
};

AgreementReport agreement_report(std::span<const RatingRecord> records,
                                 const SpamPolicy& policy,
                                 AlphaMetric metric = AlphaMetric::Nominal);

}  // namespace cas
