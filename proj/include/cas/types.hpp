#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace cas {

// Error raised for bad configuration, malformed input files and
// contract violations. The CLI converts these into error JSON on stderr.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// SERP item classes used by the attention model. Upstream type strings
// outside this list are mapped to Other at ingestion time.
enum class ItemType {
    Web,
    News,
    Weather,
    Currency,
    KnowledgePanel,
    Image,
    Video,
    Maps,
    Answer,
    Other,
};

inline constexpr int kNumItemTypes = 10;

const char* item_type_name(ItemType t);
ItemType item_type_from_name(const std::string& name);

// Count vector of rater grades for one item: 3 grades for direct (D)
// relevance, 4 for document (R) relevance, lowest grade first. A histogram
// whose counts sum to zero is legal and means "unrated".
struct RatingHistogram {
    std::vector<int> counts;

    RatingHistogram() = default;
    explicit RatingHistogram(std::vector<int> c) : counts(std::move(c)) {}

    int total() const;
    bool unrated() const { return total() == 0; }

    // Histogram actually consumed by the model: an unrated item is expanded
    // to a single count on the lowest grade.
    std::vector<double> effective() const;

    // Count-weighted mean grade of the effective histogram.
    double mean_grade() const;

    bool operator==(const RatingHistogram&) const = default;
};

struct SerpItem {
    std::string item_id;
    int perceived_rank = 1;   // user-perceived rank, may differ from list position
    ItemType item_type = ItemType::Web;
    double offset_top = 0.0;  // pixels from page top
    int column = 0;           // 0 = main, 1 = side
    double width = 0.0;       // pixels
    double height = 0.0;      // pixels
    RatingHistogram d_ratings;  // 3 grades
    RatingHistogram r_ratings;  // 4 grades
    bool clicked = false;
    bool mouse_fixated = false;

    bool operator==(const SerpItem&) const = default;
};

// One query impression. Item order is the position index k.
struct Session {
    std::string session_id;
    std::string query;
    std::vector<SerpItem> items;
    std::optional<bool> satisfaction;  // absent on unlabeled sessions

    bool labeled() const { return satisfaction.has_value(); }
    bool heterogeneous() const;  // any item type other than Web
    bool operator==(const Session&) const = default;
};

// All learned scalars of the CAS model.
struct CasParams {
    // Attention weights, one per active feature; slot 0 is the intercept.
    // Length depends on the ModelVariant's feature mask.
    std::vector<double> attention_weights;
    double alpha_intercept = 0.0;                      // alpha^0
    std::vector<double> alpha_weights{0, 0, 0, 0};     // per R grade
    // Logit of P(no fixation | examined); the fixation observation channel.
    double fixation_miss_logit = 0.0;
    std::vector<double> tau_d{0, 0, 0};
    std::vector<double> tau_r{0, 0, 0, 0};
    double tau_0 = 0.0;

    double fixation_miss() const;  // sigma(fixation_miss_logit)
    bool finite() const;

    static CasParams zeros(int feature_dim);

    bool operator==(const CasParams&) const = default;
};

// Configuration mask selecting attention feature groups, D-label usage,
// the satisfaction objective term and the regularization strength.
struct ModelVariant {
    bool use_rank = true;
    bool use_classes = true;
    bool use_geometry = true;
    bool use_d_labels = true;
    bool use_sat_term = true;
    double reg_lambda = 0.1;

    // 1 (intercept) + 1 rank + 10 classes + 5 geometry, per mask.
    int feature_dim() const;

    bool operator==(const ModelVariant&) const = default;

    // Named presets: CAS, CASnod, CASnosat, CASnoreg, CASrank, CASnogeom,
    // CASnoclass. Throws Error for unknown names.
    static ModelVariant preset(const std::string& name);
    static const std::vector<std::string>& preset_names();
};

// Returns every invariant violation of the session; empty means valid.
std::vector<std::string> validate_session(const Session& s);

}  // namespace cas
