#include "cas/types.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace cas {

namespace {
constexpr const char* kItemTypeNames[kNumItemTypes] = {
    "Web",   "News",  "Weather", "Currency", "KnowledgePanel",
    "Image", "Video", "Maps",    "Answer",   "Other",
};
}  // namespace

const char* item_type_name(ItemType t) {
    return kItemTypeNames[static_cast<int>(t)];
}

ItemType item_type_from_name(const std::string& name) {
    for (int i = 0; i < kNumItemTypes; ++i) {
        if (name == kItemTypeNames[i]) return static_cast<ItemType>(i);
    }
    return ItemType::Other;
}

int RatingHistogram::total() const {
    return std::accumulate(counts.begin(), counts.end(), 0);
}

std::vector<double> RatingHistogram::effective() const {
    std::vector<double> out(counts.size(), 0.0);
    if (unrated()) {
        if (!out.empty()) out[0] = 1.0;
        return out;
    }
    for (size_t i = 0; i < counts.size(); ++i) out[i] = counts[i];
    return out;
}

double RatingHistogram::mean_grade() const {
    const std::vector<double> eff = effective();
    double n = 0.0, sum = 0.0;
    for (size_t g = 0; g < eff.size(); ++g) {
        n += eff[g];
        sum += static_cast<double>(g) * eff[g];
    }
    return n > 0 ? sum / n : 0.0;
}

bool Session::heterogeneous() const {
    return std::any_of(items.begin(), items.end(), [](const SerpItem& it) {
        return it.item_type != ItemType::Web;
    });
}

double CasParams::fixation_miss() const {
    return 1.0 / (1.0 + std::exp(-fixation_miss_logit));
}

bool CasParams::finite() const {
    auto all_finite = [](const std::vector<double>& v) {
        return std::all_of(v.begin(), v.end(),
                           [](double x) { return std::isfinite(x); });
    };
    return all_finite(attention_weights) && all_finite(alpha_weights) &&
           all_finite(tau_d) && all_finite(tau_r) &&
           std::isfinite(alpha_intercept) && std::isfinite(fixation_miss_logit) &&
           std::isfinite(tau_0);
}

CasParams CasParams::zeros(int feature_dim) {
    CasParams p;
    p.attention_weights.assign(static_cast<size_t>(feature_dim), 0.0);
    return p;
}

int ModelVariant::feature_dim() const {
    return 1 + (use_rank ? 1 : 0) + (use_classes ? kNumItemTypes : 0) +
           (use_geometry ? 5 : 0);
}

ModelVariant ModelVariant::preset(const std::string& name) {
    ModelVariant v;  // full CAS
    if (name == "CAS") return v;
    if (name == "CASnod") {
        v.use_d_labels = false;
        return v;
    }
    if (name == "CASnosat") {
        v.use_sat_term = false;
        return v;
    }
    if (name == "CASnoreg") {
        v.reg_lambda = 0.0;
        return v;
    }
    if (name == "CASrank") {
        v.use_classes = false;
        v.use_geometry = false;
        return v;
    }
    if (name == "CASnogeom") {
        v.use_geometry = false;
        return v;
    }
    if (name == "CASnoclass") {
        v.use_classes = false;
        return v;
    }
    std::string msg = "unknown variant '" + name + "'; valid names:";
    for (const auto& n : preset_names()) msg += " " + n;
    throw Error(msg);
}

const std::vector<std::string>& ModelVariant::preset_names() {
    static const std::vector<std::string> names = {
        "CAS",     "CASnod",    "CASnosat",  "CASnoreg",
        "CASrank", "CASnogeom", "CASnoclass"};
    return names;
}

std::vector<std::string> validate_session(const Session& s) {
    std::vector<std::string> out;
    if (s.items.empty()) {
        out.push_back("items empty");
        return out;
    }
    std::set<int> seen_ranks;
    for (size_t k = 0; k < s.items.size(); ++k) {
        const SerpItem& it = s.items[k];
        const std::string at = "item " + std::to_string(k);
        if (it.perceived_rank < 1)
            out.push_back(at + ": perceived_rank must be >= 1");
        else if (!seen_ranks.insert(it.perceived_rank).second)
            out.push_back(at + ": duplicate perceived_rank " +
                          std::to_string(it.perceived_rank));
        if (it.width <= 0) out.push_back(at + ": width must be > 0");
        if (it.height <= 0) out.push_back(at + ": height must be > 0");
        if (it.offset_top < 0) out.push_back(at + ": offset_top must be >= 0");
        if (it.column != 0 && it.column != 1)
            out.push_back(at + ": column must be 0 or 1");
        if (it.d_ratings.counts.size() != 3)
            out.push_back(at + ": d_ratings must have 3 grades");
        if (it.r_ratings.counts.size() != 4)
            out.push_back(at + ": r_ratings must have 4 grades");
        for (int c : it.d_ratings.counts)
            if (c < 0) out.push_back(at + ": negative d_ratings count");
        for (int c : it.r_ratings.counts)
            if (c < 0) out.push_back(at + ": negative r_ratings count");
    }
    return out;
}

}  // namespace cas
