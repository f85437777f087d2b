#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cas/baselines.hpp"
#include "cas/model.hpp"

namespace cas {

// Geometry distribution for generated SERP items. Items stack vertically
// within their column, offset accumulating by height plus the gap.
struct LayoutSampler {
    double width_min = 400, width_max = 900;
    double height_min = 80, height_max = 300;
    double side_column_prob = 0.1;
    double item_gap = 10;

    bool operator==(const LayoutSampler&) const = default;
};

// Per-session quality tier: every item of a session draws its D and R
// histograms from the tier's multinomials.
struct RatingTier {
    std::vector<double> d_probs;  // 3 grades
    std::vector<double> r_probs;  // 4 grades

    bool operator==(const RatingTier&) const = default;
};

struct RatingSampler {
    int d_raters = 3;
    int r_raters = 5;
    std::vector<RatingTier> tiers;
    std::vector<double> tier_weights;

    bool operator==(const RatingSampler&) const = default;
};

struct SimConfig {
    int n_sessions = 0;
    int items_per_serp = 10;
    double heterogeneous_fraction = 0.12;
    CasParams true_params;
    ModelVariant variant;       // feature mask used for generation
    FeatureNormalization norms; // scale under which true_params apply
    LayoutSampler layout;
    RatingSampler ratings;
    // probability that an examined item shows no fixation
    double fixation_noise = 0.3;
    uint64_t seed = 1;

    CasModel true_model() const { return CasModel{variant, true_params, norms}; }

    // A fully specified config with moderate examination/attractiveness
    // variation and a ~70% satisfaction rate.
    static SimConfig defaults(int n_sessions, uint64_t seed);

    bool operator==(const SimConfig&) const = default;
};

// Ground-truth latents per generated session; written to the .truth.jsonl
// sidecar, never into the session log itself.
struct SessionTruth {
    std::string session_id;
    std::vector<bool> examined;
    std::vector<double> exam_probs;  // model eps per item
    std::vector<double> attr_probs;  // model alpha per item
    double realized_utility = 0.0;   // with realized E and C
    double metric_utility = 0.0;     // expected-utility form
    double sat_prob = 0.0;           // sigma(tau_0 + realized utility)
};

struct SimOutput {
    std::vector<Session> sessions;
    std::vector<SessionTruth> truth;
};

// Draw sessions from the CAS generative process: E ~ Bern(eps(phi)),
// C ~ Bern(E * alpha(R)), fixation ~ Bern((1 - fixation_noise) * E),
// S ~ Bern(sigma(tau_0 + realized U)). Every session is labeled. Each
// session uses an RNG stream derived from (seed, session index).
SimOutput simulate(const SimConfig& config);

// PBM generative process over the same layout/rating samplers: click with
// probability gamma[rank] * attr[bucket]; no fixations, no labels.
SimOutput simulate_pbm(const PbmParams& pbm, int n_sessions, int items_per_serp,
                       const RatingSampler& ratings, const LayoutSampler& layout,
                       uint64_t seed);

}  // namespace cas
