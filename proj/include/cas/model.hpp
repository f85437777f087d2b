#pragma once

#include <span>
#include <vector>

#include "cas/features.hpp"
#include "cas/types.hpp"

namespace cas {

double sigmoid(double x);

// log(sigma(x)), branch on sign; never used as log(sigmoid(x)).
double log_sigmoid(double x);

// A trained CAS model: everything needed to score a SERP. This is the
// content of the model file (plus a format version).
struct CasModel {
    ModelVariant variant;
    CasParams params;
    FeatureNormalization norms;

    bool operator==(const CasModel&) const = default;
};

// Forward (generative) prediction for one session; no behavioral inputs.
struct SessionPrediction {
    std::vector<double> exam_probs;   // P(E_k = 1)
    std::vector<double> click_probs;  // P(C_k = 1) = exam * attractiveness
    double utility = 0.0;             // expected-utility metric form
    double sat_prob = 0.0;            // sigma(tau_0 + utility)
};

// sigma(attention_weights . features); throws Error on dimension mismatch.
double examination_prob(const FeatureVector& features, const CasParams& params);

// sigma(alpha0 + alpha . R), R the effective (unrated-expanded) histogram.
double attractiveness(const RatingHistogram& r, const CasParams& params);

// exam_p * attr_p; the examination hypothesis makes this exact.
double click_prob(double exam_p, double attr_p);

// tau_d . D (zero when the variant disables D labels) and tau_r . R.
double d_utility(const RatingHistogram& d, const CasParams& params,
                 const ModelVariant& variant);
double r_utility(const RatingHistogram& r, const CasParams& params);

// Training-time utility: U = sum_k ehat_k * u_d(D_k) + sum_k c_k * u_r(R_k),
// where ehat_k is 1 for fixated or clicked items and the model examination
// probability otherwise.
double utility_training(const Session& session, const CasModel& model);

// Expected-utility metric: U = sum_k eps(phi_k) (u_d(D_k) + alpha(R_k) u_r(R_k)).
// Consumes ratings and layout only.
double metric_utility(std::span<const SerpItem> serp, const CasModel& model);

// sigma(tau_0 + U)
double satisfaction_prob(double utility, const CasParams& params);

SessionPrediction predict_session(const Session& session, const CasModel& model);

}  // namespace cas
