#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "cas/types.hpp"

namespace cas {

// Position-based model: P(C at position k) = gamma[k-1] * attr[bucket].
struct PbmParams {
    std::vector<double> gamma;    // per rank, 1-based positions
    std::array<double, 4> attr{};  // per relevance bucket

    // gamma for a 1-based rank; ranks beyond the table reuse the last value
    double gamma_at(int rank) const;

    bool operator==(const PbmParams&) const = default;
};

// User browsing model: examination depends on the position and the position
// of the previous click. gamma[r-1][rp] with rp in {0..r-1}, 0 = no previous
// click.
struct UbmParams {
    std::vector<std::vector<double>> gamma;
    std::array<double, 4> attr{};

    double gamma_at(int rank, int prev_click_rank) const;

    bool operator==(const UbmParams&) const = default;
};

struct RandomParams {
    double p_click = 0.0;
    double p_sat = 0.5;

    bool operator==(const RandomParams&) const = default;
};

// Rounded mean grade of the effective histogram; ties round half up.
int relevance_bucket(const RatingHistogram& r);

struct EmTrace {
    std::vector<double> loglik;  // after each iteration
    int iterations = 0;
    bool converged = false;
};

// EM maximum-likelihood estimates. Convergence when the largest parameter
// delta drops below `tol` or after `max_iter` iterations.
PbmParams fit_pbm(std::span<const Session> sessions, EmTrace* trace = nullptr,
                  int max_iter = 200, double tol = 1e-6);
UbmParams fit_ubm(std::span<const Session> sessions, EmTrace* trace = nullptr,
                  int max_iter = 200, double tol = 1e-6);

// p_click = clicks / items; p_sat = satisfied / labeled (0.5 with a warning
// when no session is labeled).
RandomParams fit_random(std::span<const Session> sessions);

// sum over the top `depth` positions of (2^bucket - 1) / log2(k + 1).
double dcg(std::span<const SerpItem> serp, int depth = 10);

// Marginal click probability per item under each model's own process.
std::vector<double> pbm_click_probs(const PbmParams& p,
                                    std::span<const SerpItem> serp);
// UBM forward marginal via dynamic programming over the previous-click state.
std::vector<double> ubm_marginal_click_probs(const UbmParams& p,
                                             std::span<const SerpItem> serp);
// UBM probability of each observed click outcome given the preceding
// observed clicks (the model's chain factorization).
std::vector<double> ubm_conditional_click_probs(const UbmParams& p,
                                                const Session& session);

// Expected sum of clicked relevance: sum_k P(C_k = 1) * bucket_k.
double pbm_utility(const PbmParams& p, std::span<const SerpItem> serp);
double ubm_utility(const UbmParams& p, std::span<const SerpItem> serp);
double random_utility(const RandomParams& p, std::span<const SerpItem> serp);

// One-dimensional MLE of c in sigma(utility + c) against binary labels.
// Returns 0 when no labeled sessions are given. The result is clamped to
// [-15, 15] to keep degenerate label sets finite.
double fit_sat_intercept(std::span<const double> utilities,
                         std::span<const int> labels);

}  // namespace cas
