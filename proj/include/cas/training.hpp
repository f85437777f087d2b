#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "cas/model.hpp"

namespace cas {

struct TrainConfig {
    ModelVariant variant;
    int max_iterations = 500;
    double grad_tolerance = 1e-6;  // sup-norm of the objective gradient
    int lbfgs_memory = 10;
    uint64_t seed = 0;
    double init_scale = 0.0;  // 0 = deterministic zero initialization
    int threads = 1;
};

struct PerTermLoglik {
    double mouse = 0.0;
    double click = 0.0;
    double satisfaction = 0.0;

    double total() const { return mouse + click + satisfaction; }
};

struct FitResult {
    CasParams params;
    FeatureNormalization norms;  // fitted on the training data
    double final_objective = 0.0;
    int iterations = 0;
    bool converged = false;
    double grad_sup_norm = 0.0;
    PerTermLoglik per_term_loglik;  // on the training data, unpenalized

    CasModel model(const ModelVariant& variant) const {
        return CasModel{variant, params, norms};
    }
};

// Flattened optimization vector <-> CasParams. Only blocks that receive a
// data signal under the variant are packed: attention weights, the
// attractiveness block and the fixation miss logit always; tau_r/tau_0 only
// with the satisfaction term; tau_d additionally requires D labels.
// Unpacked inactive blocks are zero.
int packed_dim(const ModelVariant& variant);
std::vector<double> pack_params(const CasParams& params, const ModelVariant& variant);
CasParams unpack_params(std::span<const double> theta, const ModelVariant& variant);

// Joint log-likelihood of one session's fixation, click and satisfaction
// observations. Per item, with eps = P(E=1), alpha = P(C=1|E=1) and
// nu = P(no fixation | examined):
//   fixated, clicked       -> log eps + log(1-nu) + log alpha
//   fixated, not clicked   -> log eps + log(1-nu) + log(1-alpha)
//   unfixated, clicked     -> log eps + log nu    + log alpha
//   unfixated, not clicked -> log(eps*nu*(1-alpha) + (1-eps))
// plus, when the session is labeled and the variant keeps the satisfaction
// term, log P(S=s) with P(S=1) = sigma(tau_0 + utility_training).
double session_loglik(const Session& session, const CasModel& model);

// Same likelihood split as {mouse, click, satisfaction}: the click part is
// the marginal click probability log P(C=c), the mouse part the remainder
// log P(F=f | C=c). Components sum to session_loglik exactly.
PerTermLoglik session_loglik_terms(const Session& session, const CasModel& model);

// sum of session log-likelihoods minus (lambda/2)*||theta||^2 over the
// regularized entries. Intercepts (attention intercept, alpha^0, tau_0) and
// the fixation miss logit are not regularized.
double total_objective(std::span<const Session> sessions, const CasParams& params,
                       const TrainConfig& config, const FeatureNormalization& norms);

// Analytic gradient of total_objective w.r.t. the packed parameter vector.
std::vector<double> gradient(std::span<const Session> sessions,
                             const CasParams& params, const TrainConfig& config,
                             const FeatureNormalization& norms);

// Maximum-likelihood fit by L-BFGS. Fits the normalization on the given
// sessions, precomputes features once and maximizes total_objective.
// Deterministic given (session order, config).
FitResult fit(std::span<const Session> sessions, const TrainConfig& config);

// As fit(), but with a caller-supplied normalization (used by the
// cross-validation harness to make train-fold-only fitting explicit).
FitResult fit_with_norms(std::span<const Session> sessions,
                         const TrainConfig& config,
                         const FeatureNormalization& norms);

// Precomputed training problem: feature matrices, effective histograms and
// observation flags, with objective/gradient evaluation over the packed
// vector. Sessions are processed in fixed-size chunks whose partial sums are
// reduced in index order, so results are bitwise identical for any thread
// count.
class CasObjective {
  public:
    CasObjective(std::span<const Session> sessions, const ModelVariant& variant,
                 const FeatureNormalization& norms, double reg_lambda,
                 int threads);
    ~CasObjective();

    CasObjective(const CasObjective&) = delete;
    CasObjective& operator=(const CasObjective&) = delete;

    int dim() const;
    size_t n_items() const;
    size_t n_labeled_sessions() const;

    double value(std::span<const double> theta) const;
    double value_and_grad(std::span<const double> theta,
                          std::span<double> grad) const;
    // unpenalized likelihood breakdown at theta
    PerTermLoglik per_term(std::span<const double> theta) const;

    // sqrt of a per-coordinate curvature estimate, used as a diagonal
    // preconditioner; the parameter blocks differ in scale by orders of
    // magnitude (item sums vs. regularizer-only directions)
    std::vector<double> curvature_scales() const;

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace cas
