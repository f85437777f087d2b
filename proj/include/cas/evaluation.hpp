#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "cas/baselines.hpp"
#include "cas/model.hpp"
#include "cas/training.hpp"

namespace cas {

// Fitted baseline artifacts as stored in model files.
struct PbmModel {
    PbmParams params;
    double sat_intercept = 0.0;
};
struct UbmModel {
    UbmParams params;
    double sat_intercept = 0.0;
    bool external = false;  // parameters loaded from an external source (uUBM)
};
struct RandomModel {
    RandomParams params;
};
struct DcgModel {
    int depth = 10;
    double sat_intercept = 0.0;
};

using AnyModel = std::variant<CasModel, PbmModel, UbmModel, RandomModel, DcgModel>;

// Uniform adapter over fitted models for the evaluation harness.
class EvalModel {
  public:
    virtual ~EvalModel() = default;

    const std::string& name() const { return name_; }
    virtual bool predicts_clicks() const { return true; }
    virtual bool external() const { return false; }

    // Click probability per item under the model's own factorization (UBM
    // conditions on the preceding observed clicks; the others are marginal).
    virtual std::vector<double> click_probs(const Session& s) const = 0;
    // Metric utility from ratings and layout only.
    virtual double utility(const Session& s) const = 0;
    virtual double sat_prob(const Session& s) const = 0;

    virtual AnyModel raw() const = 0;

  protected:
    explicit EvalModel(std::string name) : name_(std::move(name)) {}

  private:
    std::string name_;
};

// `conditioned` applies to CAS models only: click probabilities are then
// conditioned on the observed fixations and the satisfaction probability
// uses the observed-examination utility (diagnostic mode).
std::unique_ptr<EvalModel> make_eval_model(std::string name, AnyModel model,
                                           bool conditioned = false);

// What to fit per fold.
struct ModelSpec {
    enum class Kind { Cas, Pbm, Ubm, Random, Dcg, ExternalUbm };
    Kind kind = Kind::Cas;
    std::string name;
    TrainConfig train;              // Cas
    int dcg_depth = 10;             // Dcg
    UbmParams external_params;      // ExternalUbm
    bool pin_calibration = false;   // force sat intercept c = 0
    bool conditioned = false;       // Cas diagnostic mode

    static ModelSpec cas(const std::string& preset_name, TrainConfig base = {});
    static ModelSpec baseline(const std::string& kind_name);
};

// Fit every spec on the training sessions. Baseline satisfaction calibration
// intercepts are fitted on the training labels.
std::vector<std::unique_ptr<EvalModel>> fit_models(
    std::span<const ModelSpec> specs, std::span<const Session> train);

// --- statistics -------------------------------------------------------------

// absent when n < 2 or either side has zero variance
std::optional<double> pearson(std::span<const double> x,
                              std::span<const double> y);
// rank correlation; ties receive average ranks
std::optional<double> spearman(std::span<const double> x,
                               std::span<const double> y);

// Mean log-probability of the observed click outcomes over all items; absent
// for models that do not predict clicks. Probabilities are clamped to
// [1e-12, 1-1e-12] before the log.
std::optional<double> click_loglik(const EvalModel& model,
                                   std::span<const Session> sessions);
// Mean log P(S = s) over labeled sessions; absent when none are labeled.
std::optional<double> sat_loglik(const EvalModel& model,
                                 std::span<const Session> sessions);

// --- cross-validation harness ----------------------------------------------

struct ModelFoldReport {
    std::string model;
    bool external = false;
    std::optional<double> click_loglik;
    std::optional<double> sat_loglik;
    std::vector<double> utilities;  // one per test session, session order
    std::optional<double> pearson_vs_sat;
    std::optional<double> spearman_vs_sat;
};

struct FoldReport {
    int repetition = 0;
    int fold = 0;
    size_t train_size = 0;
    size_t test_size = 0;
    uint64_t train_checksum = 0;
    uint64_t test_checksum = 0;
    std::vector<ModelFoldReport> models;
};

struct ModelAggregate {
    std::optional<double> click_loglik_mean, click_loglik_std;
    std::optional<double> sat_loglik_mean, sat_loglik_std;
    std::optional<double> pearson_vs_sat_mean, pearson_vs_sat_std;
    std::optional<double> spearman_vs_sat_mean, spearman_vs_sat_std;
};

struct EvalReport {
    int T = 1;
    int Q = 1;
    uint64_t seed = 0;
    std::vector<std::string> model_names;
    std::vector<bool> model_external;
    std::vector<FoldReport> folds;
    // mean over folds of the Pearson correlation between two models'
    // per-session utilities; indexed [i][j] over model_names
    std::vector<std::vector<std::optional<double>>> pairwise_utility_pearson;
    std::map<std::string, ModelAggregate> aggregates;
};

using TrainFn = std::function<std::vector<std::unique_ptr<EvalModel>>(
    std::span<const Session>)>;
using EvalFn = std::function<std::vector<ModelFoldReport>(
    const std::vector<std::unique_ptr<EvalModel>>&, std::span<const Session>)>;

// Per-model evaluation on a test fold used by tq_fold by default.
std::vector<ModelFoldReport> default_fold_eval(
    const std::vector<std::unique_ptr<EvalModel>>& models,
    std::span<const Session> test);

// T repetitions of Q-fold cross-validation: per repetition the session order
// is reshuffled deterministically from the seed and split into Q contiguous
// folds of near-equal size; models are refit on every training fold.
EvalReport tq_fold(std::span<const Session> sessions, int T, int Q,
                   uint64_t seed, const TrainFn& train_fn, const EvalFn& eval_fn);
EvalReport tq_fold(std::span<const Session> sessions, int T, int Q,
                   uint64_t seed, const TrainFn& train_fn);

// Repeated stratified holdout: each repeat holds out ~1/24 of the data
// containing exactly one labeled heterogeneous session, refits on the rest
// and scores that session. Reports, per model, the Pearson correlation of
// the collected (utility, satisfaction) pairs. Refuses when no labeled
// heterogeneous session exists.
struct HeteroReport {
    int n_repeats = 0;
    std::vector<std::string> model_names;
    std::vector<int> labels;  // one per repeat
    std::map<std::string, std::vector<double>> utilities;
    std::map<std::string, std::optional<double>> pearson_vs_sat;
};

HeteroReport heterogeneous_holdout(std::span<const Session> sessions,
                                   int n_repeats, uint64_t seed,
                                   const TrainFn& train_fn);

// Aggregates (means/stds and the pairwise utility table) from fold reports.
void finalize_report(EvalReport& report);

}  // namespace cas
