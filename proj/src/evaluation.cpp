#include "cas/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cas/manifest.hpp"
#include "cas/rng.hpp"

namespace cas {

namespace {

constexpr double kProbFloor = 1e-12;

double clamp_prob(double p) {
    return std::min(std::max(p, kProbFloor), 1.0 - kProbFloor);
}

// ---- adapters ---------------------------------------------------------------

class CasEvalModel final : public EvalModel {
  public:
    CasEvalModel(std::string name, CasModel model, bool conditioned)
        : EvalModel(std::move(name)),
          model_(std::move(model)),
          conditioned_(conditioned) {}

    std::vector<double> click_probs(const Session& s) const override {
        if (!conditioned_) return predict_session(s, model_).click_probs;
        // diagnostic mode: condition on the observed fixations
        std::vector<double> out;
        out.reserve(s.items.size());
        const double nu = model_.params.fixation_miss();
        for (const SerpItem& it : s.items) {
            const double eps = examination_prob(
                extract_features(it, model_.variant, model_.norms), model_.params);
            const double a = attractiveness(it.r_ratings, model_.params);
            if (it.mouse_fixated) {
                out.push_back(a);  // fixation implies examination
            } else {
                // P(C=1 | F=0) = eps*nu*alpha / (eps*nu + 1 - eps)
                const double denom = eps * nu + (1.0 - eps);
                out.push_back(denom > 0 ? eps * nu * a / denom : 0.0);
            }
        }
        return out;
    }

    double utility(const Session& s) const override {
        return metric_utility(s.items, model_);
    }

    double sat_prob(const Session& s) const override {
        const double u = conditioned_ ? utility_training(s, model_)
                                      : metric_utility(s.items, model_);
        return satisfaction_prob(u, model_.params);
    }

    AnyModel raw() const override { return model_; }

  private:
    CasModel model_;
    bool conditioned_;
};

class PbmEvalModel final : public EvalModel {
  public:
    PbmEvalModel(std::string name, PbmModel model)
        : EvalModel(std::move(name)), model_(std::move(model)) {}

    std::vector<double> click_probs(const Session& s) const override {
        return pbm_click_probs(model_.params, s.items);
    }
    double utility(const Session& s) const override {
        return pbm_utility(model_.params, s.items);
    }
    double sat_prob(const Session& s) const override {
        return sigmoid(utility(s) + model_.sat_intercept);
    }
    AnyModel raw() const override { return model_; }

  private:
    PbmModel model_;
};

class UbmEvalModel final : public EvalModel {
  public:
    UbmEvalModel(std::string name, UbmModel model)
        : EvalModel(std::move(name)), model_(std::move(model)) {}

    bool external() const override { return model_.external; }
    std::vector<double> click_probs(const Session& s) const override {
        return ubm_conditional_click_probs(model_.params, s);
    }
    double utility(const Session& s) const override {
        return ubm_utility(model_.params, s.items);
    }
    double sat_prob(const Session& s) const override {
        return sigmoid(utility(s) + model_.sat_intercept);
    }
    AnyModel raw() const override { return model_; }

  private:
    UbmModel model_;
};

class RandomEvalModel final : public EvalModel {
  public:
    RandomEvalModel(std::string name, RandomModel model)
        : EvalModel(std::move(name)), model_(model) {}

    std::vector<double> click_probs(const Session& s) const override {
        return std::vector<double>(s.items.size(), model_.params.p_click);
    }
    double utility(const Session& s) const override {
        return random_utility(model_.params, s.items);
    }
    double sat_prob(const Session&) const override { return model_.params.p_sat; }
    AnyModel raw() const override { return model_; }

  private:
    RandomModel model_;
};

class DcgEvalModel final : public EvalModel {
  public:
    DcgEvalModel(std::string name, DcgModel model)
        : EvalModel(std::move(name)), model_(model) {}

    bool predicts_clicks() const override { return false; }
    std::vector<double> click_probs(const Session&) const override {
        throw Error("DCG does not predict clicks");
    }
    double utility(const Session& s) const override {
        return dcg(s.items, model_.depth);
    }
    double sat_prob(const Session& s) const override {
        return sigmoid(utility(s) + model_.sat_intercept);
    }
    AnyModel raw() const override { return model_; }

  private:
    DcgModel model_;
};

}  // namespace

std::unique_ptr<EvalModel> make_eval_model(std::string name, AnyModel model,
                                           bool conditioned) {
    return std::visit(
        [&](auto&& m) -> std::unique_ptr<EvalModel> {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, CasModel>)
                return std::make_unique<CasEvalModel>(std::move(name), std::move(m),
                                                      conditioned);
            else if constexpr (std::is_same_v<T, PbmModel>)
                return std::make_unique<PbmEvalModel>(std::move(name), std::move(m));
            else if constexpr (std::is_same_v<T, UbmModel>)
                return std::make_unique<UbmEvalModel>(std::move(name), std::move(m));
            else if constexpr (std::is_same_v<T, RandomModel>)
                return std::make_unique<RandomEvalModel>(std::move(name), m);
            else
                return std::make_unique<DcgEvalModel>(std::move(name), m);
        },
        std::move(model));
}

ModelSpec ModelSpec::cas(const std::string& preset_name, TrainConfig base) {
    ModelSpec spec;
    spec.kind = Kind::Cas;
    spec.name = preset_name;
    spec.train = base;
    spec.train.variant = ModelVariant::preset(preset_name);
    return spec;
}

ModelSpec ModelSpec::baseline(const std::string& kind_name) {
    ModelSpec spec;
    if (kind_name == "pbm" || kind_name == "PBM") {
        spec.kind = Kind::Pbm;
        spec.name = "PBM";
    } else if (kind_name == "ubm" || kind_name == "UBM") {
        spec.kind = Kind::Ubm;
        spec.name = "UBM";
    } else if (kind_name == "random") {
        spec.kind = Kind::Random;
        spec.name = "random";
    } else if (kind_name == "dcg" || kind_name == "DCG") {
        spec.kind = Kind::Dcg;
        spec.name = "DCG";
    } else {
        throw Error("unknown baseline '" + kind_name +
                    "'; valid: pbm, ubm, random, dcg");
    }
    return spec;
}

namespace {

double calibrate(const EvalModel& model, std::span<const Session> train) {
    std::vector<double> utils;
    std::vector<int> labels;
    for (const Session& s : train) {
        if (!s.labeled()) continue;
        utils.push_back(model.utility(s));
        labels.push_back(*s.satisfaction ? 1 : 0);
    }
    return fit_sat_intercept(utils, labels);
}

}  // namespace

std::vector<std::unique_ptr<EvalModel>> fit_models(
    std::span<const ModelSpec> specs, std::span<const Session> train) {
    std::vector<std::unique_ptr<EvalModel>> out;
    out.reserve(specs.size());
    for (const ModelSpec& spec : specs) {
        switch (spec.kind) {
            case ModelSpec::Kind::Cas: {
                const FitResult fr = fit(train, spec.train);
                out.push_back(make_eval_model(spec.name,
                                              fr.model(spec.train.variant),
                                              spec.conditioned));
                break;
            }
            case ModelSpec::Kind::Pbm: {
                PbmModel m{fit_pbm(train), 0.0};
                if (!spec.pin_calibration) {
                    PbmEvalModel probe("probe", m);
                    m.sat_intercept = calibrate(probe, train);
                }
                out.push_back(make_eval_model(spec.name, std::move(m)));
                break;
            }
            case ModelSpec::Kind::Ubm:
            case ModelSpec::Kind::ExternalUbm: {
                UbmModel m;
                if (spec.kind == ModelSpec::Kind::Ubm) {
                    m.params = fit_ubm(train);
                } else {
                    m.params = spec.external_params;
                    m.external = true;
                }
                if (!spec.pin_calibration) {
                    UbmEvalModel probe("probe", m);
                    m.sat_intercept = calibrate(probe, train);
                }
                out.push_back(make_eval_model(spec.name, std::move(m)));
                break;
            }
            case ModelSpec::Kind::Random: {
                out.push_back(
                    make_eval_model(spec.name, RandomModel{fit_random(train)}));
                break;
            }
            case ModelSpec::Kind::Dcg: {
                DcgModel m{spec.dcg_depth, 0.0};
                if (!spec.pin_calibration) {
                    DcgEvalModel probe("probe", m);
                    m.sat_intercept = calibrate(probe, train);
                }
                out.push_back(make_eval_model(spec.name, m));
                break;
            }
        }
    }
    return out;
}

// ---- statistics -------------------------------------------------------------

std::optional<double> pearson(std::span<const double> x,
                              std::span<const double> y) {
    if (x.size() != y.size()) throw Error("pearson: length mismatch");
    const size_t n = x.size();
    if (n < 2) return std::nullopt;
    double mx = 0, my = 0;
    for (size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0, syy = 0, sxy = 0;
    for (size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx <= 0 || syy <= 0) return std::nullopt;
    return sxy / std::sqrt(sxx * syy);
}

namespace {

// ranks with ties averaged
std::vector<double> ranks_of(std::span<const double> x) {
    const size_t n = x.size();
    std::vector<size_t> idx(n);
    std::iota(idx.begin(), idx.end(), size_t{0});
    std::sort(idx.begin(), idx.end(),
              [&](size_t a, size_t b) { return x[a] < x[b]; });
    std::vector<double> ranks(n, 0.0);
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && x[idx[j + 1]] == x[idx[i]]) ++j;
        const double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
        for (size_t k = i; k <= j; ++k) ranks[idx[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

std::optional<double> spearman(std::span<const double> x,
                               std::span<const double> y) {
    if (x.size() != y.size()) throw Error("spearman: length mismatch");
    if (x.size() < 2) return std::nullopt;
    const std::vector<double> rx = ranks_of(x);
    const std::vector<double> ry = ranks_of(y);
    return pearson(rx, ry);
}

std::optional<double> click_loglik(const EvalModel& model,
                                   std::span<const Session> sessions) {
    if (!model.predicts_clicks()) return std::nullopt;
    double ll = 0.0;
    size_t n = 0;
    for (const Session& s : sessions) {
        const std::vector<double> probs = model.click_probs(s);
        for (size_t k = 0; k < s.items.size(); ++k) {
            const double p = clamp_prob(probs[k]);
            ll += s.items[k].clicked ? std::log(p) : std::log(1.0 - p);
            ++n;
        }
    }
    if (n == 0) return std::nullopt;
    return ll / static_cast<double>(n);
}

std::optional<double> sat_loglik(const EvalModel& model,
                                 std::span<const Session> sessions) {
    double ll = 0.0;
    size_t n = 0;
    for (const Session& s : sessions) {
        if (!s.labeled()) continue;
        const double p = clamp_prob(model.sat_prob(s));
        ll += *s.satisfaction ? std::log(p) : std::log(1.0 - p);
        ++n;
    }
    if (n == 0) return std::nullopt;
    return ll / static_cast<double>(n);
}

// ---- harness ----------------------------------------------------------------

std::vector<ModelFoldReport> default_fold_eval(
    const std::vector<std::unique_ptr<EvalModel>>& models,
    std::span<const Session> test) {
    std::vector<ModelFoldReport> out;
    out.reserve(models.size());
    std::vector<double> labels;
    std::vector<size_t> labeled_idx;
    for (size_t i = 0; i < test.size(); ++i) {
        if (test[i].labeled()) {
            labels.push_back(*test[i].satisfaction ? 1.0 : 0.0);
            labeled_idx.push_back(i);
        }
    }
    for (const auto& m : models) {
        ModelFoldReport r;
        r.model = m->name();
        r.external = m->external();
        r.click_loglik = click_loglik(*m, test);
        r.sat_loglik = sat_loglik(*m, test);
        r.utilities.reserve(test.size());
        for (const Session& s : test) r.utilities.push_back(m->utility(s));
        std::vector<double> labeled_utils;
        labeled_utils.reserve(labeled_idx.size());
        for (size_t i : labeled_idx) labeled_utils.push_back(r.utilities[i]);
        r.pearson_vs_sat = pearson(labeled_utils, labels);
        r.spearman_vs_sat = spearman(labeled_utils, labels);
        out.push_back(std::move(r));
    }
    return out;
}

namespace {

struct MeanStd {
    std::optional<double> mean, std;
};

MeanStd mean_std(const std::vector<double>& v) {
    if (v.empty()) return {};
    double m = 0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    MeanStd out;
    out.mean = m;
    if (v.size() > 1) {
        double ss = 0;
        for (double x : v) ss += (x - m) * (x - m);
        out.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
    }
    return out;
}

}  // namespace

void finalize_report(EvalReport& report) {
    const size_t nm = report.model_names.size();
    report.aggregates.clear();
    for (size_t mi = 0; mi < nm; ++mi) {
        std::vector<double> cll, sll, pvs, svs;
        for (const FoldReport& f : report.folds) {
            const ModelFoldReport& r = f.models[mi];
            if (r.click_loglik) cll.push_back(*r.click_loglik);
            if (r.sat_loglik) sll.push_back(*r.sat_loglik);
            if (r.pearson_vs_sat) pvs.push_back(*r.pearson_vs_sat);
            if (r.spearman_vs_sat) svs.push_back(*r.spearman_vs_sat);
        }
        ModelAggregate a;
        MeanStd ms = mean_std(cll);
        a.click_loglik_mean = ms.mean;
        a.click_loglik_std = ms.std;
        ms = mean_std(sll);
        a.sat_loglik_mean = ms.mean;
        a.sat_loglik_std = ms.std;
        ms = mean_std(pvs);
        a.pearson_vs_sat_mean = ms.mean;
        a.pearson_vs_sat_std = ms.std;
        ms = mean_std(svs);
        a.spearman_vs_sat_mean = ms.mean;
        a.spearman_vs_sat_std = ms.std;
        report.aggregates[report.model_names[mi]] = a;
    }
    // pairwise utility Pearson averaged over folds
    report.pairwise_utility_pearson.assign(
        nm, std::vector<std::optional<double>>(nm));
    for (size_t i = 0; i < nm; ++i) {
        for (size_t j = 0; j < nm; ++j) {
            std::vector<double> vals;
            for (const FoldReport& f : report.folds) {
                const auto r =
                    pearson(f.models[i].utilities, f.models[j].utilities);
                if (r) vals.push_back(*r);
            }
            if (!vals.empty())
                report.pairwise_utility_pearson[i][j] = mean_std(vals).mean;
        }
    }
}

EvalReport tq_fold(std::span<const Session> sessions, int T, int Q,
                   uint64_t seed, const TrainFn& train_fn,
                   const EvalFn& eval_fn) {
    const size_t n = sessions.size();
    if (T < 1 || Q < 1) throw Error("tq_fold: T and Q must be >= 1");
    if (static_cast<size_t>(Q) > n)
        throw Error("tq_fold: Q = " + std::to_string(Q) + " exceeds " +
                    std::to_string(n) + " sessions");

    EvalReport report;
    report.T = T;
    report.Q = Q;
    report.seed = seed;

    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});

    for (int t = 0; t < T; ++t) {
        Rng rng(mix_seed(seed, static_cast<uint64_t>(t)));
        rng.shuffle(order);
        for (int q = 0; q < Q; ++q) {
            const size_t lo = n * static_cast<size_t>(q) / static_cast<size_t>(Q);
            const size_t hi =
                n * (static_cast<size_t>(q) + 1) / static_cast<size_t>(Q);
            if (lo == hi) throw Error("tq_fold: empty fold");
            std::vector<Session> test, train;
            test.reserve(hi - lo);
            train.reserve(n - (hi - lo));
            for (size_t i = 0; i < n; ++i) {
                (i >= lo && i < hi ? test : train).push_back(sessions[order[i]]);
            }
            const auto models = train_fn(train);
            FoldReport fr;
            fr.repetition = t;
            fr.fold = q;
            fr.train_size = train.size();
            fr.test_size = test.size();
            fr.train_checksum = sessions_checksum(train);
            fr.test_checksum = sessions_checksum(test);
            fr.models = eval_fn(models, test);
            if (report.model_names.empty()) {
                for (const auto& m : fr.models) {
                    report.model_names.push_back(m.model);
                    report.model_external.push_back(m.external);
                }
            }
            report.folds.push_back(std::move(fr));
        }
    }
    finalize_report(report);
    return report;
}

EvalReport tq_fold(std::span<const Session> sessions, int T, int Q,
                   uint64_t seed, const TrainFn& train_fn) {
    return tq_fold(sessions, T, Q, seed, train_fn, default_fold_eval);
}

HeteroReport heterogeneous_holdout(std::span<const Session> sessions,
                                   int n_repeats, uint64_t seed,
                                   const TrainFn& train_fn) {
    const size_t n = sessions.size();
    std::vector<size_t> hetero, homo;
    for (size_t i = 0; i < n; ++i) {
        if (sessions[i].heterogeneous() && sessions[i].labeled())
            hetero.push_back(i);
        else
            homo.push_back(i);
    }
    if (hetero.empty())
        throw Error(
            "heterogeneous_holdout: no labeled heterogeneous sessions "
            "(a session is heterogeneous when any item type is not Web)");
    const size_t holdout = std::max<size_t>(1, n / 24);

    HeteroReport report;
    report.n_repeats = n_repeats;
    for (int rep = 0; rep < n_repeats; ++rep) {
        Rng rng(mix_seed(seed, 0x48455400ULL + static_cast<uint64_t>(rep)));
        const size_t target = hetero[rng.below(hetero.size())];
        std::vector<size_t> pool = homo;
        rng.shuffle(pool);
        std::vector<char> held(n, 0);
        held[target] = 1;
        for (size_t i = 0; i + 1 < holdout && i < pool.size(); ++i)
            held[pool[i]] = 1;
        std::vector<Session> train;
        train.reserve(n - holdout);
        for (size_t i = 0; i < n; ++i)
            if (!held[i]) train.push_back(sessions[i]);
        const auto models = train_fn(train);
        if (report.model_names.empty())
            for (const auto& m : models) report.model_names.push_back(m->name());
        report.labels.push_back(*sessions[target].satisfaction ? 1 : 0);
        for (const auto& m : models)
            report.utilities[m->name()].push_back(m->utility(sessions[target]));
    }
    std::vector<double> labels(report.labels.begin(), report.labels.end());
    for (const auto& name : report.model_names)
        report.pearson_vs_sat[name] = pearson(report.utilities[name], labels);
    return report;
}

}  // namespace cas
