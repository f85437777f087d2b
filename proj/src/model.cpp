#include "cas/model.hpp"

#include <cmath>

namespace cas {

double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double log_sigmoid(double x) {
    if (x >= 0) return -std::log1p(std::exp(-x));
    return x - std::log1p(std::exp(x));
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace

double examination_prob(const FeatureVector& features, const CasParams& params) {
    if (features.values.size() != params.attention_weights.size())
        throw Error("examination_prob: feature dim " +
                    std::to_string(features.values.size()) +
                    " != weight dim " +
                    std::to_string(params.attention_weights.size()));
    return sigmoid(dot(params.attention_weights, features.values));
}

double attractiveness(const RatingHistogram& r, const CasParams& params) {
    const std::vector<double> eff = r.effective();
    if (eff.size() != params.alpha_weights.size())
        throw Error("attractiveness: histogram has " + std::to_string(eff.size()) +
                    " grades, expected " + std::to_string(params.alpha_weights.size()));
    return sigmoid(params.alpha_intercept + dot(params.alpha_weights, eff));
}

double click_prob(double exam_p, double attr_p) { return exam_p * attr_p; }

double d_utility(const RatingHistogram& d, const CasParams& params,
                 const ModelVariant& variant) {
    if (!variant.use_d_labels) return 0.0;
    return dot(params.tau_d, d.effective());
}

double r_utility(const RatingHistogram& r, const CasParams& params) {
    return dot(params.tau_r, r.effective());
}

double utility_training(const Session& session, const CasModel& model) {
    double u = 0.0;
    for (const SerpItem& it : session.items) {
        double ehat = 1.0;
        if (!it.mouse_fixated && !it.clicked)
            ehat = examination_prob(
                extract_features(it, model.variant, model.norms), model.params);
        u += ehat * d_utility(it.d_ratings, model.params, model.variant);
        if (it.clicked) u += r_utility(it.r_ratings, model.params);
    }
    return u;
}

double metric_utility(std::span<const SerpItem> serp, const CasModel& model) {
    double u = 0.0;
    for (const SerpItem& it : serp) {
        const double eps = examination_prob(
            extract_features(it, model.variant, model.norms), model.params);
        const double ud = d_utility(it.d_ratings, model.params, model.variant);
        const double ur = r_utility(it.r_ratings, model.params);
        u += eps * (ud + attractiveness(it.r_ratings, model.params) * ur);
    }
    return u;
}

double satisfaction_prob(double utility, const CasParams& params) {
    return sigmoid(params.tau_0 + utility);
}

SessionPrediction predict_session(const Session& session, const CasModel& model) {
    SessionPrediction pred;
    pred.exam_probs.reserve(session.items.size());
    pred.click_probs.reserve(session.items.size());
    for (const SerpItem& it : session.items) {
        const double eps = examination_prob(
            extract_features(it, model.variant, model.norms), model.params);
        const double a = attractiveness(it.r_ratings, model.params);
        pred.exam_probs.push_back(eps);
        pred.click_probs.push_back(click_prob(eps, a));
    }
    pred.utility = metric_utility(session.items, model);
    pred.sat_prob = satisfaction_prob(pred.utility, model.params);
    return pred;
}

}  // namespace cas
