#include "cas/simulator.hpp"

#include <cmath>
#include <cstdio>

#include "cas/rng.hpp"

namespace cas {

namespace {

void check_prob(double p, const char* what) {
    if (!(p >= 0.0 && p <= 1.0))
        throw Error(std::string("simulate: ") + what + " must be in [0,1]");
}

void validate(const SimConfig& c) {
    if (c.n_sessions < 1) throw Error("simulate: n_sessions must be >= 1");
    if (c.items_per_serp < 1) throw Error("simulate: items_per_serp must be >= 1");
    check_prob(c.heterogeneous_fraction, "heterogeneous_fraction");
    check_prob(c.fixation_noise, "fixation_noise");
    check_prob(c.layout.side_column_prob, "layout.side_column_prob");
    if (!c.norms.fitted) throw Error("simulate: norms must be fitted");
    if (static_cast<int>(c.true_params.attention_weights.size()) !=
        c.variant.feature_dim())
        throw Error("simulate: true_params attention dim does not match variant");
    if (c.ratings.tiers.empty()) throw Error("simulate: rating tiers empty");
    if (c.ratings.tier_weights.size() != c.ratings.tiers.size())
        throw Error("simulate: tier_weights size mismatch");
    for (const RatingTier& t : c.ratings.tiers) {
        if (t.d_probs.size() != 3 || t.r_probs.size() != 4)
            throw Error("simulate: tier probs must have 3 (D) and 4 (R) grades");
    }
    if (c.ratings.d_raters < 0 || c.ratings.r_raters < 0)
        throw Error("simulate: rater counts must be >= 0");
}

std::string session_id(const char* prefix, int i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s%06d", prefix, i);
    return buf;
}

// layout, types and ratings shared by both generative processes;
// draw order is fixed so streams are reproducible
std::vector<SerpItem> sample_serp(Rng& rng, int n_items, double hetero_fraction,
                                  const LayoutSampler& layout,
                                  const RatingSampler& ratings,
                                  const std::string& sid) {
    std::vector<ItemType> types(static_cast<size_t>(n_items), ItemType::Web);
    if (hetero_fraction > 0 && rng.bernoulli(hetero_fraction)) {
        const int n_special = 1 + static_cast<int>(rng.below(3));
        for (int j = 0; j < n_special; ++j) {
            const size_t pos = j == 0 ? 0 : rng.below(static_cast<uint64_t>(n_items));
            types[pos] = static_cast<ItemType>(1 + rng.below(kNumItemTypes - 1));
        }
    }
    const int tier =
        rng.categorical(std::span<const double>(ratings.tier_weights));
    const RatingTier& t = ratings.tiers[static_cast<size_t>(tier)];

    std::vector<SerpItem> items;
    items.reserve(static_cast<size_t>(n_items));
    double column_y[2] = {0.0, 0.0};
    for (int k = 0; k < n_items; ++k) {
        SerpItem it;
        it.item_id = sid + "-i" + std::to_string(k + 1);
        it.perceived_rank = k + 1;
        it.item_type = types[static_cast<size_t>(k)];
        it.column = rng.bernoulli(layout.side_column_prob) ? 1 : 0;
        it.width = std::floor(rng.uniform(layout.width_min, layout.width_max));
        it.height = std::floor(rng.uniform(layout.height_min, layout.height_max));
        it.offset_top = column_y[it.column];
        column_y[it.column] += it.height + layout.item_gap;
        it.d_ratings.counts = rng.multinomial(ratings.d_raters, t.d_probs);
        it.r_ratings.counts = rng.multinomial(ratings.r_raters, t.r_probs);
        items.push_back(std::move(it));
    }
    return items;
}

}  // namespace

SimConfig SimConfig::defaults(int n_sessions, uint64_t seed) {
    SimConfig c;
    c.n_sessions = n_sessions;
    c.seed = seed;
    c.variant = ModelVariant::preset("CAS");

    // scale under which the true attention weights are expressed; matches the
    // default samplers' moments to round numbers
    c.norms.fitted = true;
    c.norms.mean = {5.5, 900.0, 650.0, 190.0, 123500.0};
    c.norms.stddev = {2.87, 575.0, 144.0, 64.0, 50000.0};

    CasParams p = CasParams::zeros(c.variant.feature_dim());
    // [intercept | rank | class x10 | offset, column, width, height, area]
    const double w[17] = {0.4,  -0.9, 0.0, 0.2,  0.5,  0.6,  0.8, -0.2, 0.1,
                          0.4,  0.9,  -0.3, -0.4, -0.6, 0.25, 0.3, 0.1};
    p.attention_weights.assign(w, w + 17);
    p.alpha_intercept = -2.2;
    p.alpha_weights = {-0.25, -0.05, 0.2, 0.55};
    p.fixation_miss_logit = std::log(0.3 / 0.7);
    p.tau_d = {0.0, 0.25, 0.6};
    p.tau_r = {0.0, 0.15, 0.35, 0.6};
    p.tau_0 = -2.0;
    c.true_params = std::move(p);

    c.ratings.tiers = {
        {{0.80, 0.15, 0.05}, {0.70, 0.20, 0.08, 0.02}},
        {{0.45, 0.35, 0.20}, {0.30, 0.35, 0.25, 0.10}},
        {{0.15, 0.35, 0.50}, {0.05, 0.15, 0.30, 0.50}},
    };
    c.ratings.tier_weights = {1.0, 1.0, 1.0};
    return c;
}

SimOutput simulate(const SimConfig& config) {
    validate(config);
    const CasModel truth = config.true_model();

    SimOutput out;
    out.sessions.reserve(static_cast<size_t>(config.n_sessions));
    out.truth.reserve(static_cast<size_t>(config.n_sessions));

    for (int s = 0; s < config.n_sessions; ++s) {
        Rng rng(mix_seed(config.seed, static_cast<uint64_t>(s)));
        Session sess;
        sess.session_id = session_id("sim-", s + 1);
        sess.query = "q" + std::to_string(s + 1);
        sess.items = sample_serp(rng, config.items_per_serp,
                                 config.heterogeneous_fraction, config.layout,
                                 config.ratings, sess.session_id);

        SessionTruth st;
        st.session_id = sess.session_id;
        double realized_u = 0.0;
        for (SerpItem& it : sess.items) {
            const double eps = examination_prob(
                extract_features(it, config.variant, config.norms),
                config.true_params);
            const double alpha = attractiveness(it.r_ratings, config.true_params);
            // fixed draw count per item keeps the stream stable
            const bool examined = rng.bernoulli(eps);
            const bool click_draw = rng.bernoulli(alpha);
            const bool fix_draw = rng.bernoulli(1.0 - config.fixation_noise);
            it.clicked = examined && click_draw;
            it.mouse_fixated = examined && fix_draw;
            if (examined)
                realized_u +=
                    d_utility(it.d_ratings, config.true_params, config.variant);
            if (it.clicked) realized_u += r_utility(it.r_ratings, config.true_params);
            st.examined.push_back(examined);
            st.exam_probs.push_back(eps);
            st.attr_probs.push_back(alpha);
        }
        st.realized_utility = realized_u;
        st.metric_utility = metric_utility(sess.items, truth);
        st.sat_prob = satisfaction_prob(realized_u, config.true_params);
        sess.satisfaction = rng.bernoulli(st.sat_prob);

        out.sessions.push_back(std::move(sess));
        out.truth.push_back(std::move(st));
    }
    return out;
}

SimOutput simulate_pbm(const PbmParams& pbm, int n_sessions, int items_per_serp,
                       const RatingSampler& ratings, const LayoutSampler& layout,
                       uint64_t seed) {
    if (n_sessions < 1) throw Error("simulate_pbm: n_sessions must be >= 1");
    if (items_per_serp < 1) throw Error("simulate_pbm: items_per_serp must be >= 1");

    SimOutput out;
    out.sessions.reserve(static_cast<size_t>(n_sessions));
    for (int s = 0; s < n_sessions; ++s) {
        Rng rng(mix_seed(seed, static_cast<uint64_t>(s)));
        Session sess;
        sess.session_id = session_id("pbm-", s + 1);
        sess.query = "q" + std::to_string(s + 1);
        sess.items =
            sample_serp(rng, items_per_serp, 0.0, layout, ratings, sess.session_id);
        for (size_t k = 0; k < sess.items.size(); ++k) {
            SerpItem& it = sess.items[k];
            const double q =
                pbm.gamma_at(static_cast<int>(k) + 1) *
                pbm.attr[static_cast<size_t>(relevance_bucket(it.r_ratings))];
            it.clicked = rng.bernoulli(q);
        }
        out.sessions.push_back(std::move(sess));
    }
    return out;
}

}  // namespace cas
