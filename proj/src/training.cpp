#include "cas/training.hpp"

#include <atomic>
#include <cmath>
#include <cstring>
#include <iostream>
#include <thread>

#include "cas/lbfgs.hpp"
#include "cas/rng.hpp"

namespace cas {

namespace {

// Block offsets of the packed parameter vector for a variant.
struct PackLayout {
    int F = 0;        // attention weight count
    int alpha0 = 0;   // attractiveness intercept
    int alpha_w = 0;  // 4 attractiveness weights
    int rho = 0;      // fixation miss logit
    int tau_d = -1;   // 3 weights, present with sat term + D labels
    int tau_r = -1;   // 4 weights, present with sat term
    int tau_0 = -1;
    int dim = 0;
};

PackLayout pack_layout(const ModelVariant& v) {
    PackLayout L;
    L.F = v.feature_dim();
    L.alpha0 = L.F;
    L.alpha_w = L.F + 1;
    L.rho = L.F + 5;
    int at = L.F + 6;
    if (v.use_sat_term) {
        if (v.use_d_labels) {
            L.tau_d = at;
            at += 3;
        }
        L.tau_r = at;
        at += 4;
        L.tau_0 = at;
        at += 1;
    }
    L.dim = at;
    return L;
}

constexpr double kTinyProb = 1e-300;

}  // namespace

int packed_dim(const ModelVariant& variant) { return pack_layout(variant).dim; }

std::vector<double> pack_params(const CasParams& params,
                                const ModelVariant& variant) {
    const PackLayout L = pack_layout(variant);
    if (static_cast<int>(params.attention_weights.size()) != L.F)
        throw Error("pack_params: attention_weights has " +
                    std::to_string(params.attention_weights.size()) +
                    " entries, variant implies " + std::to_string(L.F));
    std::vector<double> theta(static_cast<size_t>(L.dim), 0.0);
    std::copy(params.attention_weights.begin(), params.attention_weights.end(),
              theta.begin());
    theta[L.alpha0] = params.alpha_intercept;
    std::copy(params.alpha_weights.begin(), params.alpha_weights.end(),
              theta.begin() + L.alpha_w);
    theta[L.rho] = params.fixation_miss_logit;
    if (L.tau_d >= 0)
        std::copy(params.tau_d.begin(), params.tau_d.end(),
                  theta.begin() + L.tau_d);
    if (L.tau_r >= 0)
        std::copy(params.tau_r.begin(), params.tau_r.end(),
                  theta.begin() + L.tau_r);
    if (L.tau_0 >= 0) theta[L.tau_0] = params.tau_0;
    return theta;
}

CasParams unpack_params(std::span<const double> theta,
                        const ModelVariant& variant) {
    const PackLayout L = pack_layout(variant);
    if (static_cast<int>(theta.size()) != L.dim)
        throw Error("unpack_params: got " + std::to_string(theta.size()) +
                    " values, expected " + std::to_string(L.dim));
    CasParams p = CasParams::zeros(L.F);
    std::copy(theta.begin(), theta.begin() + L.F, p.attention_weights.begin());
    p.alpha_intercept = theta[L.alpha0];
    std::copy(theta.begin() + L.alpha_w, theta.begin() + L.alpha_w + 4,
              p.alpha_weights.begin());
    p.fixation_miss_logit = theta[L.rho];
    if (L.tau_d >= 0)
        std::copy(theta.begin() + L.tau_d, theta.begin() + L.tau_d + 3,
                  p.tau_d.begin());
    if (L.tau_r >= 0)
        std::copy(theta.begin() + L.tau_r, theta.begin() + L.tau_r + 4,
                  p.tau_r.begin());
    if (L.tau_0 >= 0) p.tau_0 = theta[L.tau_0];
    return p;
}

// ---------------------------------------------------------------------------
// Prepared training problem

struct CasObjective::Impl {
    ModelVariant variant;
    PackLayout L;
    double lambda = 0.0;
    int threads = 1;

    size_t n_sessions = 0;
    size_t n_items = 0;
    size_t n_labeled = 0;
    std::vector<double> phi;     // n_items x F
    std::vector<double> r_eff;   // n_items x 4
    std::vector<double> d_eff;   // n_items x 3
    std::vector<uint8_t> clicked;
    std::vector<uint8_t> fixated;
    std::vector<uint32_t> start;  // session item offsets, n_sessions + 1
    std::vector<int8_t> sat;      // -1 unlabeled / 0 / 1

    // Log-likelihood of sessions [s0, s1); adds the gradient into g when
    // non-null and the term breakdown into pt when non-null.
    double eval_range(size_t s0, size_t s1, const double* th, double* g,
                      PerTermLoglik* pt) const {
        const double* w = th;
        const double a0 = th[L.alpha0];
        const double* aw = th + L.alpha_w;
        const double rho = th[L.rho];
        const double nu = sigmoid(rho);
        const double log_nu = log_sigmoid(rho);
        const double log_1mnu = log_sigmoid(-rho);
        const double snu = nu * (1.0 - nu);
        const double* td = L.tau_d >= 0 ? th + L.tau_d : nullptr;
        const double* tr = L.tau_r >= 0 ? th + L.tau_r : nullptr;
        const double t0 = L.tau_0 >= 0 ? th[L.tau_0] : 0.0;
        const int F = L.F;

        double ll = 0.0;
        // buffered (item index, d-utility * eps') pairs for the satisfaction
        // gradient of unobserved items
        std::vector<std::pair<uint32_t, double>> sat_buf;

        for (size_t s = s0; s < s1; ++s) {
            const bool sat_active = L.tau_0 >= 0 && sat[s] >= 0;
            double U = 0.0;
            double sum_ehat_d[3] = {0, 0, 0};
            double sum_c_r[4] = {0, 0, 0, 0};
            sat_buf.clear();

            for (uint32_t i = start[s]; i < start[s + 1]; ++i) {
                const double* ph = &phi[static_cast<size_t>(i) * F];
                double xe = 0.0;
                for (int j = 0; j < F; ++j) xe += w[j] * ph[j];
                const double eps = sigmoid(xe);
                const double one_m_eps = sigmoid(-xe);
                const double* re = &r_eff[static_cast<size_t>(i) * 4];
                double xa = a0;
                for (int j = 0; j < 4; ++j) xa += aw[j] * re[j];
                const double alpha = sigmoid(xa);
                const double one_m_alpha = sigmoid(-xa);
                const bool c = clicked[i];
                const bool fx = fixated[i];

                double item_ll, gw_coef = 0.0, ga_coef = 0.0;
                if (fx || c) {
                    item_ll = log_sigmoid(xe) + (fx ? log_1mnu : log_nu) +
                              (c ? log_sigmoid(xa) : log_sigmoid(-xa));
                    if (g) {
                        gw_coef = one_m_eps;
                        ga_coef = c ? one_m_alpha : -alpha;
                        g[L.rho] += fx ? -nu : (1.0 - nu);
                    }
                } else {
                    // complement computed as a sum of sigmoids; no cancellation
                    const double m = std::max(
                        eps * nu * one_m_alpha + one_m_eps, kTinyProb);
                    item_ll = std::log(m);
                    if (g) {
                        const double se = eps * one_m_eps;
                        gw_coef = (nu * one_m_alpha - 1.0) * se / m;
                        ga_coef = -eps * nu * alpha * one_m_alpha / m;
                        g[L.rho] += eps * one_m_alpha * snu / m;
                    }
                }
                ll += item_ll;
                if (g) {
                    for (int j = 0; j < F; ++j) g[j] += gw_coef * ph[j];
                    g[L.alpha0] += ga_coef;
                    for (int j = 0; j < 4; ++j) g[L.alpha_w + j] += ga_coef * re[j];
                }
                if (pt) {
                    const double click_ll =
                        c ? log_sigmoid(xe) + log_sigmoid(xa)
                          : std::log(std::max(one_m_eps + eps * one_m_alpha,
                                              kTinyProb));
                    pt->click += click_ll;
                    pt->mouse += item_ll - click_ll;
                }

                if (sat_active) {
                    const double ehat = (fx || c) ? 1.0 : eps;
                    if (td) {
                        const double* de = &d_eff[static_cast<size_t>(i) * 3];
                        double ud = 0.0;
                        for (int j = 0; j < 3; ++j) {
                            ud += td[j] * de[j];
                            sum_ehat_d[j] += ehat * de[j];
                        }
                        U += ehat * ud;
                        if (g && !fx && !c)
                            sat_buf.emplace_back(i, ud * eps * one_m_eps);
                    }
                    if (c) {
                        double ur = 0.0;
                        for (int j = 0; j < 4; ++j) {
                            ur += tr[j] * re[j];
                            sum_c_r[j] += re[j];
                        }
                        U += ur;
                    }
                }
            }

            if (sat_active) {
                const double x = t0 + U;
                const double sat_ll =
                    sat[s] == 1 ? log_sigmoid(x) : log_sigmoid(-x);
                ll += sat_ll;
                if (pt) pt->satisfaction += sat_ll;
                if (g) {
                    const double resid = static_cast<double>(sat[s]) - sigmoid(x);
                    g[L.tau_0] += resid;
                    if (td)
                        for (int j = 0; j < 3; ++j)
                            g[L.tau_d + j] += resid * sum_ehat_d[j];
                    for (int j = 0; j < 4; ++j)
                        g[L.tau_r + j] += resid * sum_c_r[j];
                    for (const auto& [i, coef] : sat_buf) {
                        const double* ph = &phi[static_cast<size_t>(i) * F];
                        for (int j = 0; j < F; ++j)
                            g[j] += resid * coef * ph[j];
                    }
                }
            }
        }
        return ll;
    }

    bool regularized(int j) const {
        if (j > 0 && j < L.F) return true;                       // attention weights
        if (j >= L.alpha_w && j < L.alpha_w + 4) return true;    // alpha weights
        if (L.tau_d >= 0 && j >= L.tau_d && j < L.tau_d + 3) return true;
        if (L.tau_r >= 0 && j >= L.tau_r && j < L.tau_r + 4) return true;
        return false;  // intercepts and fixation miss logit
    }

    // Fixed chunking; partial sums reduced in chunk order so the result does
    // not depend on the thread count.
    static constexpr size_t kChunk = 256;

    double evaluate(const double* th, double* g, PerTermLoglik* pt) const {
        const size_t n_chunks = (n_sessions + kChunk - 1) / kChunk;
        double ll = 0.0;
        if (threads <= 1 || n_chunks <= 1) {
            ll = eval_range(0, n_sessions, th, g, pt);
        } else {
            std::vector<double> partial_ll(n_chunks, 0.0);
            std::vector<std::vector<double>> partial_g(
                g ? n_chunks : 0, std::vector<double>());
            std::vector<PerTermLoglik> partial_pt(pt ? n_chunks : 0);
            std::atomic<size_t> next{0};
            auto worker = [&] {
                for (;;) {
                    const size_t c = next.fetch_add(1);
                    if (c >= n_chunks) return;
                    const size_t s0 = c * kChunk;
                    const size_t s1 = std::min(s0 + kChunk, n_sessions);
                    double* gp = nullptr;
                    if (g) {
                        partial_g[c].assign(static_cast<size_t>(L.dim), 0.0);
                        gp = partial_g[c].data();
                    }
                    partial_ll[c] = eval_range(s0, s1, th, gp,
                                               pt ? &partial_pt[c] : nullptr);
                }
            };
            std::vector<std::thread> pool;
            const size_t n_workers =
                std::min<size_t>(static_cast<size_t>(threads), n_chunks);
            pool.reserve(n_workers);
            for (size_t t = 0; t < n_workers; ++t) pool.emplace_back(worker);
            for (auto& t : pool) t.join();
            for (size_t c = 0; c < n_chunks; ++c) {
                ll += partial_ll[c];
                if (g)
                    for (int j = 0; j < L.dim; ++j) g[j] += partial_g[c][j];
                if (pt) {
                    pt->mouse += partial_pt[c].mouse;
                    pt->click += partial_pt[c].click;
                    pt->satisfaction += partial_pt[c].satisfaction;
                }
            }
        }
        if (lambda > 0) {
            double pen = 0.0;
            for (int j = 0; j < L.dim; ++j) {
                if (!regularized(j)) continue;
                pen += th[j] * th[j];
                if (g) g[j] -= lambda * th[j];
            }
            ll -= 0.5 * lambda * pen;
        }
        return ll;
    }
};

CasObjective::CasObjective(std::span<const Session> sessions,
                           const ModelVariant& variant,
                           const FeatureNormalization& norms, double reg_lambda,
                           int threads)
    : impl_(std::make_unique<Impl>()) {
    if (sessions.empty()) throw Error("training: no sessions");
    Impl& im = *impl_;
    im.variant = variant;
    im.L = pack_layout(variant);
    im.lambda = reg_lambda;
    im.threads = std::max(1, threads);
    im.n_sessions = sessions.size();

    size_t total = 0;
    for (const Session& s : sessions) total += s.items.size();
    im.n_items = total;
    const int F = im.L.F;
    im.phi.resize(total * static_cast<size_t>(F));
    im.r_eff.resize(total * 4);
    im.d_eff.resize(total * 3);
    im.clicked.resize(total);
    im.fixated.resize(total);
    im.start.resize(sessions.size() + 1, 0);
    im.sat.resize(sessions.size());

    size_t i = 0;
    for (size_t s = 0; s < sessions.size(); ++s) {
        im.start[s] = static_cast<uint32_t>(i);
        im.sat[s] = sessions[s].satisfaction.has_value()
                        ? static_cast<int8_t>(*sessions[s].satisfaction ? 1 : 0)
                        : static_cast<int8_t>(-1);
        if (im.sat[s] >= 0) ++im.n_labeled;
        for (const SerpItem& it : sessions[s].items) {
            const FeatureVector fv = extract_features(it, variant, norms);
            std::copy(fv.values.begin(), fv.values.end(),
                      im.phi.begin() + static_cast<ptrdiff_t>(i) * F);
            const std::vector<double> re = it.r_ratings.effective();
            const std::vector<double> de = it.d_ratings.effective();
            if (re.size() != 4 || de.size() != 3)
                throw Error("training: session " + sessions[s].session_id +
                            " has malformed rating histograms");
            std::copy(re.begin(), re.end(), im.r_eff.begin() + i * 4);
            std::copy(de.begin(), de.end(), im.d_eff.begin() + i * 3);
            im.clicked[i] = it.clicked ? 1 : 0;
            im.fixated[i] = it.mouse_fixated ? 1 : 0;
            ++i;
        }
    }
    im.start[sessions.size()] = static_cast<uint32_t>(i);
}

CasObjective::~CasObjective() = default;

int CasObjective::dim() const { return impl_->L.dim; }
size_t CasObjective::n_items() const { return impl_->n_items; }
size_t CasObjective::n_labeled_sessions() const { return impl_->n_labeled; }

double CasObjective::value(std::span<const double> theta) const {
    return impl_->evaluate(theta.data(), nullptr, nullptr);
}

double CasObjective::value_and_grad(std::span<const double> theta,
                                    std::span<double> grad) const {
    std::fill(grad.begin(), grad.end(), 0.0);
    return impl_->evaluate(theta.data(), grad.data(), nullptr);
}

PerTermLoglik CasObjective::per_term(std::span<const double> theta) const {
    PerTermLoglik pt;
    Impl& im = *impl_;
    // unpenalized; single pass is fine, this is not on the optimization path
    im.eval_range(0, im.n_sessions, theta.data(), nullptr, &pt);
    return pt;
}

std::vector<double> CasObjective::curvature_scales() const {
    const Impl& im = *impl_;
    const PackLayout& L = im.L;
    std::vector<double> curv(static_cast<size_t>(L.dim), 0.0);
    const double b = 0.25;  // max Bernoulli variance
    for (size_t i = 0; i < im.n_items; ++i) {
        const double* ph = &im.phi[i * static_cast<size_t>(L.F)];
        for (int j = 0; j < L.F; ++j) curv[static_cast<size_t>(j)] += b * ph[j] * ph[j];
        curv[static_cast<size_t>(L.alpha0)] += b;
        const double* re = &im.r_eff[i * 4];
        for (int j = 0; j < 4; ++j)
            curv[static_cast<size_t>(L.alpha_w + j)] += b * re[j] * re[j];
        curv[static_cast<size_t>(L.rho)] += b;
    }
    if (L.tau_0 >= 0) {
        for (size_t s = 0; s < im.n_sessions; ++s) {
            if (im.sat[s] < 0) continue;
            curv[static_cast<size_t>(L.tau_0)] += b;
            double sd[3] = {0, 0, 0}, sr[4] = {0, 0, 0, 0};
            for (uint32_t i = im.start[s]; i < im.start[s + 1]; ++i) {
                if (L.tau_d >= 0)
                    for (int j = 0; j < 3; ++j) sd[j] += im.d_eff[i * 3u + static_cast<size_t>(j)];
                if (im.clicked[i])
                    for (int j = 0; j < 4; ++j) sr[j] += im.r_eff[i * 4u + static_cast<size_t>(j)];
            }
            if (L.tau_d >= 0)
                for (int j = 0; j < 3; ++j)
                    curv[static_cast<size_t>(L.tau_d + j)] += b * sd[j] * sd[j];
            for (int j = 0; j < 4; ++j)
                curv[static_cast<size_t>(L.tau_r + j)] += b * sr[j] * sr[j];
        }
    }
    std::vector<double> scales(curv.size());
    for (size_t j = 0; j < curv.size(); ++j) {
        double c = curv[j] + (im.regularized(static_cast<int>(j)) ? im.lambda : 0.0);
        scales[j] = std::sqrt(std::max(c, 1e-2));
    }
    return scales;
}

// ---------------------------------------------------------------------------

double session_loglik(const Session& session, const CasModel& model) {
    const Session* one = &session;
    CasObjective obj(std::span<const Session>(one, 1), model.variant,
                     model.norms, 0.0, 1);
    return obj.value(pack_params(model.params, model.variant));
}

PerTermLoglik session_loglik_terms(const Session& session,
                                   const CasModel& model) {
    const Session* one = &session;
    CasObjective obj(std::span<const Session>(one, 1), model.variant,
                     model.norms, 0.0, 1);
    return obj.per_term(pack_params(model.params, model.variant));
}

double total_objective(std::span<const Session> sessions, const CasParams& params,
                       const TrainConfig& config,
                       const FeatureNormalization& norms) {
    CasObjective obj(sessions, config.variant, norms, config.variant.reg_lambda,
                     config.threads);
    return obj.value(pack_params(params, config.variant));
}

std::vector<double> gradient(std::span<const Session> sessions,
                             const CasParams& params, const TrainConfig& config,
                             const FeatureNormalization& norms) {
    CasObjective obj(sessions, config.variant, norms, config.variant.reg_lambda,
                     config.threads);
    std::vector<double> g(static_cast<size_t>(obj.dim()), 0.0);
    obj.value_and_grad(pack_params(params, config.variant), g);
    return g;
}

FitResult fit_with_norms(std::span<const Session> sessions,
                         const TrainConfig& config,
                         const FeatureNormalization& norms) {
    CasObjective obj(sessions, config.variant, norms, config.variant.reg_lambda,
                     config.threads);
    if (config.variant.use_sat_term && obj.n_labeled_sessions() == 0)
        std::cerr << "warning: satisfaction term enabled but no labeled "
                     "sessions in the training data\n";

    const size_t dim = static_cast<size_t>(obj.dim());
    std::vector<double> x0(dim, 0.0);
    if (config.init_scale > 0) {
        Rng rng(mix_seed(config.seed, 0x1217));
        for (double& x : x0)
            x = rng.uniform(-config.init_scale, config.init_scale);
    }

    // optimize in preconditioned coordinates y = scale * x
    const std::vector<double> scale = obj.curvature_scales();
    double max_scale = 1.0;
    for (double s : scale) max_scale = std::max(max_scale, s);

    LbfgsOptions opts;
    opts.memory = config.lbfgs_memory;
    opts.max_iterations = config.max_iterations;
    opts.grad_tolerance = config.grad_tolerance / max_scale;
    opts.wolfe = true;

    std::vector<double> x(dim);
    const auto fg = [&](std::span<const double> y, std::span<double> g) {
        for (size_t j = 0; j < dim; ++j) x[j] = y[j] / scale[j];
        const double v = obj.value_and_grad(x, g);
        for (size_t j = 0; j < dim; ++j) g[j] = -g[j] / scale[j];
        return -v;
    };
    std::vector<double> y0(dim);
    for (size_t j = 0; j < dim; ++j) y0[j] = x0[j] * scale[j];
    const LbfgsResult r = lbfgs_minimize(fg, std::move(y0), opts);

    std::vector<double> theta(dim);
    for (size_t j = 0; j < dim; ++j) theta[j] = r.x[j] / scale[j];
    std::vector<double> grad(dim);
    const double objective = obj.value_and_grad(theta, grad);
    double sup = 0.0;
    for (double gj : grad) sup = std::max(sup, std::abs(gj));

    FitResult out;
    out.params = unpack_params(theta, config.variant);
    out.norms = norms;
    out.final_objective = objective;
    out.iterations = r.iterations;
    out.grad_sup_norm = sup;
    out.converged = sup <= config.grad_tolerance;
    out.per_term_loglik = obj.per_term(theta);
    return out;
}

FitResult fit(std::span<const Session> sessions, const TrainConfig& config) {
    return fit_with_norms(sessions, config, fit_normalization(sessions));
}

}  // namespace cas
