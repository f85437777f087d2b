#include "cas/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

namespace cas {

namespace {

constexpr double kTinyProb = 1e-300;

double safe_log(double x) { return std::log(std::max(x, kTinyProb)); }

}  // namespace

double PbmParams::gamma_at(int rank) const {
    if (gamma.empty()) throw Error("PbmParams: empty gamma table");
    const size_t i = static_cast<size_t>(std::max(1, rank)) - 1;
    return i < gamma.size() ? gamma[i] : gamma.back();
}

double UbmParams::gamma_at(int rank, int prev_click_rank) const {
    if (gamma.empty()) throw Error("UbmParams: empty gamma table");
    const size_t r = std::min<size_t>(static_cast<size_t>(std::max(1, rank)),
                                      gamma.size());
    const auto& row = gamma[r - 1];
    const size_t rp =
        std::min<size_t>(static_cast<size_t>(std::max(0, prev_click_rank)),
                         row.size() - 1);
    return row[rp];
}

int relevance_bucket(const RatingHistogram& r) {
    return static_cast<int>(std::floor(r.mean_grade() + 0.5));
}

PbmParams fit_pbm(std::span<const Session> sessions, EmTrace* trace,
                  int max_iter, double tol) {
    if (sessions.empty()) throw Error("fit_pbm: no sessions");
    size_t depth = 0;
    for (const Session& s : sessions) depth = std::max(depth, s.items.size());

    PbmParams p;
    p.gamma.assign(depth, 0.5);
    p.attr.fill(0.2);

    if (trace) *trace = EmTrace{};
    for (int iter = 0; iter < max_iter; ++iter) {
        std::vector<double> g_num(depth, 0.0), g_den(depth, 0.0);
        std::array<double, 4> a_num{}, a_den{};
        for (const Session& s : sessions) {
            for (size_t k = 0; k < s.items.size(); ++k) {
                const double gamma = p.gamma[k];
                const int b = relevance_bucket(s.items[k].r_ratings);
                const double attr = p.attr[static_cast<size_t>(b)];
                g_den[k] += 1.0;
                a_den[static_cast<size_t>(b)] += 1.0;
                if (s.items[k].clicked) {
                    g_num[k] += 1.0;
                    a_num[static_cast<size_t>(b)] += 1.0;
                } else {
                    const double no_click =
                        std::max(1.0 - gamma * attr, kTinyProb);
                    g_num[k] += gamma * (1.0 - attr) / no_click;
                    a_num[static_cast<size_t>(b)] += attr * (1.0 - gamma) / no_click;
                }
            }
        }
        double delta = 0.0;
        for (size_t k = 0; k < depth; ++k) {
            if (g_den[k] == 0) continue;
            const double nv = g_num[k] / g_den[k];
            delta = std::max(delta, std::abs(nv - p.gamma[k]));
            p.gamma[k] = nv;
        }
        for (size_t b = 0; b < 4; ++b) {
            if (a_den[b] == 0) continue;
            const double nv = a_num[b] / a_den[b];
            delta = std::max(delta, std::abs(nv - p.attr[b]));
            p.attr[b] = nv;
        }
        if (trace) {
            double ll = 0.0;
            for (const Session& s : sessions)
                for (size_t k = 0; k < s.items.size(); ++k) {
                    const double q =
                        p.gamma[k] *
                        p.attr[static_cast<size_t>(
                            relevance_bucket(s.items[k].r_ratings))];
                    ll += s.items[k].clicked ? safe_log(q) : safe_log(1.0 - q);
                }
            trace->loglik.push_back(ll);
            trace->iterations = iter + 1;
        }
        if (delta < tol) {
            if (trace) trace->converged = true;
            break;
        }
    }
    return p;
}

namespace {

// rank of the most recent click strictly before position k (1-based), 0 if none
std::vector<int> prev_click_ranks(const Session& s) {
    std::vector<int> prev(s.items.size(), 0);
    int last = 0;
    for (size_t k = 0; k < s.items.size(); ++k) {
        prev[k] = last;
        if (s.items[k].clicked) last = static_cast<int>(k) + 1;
    }
    return prev;
}

}  // namespace

UbmParams fit_ubm(std::span<const Session> sessions, EmTrace* trace,
                  int max_iter, double tol) {
    if (sessions.empty()) throw Error("fit_ubm: no sessions");
    size_t depth = 0;
    for (const Session& s : sessions) depth = std::max(depth, s.items.size());

    UbmParams p;
    p.gamma.resize(depth);
    for (size_t r = 0; r < depth; ++r) p.gamma[r].assign(r + 1, 0.5);
    p.attr.fill(0.2);

    if (trace) *trace = EmTrace{};
    for (int iter = 0; iter < max_iter; ++iter) {
        std::vector<std::vector<double>> g_num(depth), g_den(depth);
        for (size_t r = 0; r < depth; ++r) {
            g_num[r].assign(r + 1, 0.0);
            g_den[r].assign(r + 1, 0.0);
        }
        std::array<double, 4> a_num{}, a_den{};
        for (const Session& s : sessions) {
            const std::vector<int> prev = prev_click_ranks(s);
            for (size_t k = 0; k < s.items.size(); ++k) {
                const size_t rp = static_cast<size_t>(prev[k]);
                const double gamma = p.gamma[k][rp];
                const int b = relevance_bucket(s.items[k].r_ratings);
                const double attr = p.attr[static_cast<size_t>(b)];
                g_den[k][rp] += 1.0;
                a_den[static_cast<size_t>(b)] += 1.0;
                if (s.items[k].clicked) {
                    g_num[k][rp] += 1.0;
                    a_num[static_cast<size_t>(b)] += 1.0;
                } else {
                    const double no_click =
                        std::max(1.0 - gamma * attr, kTinyProb);
                    g_num[k][rp] += gamma * (1.0 - attr) / no_click;
                    a_num[static_cast<size_t>(b)] += attr * (1.0 - gamma) / no_click;
                }
            }
        }
        double delta = 0.0;
        for (size_t r = 0; r < depth; ++r)
            for (size_t rp = 0; rp <= r; ++rp) {
                if (g_den[r][rp] == 0) continue;
                const double nv = g_num[r][rp] / g_den[r][rp];
                delta = std::max(delta, std::abs(nv - p.gamma[r][rp]));
                p.gamma[r][rp] = nv;
            }
        for (size_t b = 0; b < 4; ++b) {
            if (a_den[b] == 0) continue;
            const double nv = a_num[b] / a_den[b];
            delta = std::max(delta, std::abs(nv - p.attr[b]));
            p.attr[b] = nv;
        }
        if (trace) {
            double ll = 0.0;
            for (const Session& s : sessions) {
                const std::vector<int> prev = prev_click_ranks(s);
                for (size_t k = 0; k < s.items.size(); ++k) {
                    const double q =
                        p.gamma[k][static_cast<size_t>(prev[k])] *
                        p.attr[static_cast<size_t>(
                            relevance_bucket(s.items[k].r_ratings))];
                    ll += s.items[k].clicked ? safe_log(q) : safe_log(1.0 - q);
                }
            }
            trace->loglik.push_back(ll);
            trace->iterations = iter + 1;
        }
        if (delta < tol) {
            if (trace) trace->converged = true;
            break;
        }
    }
    return p;
}

RandomParams fit_random(std::span<const Session> sessions) {
    if (sessions.empty()) throw Error("fit_random: no sessions");
    size_t items = 0, clicks = 0, labeled = 0, satisfied = 0;
    for (const Session& s : sessions) {
        items += s.items.size();
        for (const SerpItem& it : s.items) clicks += it.clicked ? 1 : 0;
        if (s.labeled()) {
            ++labeled;
            satisfied += *s.satisfaction ? 1 : 0;
        }
    }
    RandomParams p;
    p.p_click = items ? static_cast<double>(clicks) / static_cast<double>(items)
                      : 0.0;
    if (labeled == 0) {
        std::cerr << "warning: fit_random: no labeled sessions, p_sat = 0.5\n";
        p.p_sat = 0.5;
    } else {
        p.p_sat = static_cast<double>(satisfied) / static_cast<double>(labeled);
    }
    return p;
}

double dcg(std::span<const SerpItem> serp, int depth) {
    if (depth < 1) throw Error("dcg: depth must be >= 1");
    double out = 0.0;
    const size_t n = std::min(serp.size(), static_cast<size_t>(depth));
    for (size_t k = 0; k < n; ++k) {
        const int b = relevance_bucket(serp[k].r_ratings);
        out += (std::pow(2.0, b) - 1.0) /
               std::log2(static_cast<double>(k) + 2.0);
    }
    return out;
}

std::vector<double> pbm_click_probs(const PbmParams& p,
                                    std::span<const SerpItem> serp) {
    std::vector<double> out(serp.size());
    for (size_t k = 0; k < serp.size(); ++k)
        out[k] = p.gamma_at(static_cast<int>(k) + 1) *
                 p.attr[static_cast<size_t>(relevance_bucket(serp[k].r_ratings))];
    return out;
}

std::vector<double> ubm_marginal_click_probs(const UbmParams& p,
                                             std::span<const SerpItem> serp) {
    const size_t n = serp.size();
    // state[rp] = P(most recent click so far is at rank rp), rp = 0 for none
    std::vector<double> state(n + 1, 0.0);
    state[0] = 1.0;
    std::vector<double> out(n, 0.0);
    for (size_t k = 0; k < n; ++k) {
        const double attr =
            p.attr[static_cast<size_t>(relevance_bucket(serp[k].r_ratings))];
        double p_click = 0.0;
        for (size_t rp = 0; rp <= k; ++rp) {
            if (state[rp] == 0.0) continue;
            const double q =
                p.gamma_at(static_cast<int>(k) + 1, static_cast<int>(rp)) * attr;
            p_click += state[rp] * q;
            state[rp] *= 1.0 - q;
        }
        out[k] = p_click;
        state[k + 1] = p_click;
    }
    return out;
}

std::vector<double> ubm_conditional_click_probs(const UbmParams& p,
                                                const Session& session) {
    std::vector<double> out(session.items.size());
    const std::vector<int> prev = prev_click_ranks(session);
    for (size_t k = 0; k < session.items.size(); ++k) {
        out[k] = p.gamma_at(static_cast<int>(k) + 1, prev[k]) *
                 p.attr[static_cast<size_t>(
                     relevance_bucket(session.items[k].r_ratings))];
    }
    return out;
}

namespace {

double expected_clicked_relevance(std::span<const double> click_probs,
                                  std::span<const SerpItem> serp) {
    double u = 0.0;
    for (size_t k = 0; k < serp.size(); ++k)
        u += click_probs[k] * relevance_bucket(serp[k].r_ratings);
    return u;
}

}  // namespace

double pbm_utility(const PbmParams& p, std::span<const SerpItem> serp) {
    return expected_clicked_relevance(pbm_click_probs(p, serp), serp);
}

double ubm_utility(const UbmParams& p, std::span<const SerpItem> serp) {
    return expected_clicked_relevance(ubm_marginal_click_probs(p, serp), serp);
}

double random_utility(const RandomParams& p, std::span<const SerpItem> serp) {
    double buckets = 0.0;
    for (const SerpItem& it : serp) buckets += relevance_bucket(it.r_ratings);
    return p.p_click * buckets;
}

double fit_sat_intercept(std::span<const double> utilities,
                         std::span<const int> labels) {
    if (utilities.size() != labels.size())
        throw Error("fit_sat_intercept: size mismatch");
    if (utilities.empty()) return 0.0;
    // d/dc of the log-likelihood: sum(s - sigma(u + c)); strictly decreasing
    const auto slope = [&](double c) {
        double g = 0.0;
        for (size_t i = 0; i < utilities.size(); ++i)
            g += static_cast<double>(labels[i]) -
                 1.0 / (1.0 + std::exp(-(utilities[i] + c)));
        return g;
    };
    double lo = -15.0, hi = 15.0;
    if (slope(lo) <= 0) return lo;
    if (slope(hi) >= 0) return hi;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (slope(mid) > 0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace cas
