#include "cas/lbfgs.hpp"

#include <cmath>
#include <cstddef>
#include <deque>

namespace cas {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double sup_norm(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

struct Correction {
    std::vector<double> s, y;
    double rho;
};

}  // namespace

LbfgsResult lbfgs_minimize(const ObjectiveFn& fg, std::vector<double> x0,
                           const LbfgsOptions& opts) {
    const size_t n = x0.size();

    std::vector<double> x = std::move(x0);
    std::vector<double> grad(n), new_grad(n), dir(n), trial(n);
    double f = fg(x, grad);
    double g_sup = sup_norm(grad);

    // best iterate: clearly lower f wins; within f noise, the smaller
    // gradient sup-norm wins
    std::vector<double> best_x = x, best_grad = grad;
    double best_f = f, best_sup = g_sup;

    LbfgsResult res;
    if (g_sup <= opts.grad_tolerance) {
        res.x = std::move(x);
        res.f = f;
        res.grad_sup_norm = g_sup;
        res.converged = true;
        return res;
    }

    std::deque<Correction> mem;
    std::vector<double> alpha_buf;
    int stall = 0;  // iterations since the best iterate improved
    int restarts_left = 2;
    constexpr int kMaxStall = 30;
    bool converged = false;
    int iter = 0;

    for (; iter < opts.max_iterations; ++iter) {
        // two-loop recursion: dir = -H * grad
        dir = grad;
        alpha_buf.assign(mem.size(), 0.0);
        for (size_t i = mem.size(); i-- > 0;) {
            const Correction& c = mem[i];
            alpha_buf[i] = c.rho * dot(c.s, dir);
            for (size_t j = 0; j < n; ++j) dir[j] -= alpha_buf[i] * c.y[j];
        }
        if (!mem.empty()) {
            const Correction& last = mem.back();
            const double gamma = dot(last.s, last.y) / dot(last.y, last.y);
            for (double& d : dir) d *= gamma;
        }
        for (size_t i = 0; i < mem.size(); ++i) {
            const Correction& c = mem[i];
            const double beta = c.rho * dot(c.y, dir);
            for (size_t j = 0; j < n; ++j) dir[j] += (alpha_buf[i] - beta) * c.s[j];
        }
        for (double& d : dir) d = -d;

        double dg = dot(dir, grad);
        if (!(dg < 0)) {
            for (size_t j = 0; j < n; ++j) dir[j] = -grad[j];
            dg = -dot(grad, grad);
            mem.clear();
        }

        // line search: Armijo backtracking, strengthened to weak Wolfe by
        // bisection. Near the optimum objective differences drown in rounding
        // noise while the analytic gradient stays informative, so noise-level
        // steps are accepted too (bounded by the stall counter below).
        const double f_noise = 1e-12 * (1.0 + std::abs(f));
        double lo = 0.0, hi = 0.0;  // hi 0 = unbounded
        double step = 1.0;
        double new_f = 0.0;
        bool accepted = false;
        for (int ls = 0; ls < opts.max_line_search; ++ls) {
            for (size_t j = 0; j < n; ++j) trial[j] = x[j] + step * dir[j];
            new_f = fg(trial, new_grad);
            if (!std::isfinite(new_f) ||
                new_f > f + opts.armijo_c1 * step * dg) {
                if (std::isfinite(new_f) && new_f <= f + f_noise) {
                    accepted = true;
                    break;
                }
                hi = step;
            } else if (opts.wolfe && dot(dir, new_grad) < opts.wolfe_c2 * dg) {
                lo = step;
            } else {
                accepted = true;
                break;
            }
            step = hi > 0.0 ? 0.5 * (lo + hi) : 2.0 * step;
        }
        if (!accepted) break;

        Correction c;
        c.s.resize(n);
        c.y.resize(n);
        for (size_t j = 0; j < n; ++j) {
            c.s[j] = trial[j] - x[j];
            c.y[j] = new_grad[j] - grad[j];
        }
        const double sy = dot(c.s, c.y);
        if (sy > 1e-10 * std::sqrt(dot(c.s, c.s)) * std::sqrt(dot(c.y, c.y))) {
            c.rho = 1.0 / sy;
            mem.push_back(std::move(c));
            if (static_cast<int>(mem.size()) > opts.memory) mem.pop_front();
        }

        x = trial;
        f = new_f;
        grad = new_grad;
        g_sup = sup_norm(grad);
        if (opts.f_trace) opts.f_trace->push_back(f);

        const bool improved =
            f < best_f - f_noise || (f <= best_f + f_noise && g_sup < best_sup);
        if (improved) {
            best_x = x;
            best_grad = grad;
            best_f = f;
            best_sup = g_sup;
            stall = 0;
        } else if (++stall >= kMaxStall) {
            if (restarts_left-- <= 0) {
                ++iter;
                break;
            }
            // resume from the best iterate with fresh curvature memory
            x = best_x;
            grad = best_grad;
            f = best_f;
            g_sup = best_sup;
            mem.clear();
            stall = 0;
        }
        if (best_sup <= opts.grad_tolerance) {
            ++iter;
            converged = true;
            break;
        }
    }

    res.x = std::move(best_x);
    res.f = best_f;
    res.grad_sup_norm = best_sup;
    res.iterations = iter;
    res.converged = converged;
    return res;
}

}  // namespace cas
