#pragma once

#include <functional>
#include <span>
#include <vector>

namespace cas {

struct LbfgsOptions {
    int memory = 10;
    int max_iterations = 500;
    // convergence on the sup-norm of the gradient
    double grad_tolerance = 1e-6;
    double armijo_c1 = 1e-4;
    // optional curvature (Wolfe) strengthening of the backtracking search
    bool wolfe = false;
    double wolfe_c2 = 0.9;
    int max_line_search = 50;
    // when set, receives f after every accepted step. Accepted steps never
    // increase f beyond rounding noise (1e-12 relative).
    std::vector<double>* f_trace = nullptr;
};

struct LbfgsResult {
    std::vector<double> x;
    double f = 0.0;
    int iterations = 0;
    bool converged = false;
    double grad_sup_norm = 0.0;
};

// f and gradient in one evaluation: fg(x, grad_out) -> f(x).
using ObjectiveFn =
    std::function<double(std::span<const double>, std::span<double>)>;

// Limited-memory BFGS minimizer with backtracking line search. Non-finite
// trial values are treated as line-search failures (step rejected). If no
// acceptable step exists the best iterate is returned with converged=false
// unless the gradient already satisfies the tolerance.
LbfgsResult lbfgs_minimize(const ObjectiveFn& fg, std::vector<double> x0,
                           const LbfgsOptions& opts);

}  // namespace cas
