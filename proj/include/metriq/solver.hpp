#ifndef METRIQ_SOLVER_HPP
#define METRIQ_SOLVER_HPP

#include <functional>
#include <string>
#include <vector>

#include "metriq/metric.hpp"

namespace metriq {

/// A smooth objective with an optional Euclidean projection onto the feasible
/// set. `project` must be idempotent; a null project means unconstrained.
struct Objective {
    std::function<double(const Vec&)> value;
    std::function<Vec(const Vec&)> gradient;
    std::function<void(Vec&)> project;
};

struct SolverConfig {
    double initial_step = 1.0;
    double backtrack_factor = 0.5;
    double armijo_c = 1e-4;
    double grad_tol = 1e-6;
    int max_iters = 5000;
};

enum class Termination {
    gradient_tolerance,     // projected-gradient residual below grad_tol
    line_search_exhausted,  // no Armijo step found above the numeric floor
    max_iterations,
};

const char* termination_name(Termination t);

struct SolverResult {
    Vec params;
    double final_value = 0.0;
    int iterations = 0;
    bool converged = false;
    Termination termination = Termination::max_iterations;
    std::vector<double> trace;  // objective at the start and after each accepted step
};

/// Projected gradient descent with Armijo backtracking. Maximization callers
/// negate their objective. Throws NumericError if the objective or gradient is
/// non-finite at an accepted iterate; non-finite line-search trials are
/// treated as rejected steps.
SolverResult minimize(const Objective& objective, Vec init, const SolverConfig& cfg);

/// Central-difference gradient, (f(p + h e_i) - f(p - h e_i)) / (2h) per
/// coordinate. Test oracle for analytic gradients.
Vec finite_diff_gradient(const std::function<double(const Vec&)>& value, const Vec& p, double h);

}  // namespace metriq

#endif
