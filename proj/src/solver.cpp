#include "metriq/solver.hpp"

#include <cmath>

#include "metriq/error.hpp"

namespace metriq {

namespace {

constexpr double kMinStep = 1e-18;

void check_config(const SolverConfig& cfg) {
    if (!(cfg.initial_step > 0.0)) throw InputError("initial_step must be positive");
    if (!(cfg.backtrack_factor > 0.0 && cfg.backtrack_factor < 1.0))
        throw InputError("backtrack_factor must be in (0, 1)");
    if (!(cfg.armijo_c > 0.0 && cfg.armijo_c < 1.0))
        throw InputError("armijo_c must be in (0, 1)");
    if (!(cfg.grad_tol > 0.0)) throw InputError("grad_tol must be positive");
    if (cfg.max_iters < 1) throw InputError("max_iters must be >= 1");
}

}  // namespace

const char* termination_name(Termination t) {
    switch (t) {
        case Termination::gradient_tolerance: return "gradient_tolerance";
        case Termination::line_search_exhausted: return "line_search_exhausted";
        case Termination::max_iterations: return "max_iterations";
    }
    return "unknown";
}

SolverResult minimize(const Objective& objective, Vec init, const SolverConfig& cfg) {
    check_config(cfg);
    if (!objective.value || !objective.gradient)
        throw InputError("objective must provide value and gradient");

    auto project = [&](Vec& p) {
        if (objective.project) objective.project(p);
    };

    SolverResult result;
    Vec p = std::move(init);
    project(p);
    double f = objective.value(p);
    if (!std::isfinite(f)) throw NumericError("objective is non-finite at the initial point", p);
    result.trace.push_back(f);

    // warm-started backtracking: each iteration may start from twice the
    // previously accepted step, capped at the configured initial step
    double step_start = cfg.initial_step;

    int iter = 0;
    result.termination = Termination::max_iterations;
    for (; iter < cfg.max_iters; ++iter) {
        Vec g = objective.gradient(p);
        if (!all_finite(g)) throw NumericError("gradient is non-finite", p);

        // projected-gradient residual at unit step
        Vec probe(p.size());
        for (std::size_t i = 0; i < p.size(); ++i) probe[i] = p[i] - g[i];
        project(probe);
        double residual = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double d = p[i] - probe[i];
            residual += d * d;
        }
        if (std::sqrt(residual) < cfg.grad_tol) {
            result.termination = Termination::gradient_tolerance;
            break;
        }

        double step = step_start;
        bool accepted = false;
        Vec candidate(p.size());
        while (step >= kMinStep) {
            for (std::size_t i = 0; i < p.size(); ++i) candidate[i] = p[i] - step * g[i];
            project(candidate);
            const double fc = objective.value(candidate);
            double lin = 0.0;
            for (std::size_t i = 0; i < p.size(); ++i) lin += g[i] * (candidate[i] - p[i]);
            // non-finite trials fail the comparison and shrink the step
            if (fc <= f + cfg.armijo_c * lin) {
                p.swap(candidate);
                f = fc;
                accepted = true;
                break;
            }
            step *= cfg.backtrack_factor;
        }
        if (!accepted) {
            result.termination = Termination::line_search_exhausted;
            break;
        }
        result.trace.push_back(f);
        step_start = std::min(cfg.initial_step, step * 2.0);
    }

    result.params = std::move(p);
    result.final_value = f;
    result.iterations = iter;
    result.converged = result.termination != Termination::max_iterations;
    return result;
}

Vec finite_diff_gradient(const std::function<double(const Vec&)>& value, const Vec& p, double h) {
    if (!(h > 0.0)) throw InputError("finite difference step must be positive");
    Vec grad(p.size());
    Vec probe = p;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double saved = probe[i];
        probe[i] = saved + h;
        const double fp = value(probe);
        probe[i] = saved - h;
        const double fm = value(probe);
        probe[i] = saved;
        if (!std::isfinite(fp) || !std::isfinite(fm))
            throw NumericError("finite_diff_gradient: non-finite objective", probe);
        grad[i] = (fp - fm) / (2.0 * h);
    }
    return grad;
}

}  // namespace metriq
