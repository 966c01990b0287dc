#ifndef METRIQ_SRC_JSON_UTIL_HPP
#define METRIQ_SRC_JSON_UTIL_HPP

#include <json.hpp>

#include "metriq/solver.hpp"

namespace metriq::detail {

inline nlohmann::json solver_config_json(const SolverConfig& cfg) {
    return {{"initial_step", cfg.initial_step},
            {"backtrack_factor", cfg.backtrack_factor},
            {"armijo_c", cfg.armijo_c},
            {"grad_tol", cfg.grad_tol},
            {"max_iters", cfg.max_iters}};
}

inline SolverConfig solver_config_from_json(const nlohmann::json& j) {
    SolverConfig cfg;
    cfg.initial_step = j.at("initial_step").get<double>();
    cfg.backtrack_factor = j.at("backtrack_factor").get<double>();
    cfg.armijo_c = j.at("armijo_c").get<double>();
    cfg.grad_tol = j.at("grad_tol").get<double>();
    cfg.max_iters = j.at("max_iters").get<int>();
    return cfg;
}

}  // namespace metriq::detail

#endif
