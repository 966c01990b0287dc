#ifndef METRIQ_SRC_LAMBDA_SELECT_HPP
#define METRIQ_SRC_LAMBDA_SELECT_HPP

#include <numeric>
#include <set>
#include <vector>

#include "metriq/dataset.hpp"
#include "metriq/learners.hpp"
#include "metriq/rng.hpp"

namespace metriq::detail {

struct SelectionSplit {
    std::vector<LabeledExample> train;
    std::vector<LabeledExample> validation;
};

inline int distinct_classes(const std::vector<LabeledExample>& g) {
    std::set<int> classes;
    for (const auto& ex : g) classes.insert(ex.c);
    return static_cast<int>(classes.size());
}

/// Random train/validation partition; redrawn up to 20 times until both sides
/// hold at least two classes.
inline SelectionSplit split_for_selection(const std::vector<LabeledExample>& G,
                                          double split_fraction, Rng& rng) {
    if (!(split_fraction > 0.0 && split_fraction < 1.0))
        throw InputError("split fraction must be in (0, 1)");
    const std::size_t n = G.size();
    const std::size_t n_train =
        static_cast<std::size_t>(std::llround(split_fraction * static_cast<double>(n)));
    if (n_train < 2 || n - n_train < 2)
        throw InputError("label set too small to split for selection");

    std::vector<std::size_t> order(n);
    for (int attempt = 0; attempt < 20; ++attempt) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        rng.shuffle(order);
        SelectionSplit split;
        split.train.reserve(n_train);
        split.validation.reserve(n - n_train);
        for (std::size_t i = 0; i < n; ++i)
            (i < n_train ? split.train : split.validation).push_back(G[order[i]]);
        if (distinct_classes(split.train) >= 2 && distinct_classes(split.validation) >= 2)
            return split;
    }
    throw InputError("could not draw a selection split with two classes on both sides");
}

/// Sweeps the grid: fit(train, lambda), score(model, train, validation);
/// returns the argmax lambda with ties to the smaller value.
template <class FitFn, class ScoreFn>
double select_lambda(const std::vector<LabeledExample>& G, const Vec& grid, double split_fraction,
                     Rng& rng, FitFn&& fit, ScoreFn&& score, LambdaSelection* out) {
    if (grid.empty()) throw InputError("lambda grid is empty");
    SelectionSplit split = split_for_selection(G, split_fraction, rng);

    double best_lambda = grid.front();
    double best_score = -std::numeric_limits<double>::infinity();
    Vec scores;
    scores.reserve(grid.size());
    for (double lambda : grid) {
        auto model = fit(split.train, lambda);
        const double s = score(model, split.train, split.validation);
        scores.push_back(s);
        if (s > best_score) {
            best_score = s;
            best_lambda = lambda;
        }
    }
    if (out) {
        out->lambda = best_lambda;
        out->grid = grid;
        out->validation_scores = std::move(scores);
    }
    return best_lambda;
}

}  // namespace metriq::detail

#endif
