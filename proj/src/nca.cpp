#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "lambda_select.hpp"
#include "metriq/learners.hpp"

namespace metriq {

namespace {

void check_examples(const std::vector<LabeledExample>& G, int feature_count) {
    if (G.size() < 2) throw InputError("label set needs at least 2 examples");
    for (const auto& ex : G)
        if (static_cast<int>(ex.x.size()) != feature_count)
            throw InputError("labeled feature vectors do not match the declared feature count");
    if (detail::distinct_classes(G) < 2)
        throw InputError("label set contains a single class");
}

// Flattened squared per-feature differences for every ordered pair (i, j),
// i != j; shared by the objective's value and gradient closures.
struct PairTable {
    std::size_t n = 0;
    std::size_t k = 0;
    std::vector<int> classes;
    Vec sq_diffs;  // (i * n + j) * k

    const double* at(std::size_t i, std::size_t j) const { return &sq_diffs[(i * n + j) * k]; }
};

std::shared_ptr<PairTable> build_pairs(const std::vector<LabeledExample>& G, int feature_count) {
    auto table = std::make_shared<PairTable>();
    table->n = G.size();
    table->k = static_cast<std::size_t>(feature_count);
    table->classes.reserve(G.size());
    for (const auto& ex : G) table->classes.push_back(ex.c);
    table->sq_diffs.assign(table->n * table->n * table->k, 0.0);
    for (std::size_t i = 0; i < table->n; ++i)
        for (std::size_t j = 0; j < table->n; ++j) {
            if (i == j) continue;
            double* out = &table->sq_diffs[(i * table->n + j) * table->k];
            for (std::size_t f = 0; f < table->k; ++f) {
                const double d = G[i].x[f] - G[j].x[f];
                out[f] = d * d;
            }
        }
    return table;
}

}  // namespace

double nca_prob(const MetricWeights& r, const std::vector<LabeledExample>& G, const FeatureVec& x,
                int c, std::ptrdiff_t exclude) {
    double max_neg = -std::numeric_limits<double>::infinity();
    std::vector<double> neg_sq(G.size());
    bool any = false;
    for (std::size_t j = 0; j < G.size(); ++j) {
        if (static_cast<std::ptrdiff_t>(j) == exclude) continue;
        neg_sq[j] = -weighted_sq_dist(r, x, G[j].x);
        max_neg = std::max(max_neg, neg_sq[j]);
        any = true;
    }
    if (!any) throw InputError("nca_prob: no reference points");
    double total = 0.0, same = 0.0;
    for (std::size_t j = 0; j < G.size(); ++j) {
        if (static_cast<std::ptrdiff_t>(j) == exclude) continue;
        const double e = std::exp(neg_sq[j] - max_neg);
        total += e;
        if (G[j].c == c) same += e;
    }
    return std::max(same / total, kProbFloor);
}

double nca_loo_prob(const MetricWeights& r, const std::vector<LabeledExample>& G,
                    std::size_t held_out) {
    if (held_out >= G.size()) throw InputError("nca_loo_prob: index out of range");
    return nca_prob(r, G, G[held_out].x, G[held_out].c, static_cast<std::ptrdiff_t>(held_out));
}

Objective nca_objective(const std::vector<LabeledExample>& G, int feature_count, double lambda) {
    check_examples(G, feature_count);
    if (lambda < 0.0) throw InputError("lambda must be nonnegative");
    auto table = build_pairs(G, feature_count);

    Objective obj;
    obj.value = [table, lambda](const Vec& r) {
        const std::size_t n = table->n, k = table->k;
        double neg_ll = 0.0;
        Vec sq_cache(n);
        for (std::size_t i = 0; i < n; ++i) {
            double max_neg = -std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < n; ++j) {
                if (i == j) continue;
                const double* d = table->at(i, j);
                double sq = 0.0;
                for (std::size_t f = 0; f < k; ++f) sq += r[f] * d[f];
                sq_cache[j] = sq;
                max_neg = std::max(max_neg, -sq);
            }
            double total = 0.0, same = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (i == j) continue;
                const double e = std::exp(-sq_cache[j] - max_neg);
                total += e;
                if (table->classes[j] == table->classes[i]) same += e;
            }
            neg_ll -= std::log(std::max(same / total, kProbFloor));
        }
        for (std::size_t f = 0; f < k; ++f) neg_ll += lambda * r[f];
        return neg_ll;
    };
    obj.gradient = [table, lambda](const Vec& r) {
        const std::size_t n = table->n, k = table->k;
        Vec grad(k, lambda);
        Vec e(n), sq_cache(n);
        Vec mean_all(k), mean_same(k);
        for (std::size_t i = 0; i < n; ++i) {
            double max_neg = -std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < n; ++j) {
                if (i == j) continue;
                const double* d = table->at(i, j);
                double sq = 0.0;
                for (std::size_t f = 0; f < k; ++f) sq += r[f] * d[f];
                sq_cache[j] = sq;
                max_neg = std::max(max_neg, -sq);
            }
            double total = 0.0, same = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (i == j) continue;
                e[j] = std::exp(-sq_cache[j] - max_neg);
                total += e[j];
                if (table->classes[j] == table->classes[i]) same += e[j];
            }
            if (same / total < kProbFloor || same == 0.0) continue;  // clipped: flat
            std::fill(mean_all.begin(), mean_all.end(), 0.0);
            std::fill(mean_same.begin(), mean_same.end(), 0.0);
            for (std::size_t j = 0; j < n; ++j) {
                if (i == j) continue;
                const double* d = table->at(i, j);
                const double w_all = e[j] / total;
                for (std::size_t f = 0; f < k; ++f) mean_all[f] += w_all * d[f];
                if (table->classes[j] == table->classes[i]) {
                    const double w_same = e[j] / same;
                    for (std::size_t f = 0; f < k; ++f) mean_same[f] += w_same * d[f];
                }
            }
            // d(log p_i)/dr = E_all[diff^2] - E_same[diff^2]; negate for descent
            for (std::size_t f = 0; f < k; ++f) grad[f] += mean_same[f] - mean_all[f];
        }
        return grad;
    };
    obj.project = [](Vec& r) {
        for (double& v : r) v = std::max(v, 0.0);
    };
    return obj;
}

NcaModel fit_nca(const std::vector<LabeledExample>& G, int feature_count, double lambda,
                 const SolverConfig& cfg, SolverResult* diagnostics) {
    Objective obj = nca_objective(G, feature_count, lambda);
    Vec init(static_cast<std::size_t>(feature_count), 1.0);
    SolverResult res = minimize(obj, std::move(init), cfg);
    NcaModel model{res.params, lambda};
    if (diagnostics) *diagnostics = std::move(res);
    return model;
}

NcaModel fit_nca_with_selection(const std::vector<LabeledExample>& G, int feature_count,
                                const Vec& lambda_grid, double split_fraction, Rng& rng,
                                const SolverConfig& cfg, LambdaSelection* selection) {
    check_examples(G, feature_count);
    const double lambda = detail::select_lambda(
        G, lambda_grid, split_fraction, rng,
        [&](const std::vector<LabeledExample>& train, double lam) {
            return fit_nca(train, feature_count, lam, cfg).r;
        },
        [&](const MetricWeights& r, const std::vector<LabeledExample>& train,
            const std::vector<LabeledExample>& validation) {
            double ll = 0.0;
            for (const auto& ex : validation) ll += std::log(nca_prob(r, train, ex.x, ex.c));
            return ll;
        },
        selection);
    return fit_nca(G, feature_count, lambda, cfg);
}

}  // namespace metriq
