#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "lambda_select.hpp"
#include "metriq/learners.hpp"

namespace metriq {

namespace {

Vec class_priors(const std::vector<LabeledExample>& G, int class_count) {
    Vec priors(static_cast<std::size_t>(class_count), 0.0);
    for (const auto& ex : G) {
        if (ex.c < 1 || ex.c > class_count)
            throw InputError("class index " + std::to_string(ex.c) + " outside 1.." +
                             std::to_string(class_count));
        priors[ex.c - 1] += 1.0;
    }
    for (double& p : priors) p /= static_cast<double>(G.size());
    return priors;
}

/// Per-class mean kernel densities scaled by the priors; tolerates empty
/// classes (density 0) and falls back to the priors when everything
/// underflows to zero.
Vec posterior_impl(const Vec& w, const std::vector<LabeledExample>& train, const Vec& priors,
                   const FeatureVec& x) {
    const int m = static_cast<int>(priors.size());
    Vec weighted(m, 0.0);
    std::vector<int> counts(m, 0);
    for (const auto& ex : train) {
        weighted[ex.c - 1] += std::exp(-weighted_sq_dist(w, x, ex.x));
        counts[ex.c - 1] += 1;
    }
    double total = 0.0;
    for (int c = 0; c < m; ++c) {
        weighted[c] = counts[c] > 0 ? priors[c] * weighted[c] / counts[c] : 0.0;
        total += weighted[c];
    }
    if (total == 0.0) return priors;
    for (double& v : weighted) v /= total;
    return weighted;
}

struct KdePairTable {
    std::size_t n = 0;
    std::size_t k = 0;
    int m = 0;
    std::vector<int> classes;  // 0-based
    std::vector<int> class_counts;
    Vec priors;
    Vec sq_diffs;  // (i * n + j) * k

    const double* at(std::size_t i, std::size_t j) const { return &sq_diffs[(i * n + j) * k]; }
};

std::shared_ptr<KdePairTable> build_table(const std::vector<LabeledExample>& G, int feature_count,
                                          int class_count) {
    auto t = std::make_shared<KdePairTable>();
    t->n = G.size();
    t->k = static_cast<std::size_t>(feature_count);
    t->m = class_count;
    t->priors = class_priors(G, class_count);
    t->class_counts.assign(class_count, 0);
    for (const auto& ex : G) {
        t->classes.push_back(ex.c - 1);
        t->class_counts[ex.c - 1] += 1;
    }
    t->sq_diffs.assign(t->n * t->n * t->k, 0.0);
    for (std::size_t i = 0; i < t->n; ++i)
        for (std::size_t j = 0; j < t->n; ++j) {
            if (i == j) continue;
            double* out = &t->sq_diffs[(i * t->n + j) * t->k];
            for (std::size_t f = 0; f < t->k; ++f) {
                const double d = G[i].x[f] - G[j].x[f];
                out[f] = d * d;
            }
        }
    return t;
}

void check_fit_inputs(const std::vector<LabeledExample>& G, int feature_count) {
    if (G.size() < 2) throw InputError("label set needs at least 2 examples");
    for (const auto& ex : G)
        if (static_cast<int>(ex.x.size()) != feature_count)
            throw InputError("labeled feature vectors do not match the declared feature count");
    if (detail::distinct_classes(G) < 2)
        throw InputError("label set contains a single class");
}

}  // namespace

SoftLabel kde_posterior(const KdeClassifier& clf, const FeatureVec& x) {
    if (clf.train.empty()) throw InputError("kde_posterior: classifier has no training points");
    std::vector<int> counts(clf.num_classes, 0);
    for (const auto& ex : clf.train) {
        if (ex.c < 1 || ex.c > clf.num_classes)
            throw InputError("kde_posterior: training class outside 1.." +
                             std::to_string(clf.num_classes));
        counts[ex.c - 1] += 1;
    }
    for (int c = 0; c < clf.num_classes; ++c)
        if (counts[c] == 0)
            throw InputError("kde_posterior: class " + std::to_string(c + 1) +
                             " has no training points");
    return posterior_impl(clf.w, clf.train, clf.priors, x);
}

Objective kde_objective(const std::vector<LabeledExample>& G, int feature_count, int class_count,
                        double lambda) {
    check_fit_inputs(G, feature_count);
    if (lambda < 0.0) throw InputError("lambda must be nonnegative");
    auto t = build_table(G, feature_count, class_count);

    Objective obj;
    obj.value = [t, lambda](const Vec& w) {
        const std::size_t n = t->n, k = t->k;
        double neg_ll = 0.0;
        Vec density(t->m);
        for (std::size_t i = 0; i < n; ++i) {
            const int ci = t->classes[i];
            if (t->class_counts[ci] == 1) {
                // no other member of the held-out class: prior fallback
                neg_ll -= std::log(std::max(t->priors[ci], kProbFloor));
                continue;
            }
            std::fill(density.begin(), density.end(), 0.0);
            for (std::size_t j = 0; j < n; ++j) {
                if (i == j) continue;
                const double* d = t->at(i, j);
                double sq = 0.0;
                for (std::size_t f = 0; f < k; ++f) sq += w[f] * d[f];
                density[t->classes[j]] += std::exp(-sq);
            }
            double z = 0.0, own = 0.0;
            for (int c = 0; c < t->m; ++c) {
                const int cnt = t->class_counts[c] - (c == ci ? 1 : 0);
                if (cnt == 0) continue;
                const double dc = t->priors[c] * density[c] / cnt;
                z += dc;
                if (c == ci) own = dc;
            }
            const double post = z > 0.0 ? own / z : t->priors[ci];
            neg_ll -= std::log(std::max(post, kProbFloor));
        }
        for (std::size_t f = 0; f < k; ++f) neg_ll += lambda * w[f];
        return neg_ll;
    };
    obj.gradient = [t, lambda](const Vec& w) {
        const std::size_t n = t->n, k = t->k;
        Vec grad(k, lambda);
        Vec density(t->m);
        Vec density_grad(static_cast<std::size_t>(t->m) * k);
        Vec e(n);
        for (std::size_t i = 0; i < n; ++i) {
            const int ci = t->classes[i];
            if (t->class_counts[ci] == 1) continue;  // prior fallback: constant in w
            std::fill(density.begin(), density.end(), 0.0);
            std::fill(density_grad.begin(), density_grad.end(), 0.0);
            for (std::size_t j = 0; j < n; ++j) {
                if (i == j) continue;
                const double* d = t->at(i, j);
                double sq = 0.0;
                for (std::size_t f = 0; f < k; ++f) sq += w[f] * d[f];
                e[j] = std::exp(-sq);
                density[t->classes[j]] += e[j];
                double* dg = &density_grad[static_cast<std::size_t>(t->classes[j]) * k];
                for (std::size_t f = 0; f < k; ++f) dg[f] += e[j] * d[f];
            }
            double z = 0.0, own = 0.0;
            Vec scaled(t->m, 0.0);
            for (int c = 0; c < t->m; ++c) {
                const int cnt = t->class_counts[c] - (c == ci ? 1 : 0);
                if (cnt == 0) continue;
                scaled[c] = t->priors[c] / cnt;
                z += scaled[c] * density[c];
                if (c == ci) own = scaled[c] * density[c];
            }
            if (z <= 0.0) continue;  // underflow fallback: constant in w
            const double post = own / z;
            if (post < kProbFloor || own <= 0.0) continue;  // clipped: flat
            // d(-log post)/dw = A_ci/D_ci - (sum_c A_c)/Z with
            // A_c = scaled_c * sum_{j in c} e_ij * diff^2
            for (std::size_t f = 0; f < k; ++f) {
                double sum_all = 0.0;
                for (int c = 0; c < t->m; ++c)
                    sum_all += scaled[c] * density_grad[static_cast<std::size_t>(c) * k + f];
                const double own_grad =
                    scaled[ci] * density_grad[static_cast<std::size_t>(ci) * k + f];
                grad[f] += own_grad / own - sum_all / z;
            }
        }
        return grad;
    };
    obj.project = [](Vec& w) {
        for (double& v : w) v = std::max(v, 0.0);
    };
    return obj;
}

KdeClassifier fit_kde_classifier(const std::vector<LabeledExample>& G, int feature_count,
                                 int class_count, const Vec& lambda_grid, double split_fraction,
                                 Rng& rng, const SolverConfig& cfg, LambdaSelection* selection) {
    check_fit_inputs(G, feature_count);

    auto fit_weights = [&](const std::vector<LabeledExample>& train, double lambda) {
        Objective obj = kde_objective(train, feature_count, class_count, lambda);
        Vec init(static_cast<std::size_t>(feature_count), 1.0);
        return minimize(obj, std::move(init), cfg).params;
    };
    const double lambda = detail::select_lambda(
        G, lambda_grid, split_fraction, rng, fit_weights,
        [&](const Vec& w, const std::vector<LabeledExample>& train,
            const std::vector<LabeledExample>& validation) {
            const Vec priors = class_priors(train, class_count);
            double ll = 0.0;
            for (const auto& ex : validation) {
                const Vec post = posterior_impl(w, train, priors, ex.x);
                ll += std::log(std::max(post[ex.c - 1], kProbFloor));
            }
            return ll;
        },
        selection);

    KdeClassifier clf;
    clf.w = fit_weights(G, lambda);
    clf.train = G;
    clf.priors = class_priors(G, class_count);
    clf.lambda_used = lambda;
    clf.num_classes = class_count;
    return clf;
}

std::map<ObjectId, SoftLabel> soft_labels(const std::vector<RatingExample>& S,
                                          const std::vector<LabeledExample>& G,
                                          const KdeClassifier& clf) {
    std::map<ObjectId, SoftLabel> labels;
    for (const auto& ex : G) labels[ex.o] = one_hot(clf.num_classes, ex.c);
    for (const auto& ex : S) {
        if (labels.find(ex.o) == labels.end()) labels[ex.o] = kde_posterior(clf, ex.x);
        if (labels.find(ex.o2) == labels.end()) labels[ex.o2] = kde_posterior(clf, ex.x2);
    }
    return labels;
}

}  // namespace metriq
