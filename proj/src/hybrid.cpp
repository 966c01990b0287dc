#include <algorithm>
#include <cmath>
#include <memory>

#include "metriq/learners.hpp"

namespace metriq {

namespace {

constexpr double kSqrtGuard = 1e-15;

const SoftLabel& label_of(const std::map<ObjectId, SoftLabel>& labels, const ObjectId& id) {
    auto it = labels.find(id);
    if (it == labels.end()) throw InputError("no soft label for object '" + id + "'");
    return it->second;
}

// Each pair contributes t = r . sq_diff + q_upper . coeff, with coeff the
// symmetrized outer product of the two soft labels over the upper triangle.
struct HybridPairs {
    std::size_t k = 0;
    std::size_t t = 0;  // M(M+1)/2
    std::vector<Vec> similar;     // concatenated [sq_diff, coeff]
    std::vector<Vec> dissimilar;
};

Vec pack_pair(const RatingExample& ex, const std::map<ObjectId, SoftLabel>& labels,
              int feature_count, int class_count) {
    if (static_cast<int>(ex.x.size()) != feature_count ||
        static_cast<int>(ex.x2.size()) != feature_count)
        throw InputError("rating feature vectors do not match the declared feature count");
    const SoftLabel& u = label_of(labels, ex.o);
    const SoftLabel& u2 = label_of(labels, ex.o2);
    if (static_cast<int>(u.size()) != class_count || static_cast<int>(u2.size()) != class_count)
        throw InputError("soft label length does not match the class count");
    const std::size_t k = static_cast<std::size_t>(feature_count);
    Vec packed(k + SymmetricMatrix::upper_size(class_count));
    for (std::size_t f = 0; f < k; ++f) {
        const double d = ex.x[f] - ex.x2[f];
        packed[f] = d * d;
    }
    std::size_t idx = k;
    for (int a = 0; a < class_count; ++a)
        for (int b = a; b < class_count; ++b)
            packed[idx++] = a == b ? u[a] * u2[a] : u[a] * u2[b] + u[b] * u2[a];
    return packed;
}

HybridPairs pack(const std::vector<RatingExample>& ratings,
                 const std::map<ObjectId, SoftLabel>& labels, int feature_count, int class_count) {
    HybridPairs pairs;
    pairs.k = static_cast<std::size_t>(feature_count);
    pairs.t = SymmetricMatrix::upper_size(class_count);
    for (const auto& ex : ratings) {
        if (ex.sigma != 1 && ex.sigma != 3) continue;
        (ex.sigma == 3 ? pairs.similar : pairs.dissimilar)
            .push_back(pack_pair(ex, labels, feature_count, class_count));
    }
    if (pairs.similar.empty() || pairs.dissimilar.empty())
        throw InputError("degenerate rating set: need at least one similar and one dissimilar pair");
    return pairs;
}

double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

KdeClassifier trivial_classifier(const std::vector<LabeledExample>& G) {
    KdeClassifier clf;
    clf.w.assign(G.empty() ? 0 : G.front().x.size(), 0.0);
    clf.train = G;
    clf.priors = {1.0};
    clf.lambda_used = 0.0;
    clf.num_classes = 1;
    return clf;
}

}  // namespace

double hybrid_sq_dist(const HybridModel& m, const FeatureVec& x, const FeatureVec& x2,
                      const SoftLabel& u, const SoftLabel& u2) {
    return hybrid_sq_dist(m.r, m.q, x, x2, u, u2);
}

KdeClassifier fit_soft_classifier(const std::vector<LabeledExample>& G, int feature_count,
                                  int class_count, const Vec& lambda_grid, double split_fraction,
                                  Rng& rng, const SolverConfig& cfg, LambdaSelection* selection) {
    if (class_count == 1) {
        if (G.empty()) throw InputError("label set is empty");
        return trivial_classifier(G);
    }
    return fit_kde_classifier(G, feature_count, class_count, lambda_grid, split_fraction, rng, cfg,
                              selection);
}

double hybrid_dissimilarity_sum(const MetricWeights& r, const SymmetricMatrix& q,
                                const std::vector<RatingExample>& ratings,
                                const std::map<ObjectId, SoftLabel>& labels) {
    double h = 0.0;
    for (const auto& ex : ratings) {
        if (ex.sigma != 1) continue;
        h += std::sqrt(std::max(
            hybrid_sq_dist(r, q, ex.x, ex.x2, label_of(labels, ex.o), label_of(labels, ex.o2)),
            0.0));
    }
    return h;
}

Objective hybrid_objective(const std::vector<RatingExample>& ratings,
                           const std::map<ObjectId, SoftLabel>& labels, int feature_count,
                           int class_count) {
    auto pairs =
        std::make_shared<HybridPairs>(pack(ratings, labels, feature_count, class_count));

    Objective obj;
    obj.value = [pairs](const Vec& p) {
        double sim = 0.0;
        for (const auto& d : pairs->similar) sim += dot(p, d);
        double h = 0.0;
        for (const auto& d : pairs->dissimilar) h += std::sqrt(std::max(dot(p, d), 0.0));
        return sim - std::log(h);
    };
    obj.gradient = [pairs](const Vec& p) {
        Vec grad(p.size(), 0.0);
        for (const auto& d : pairs->similar)
            for (std::size_t i = 0; i < p.size(); ++i) grad[i] += d[i];
        double h = 0.0;
        std::vector<double> dists(pairs->dissimilar.size());
        for (std::size_t j = 0; j < pairs->dissimilar.size(); ++j) {
            dists[j] = std::sqrt(std::max(dot(p, pairs->dissimilar[j]), 0.0));
            h += dists[j];
        }
        for (std::size_t j = 0; j < pairs->dissimilar.size(); ++j) {
            const double scale = 1.0 / (h * 2.0 * std::max(dists[j], kSqrtGuard));
            const Vec& d = pairs->dissimilar[j];
            for (std::size_t i = 0; i < p.size(); ++i) grad[i] -= scale * d[i];
        }
        return grad;
    };
    obj.project = [](Vec& p) {
        for (double& v : p) v = std::max(v, 0.0);
    };
    return obj;
}

HybridModel fit_hybrid_with_classifier(const std::vector<RatingExample>& S,
                                       const std::vector<LabeledExample>& G,
                                       KdeClassifier classifier, int feature_count,
                                       int class_count, const SolverConfig& cfg,
                                       SolverResult* diagnostics) {
    if (G.empty()) throw InputError("fit_hybrid requires a nonempty label set");
    const auto labels = soft_labels(S, G, classifier);
    Objective obj = hybrid_objective(S, labels, feature_count, class_count);

    const std::size_t k = static_cast<std::size_t>(feature_count);
    const std::size_t t = SymmetricMatrix::upper_size(class_count);
    Vec init(k + t, 1.0);
    // small positive class-pair offsets keep every pair distance strictly
    // positive at the start even when features coincide
    for (std::size_t i = k; i < init.size(); ++i) init[i] = 1e-3;
    // start at the ray-optimal scale, as in fit_xing
    double sim_sum = 0.0;
    const MetricWeights ones(k, 1.0);
    for (const auto& ex : S)
        if (ex.sigma == 3) sim_sum += weighted_sq_dist(ones, ex.x, ex.x2) + 1e-3;
    if (sim_sum > 0.0)
        for (double& v : init) v /= 2.0 * sim_sum;

    SolverResult res = minimize(obj, std::move(init), cfg);

    HybridModel model;
    model.r.assign(res.params.begin(), res.params.begin() + feature_count);
    model.q = SymmetricMatrix::from_upper(class_count,
                                          Vec(res.params.begin() + feature_count, res.params.end()));
    const double h = hybrid_dissimilarity_sum(model.r, model.q, S, labels);
    if (!(h > 0.0)) throw NumericError("dissimilarity sum vanished after optimization", res.params);
    // squared hybrid distance is jointly 1-homogeneous in (r, Q)
    const double scale = (1.0 + 1e-9) / (h * h);
    for (double& v : model.r) v *= scale;
    for (double& v : model.q.upper()) v *= scale;
    model.classifier = std::move(classifier);
    if (diagnostics) *diagnostics = std::move(res);
    return model;
}

HybridModel fit_hybrid(const std::vector<RatingExample>& S, const std::vector<LabeledExample>& G,
                       int feature_count, int class_count, Rng& rng, const SolverConfig& cfg,
                       SolverResult* diagnostics) {
    if (G.empty()) throw InputError("fit_hybrid requires a nonempty label set");
    KdeClassifier clf = fit_soft_classifier(G, feature_count, class_count, kDefaultLambdaGrid,
                                            kDefaultSplitFraction, rng, cfg);
    return fit_hybrid_with_classifier(S, G, std::move(clf), feature_count, class_count, cfg,
                                      diagnostics);
}

}  // namespace metriq
