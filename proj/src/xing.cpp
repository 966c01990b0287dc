#include <algorithm>
#include <cmath>
#include <memory>

#include "metriq/learners.hpp"

namespace metriq {

namespace {

constexpr double kSqrtGuard = 1e-15;

struct PairData {
    std::vector<Vec> similar;     // squared per-feature differences, sigma = 3
    std::vector<Vec> dissimilar;  // squared per-feature differences, sigma = 1
};

PairData pack(const std::vector<RatingExample>& ratings, int feature_count) {
    PairData data;
    for (const auto& ex : ratings) {
        if (ex.sigma != 1 && ex.sigma != 3) continue;  // neutral pairs don't enter the program
        if (static_cast<int>(ex.x.size()) != feature_count ||
            static_cast<int>(ex.x2.size()) != feature_count)
            throw InputError("rating feature vectors do not match the declared feature count");
        Vec d(ex.x.size());
        for (std::size_t k = 0; k < d.size(); ++k) {
            const double diff = ex.x[k] - ex.x2[k];
            d[k] = diff * diff;
        }
        (ex.sigma == 3 ? data.similar : data.dissimilar).push_back(std::move(d));
    }
    if (data.similar.empty() || data.dissimilar.empty())
        throw InputError("degenerate rating set: need at least one similar and one dissimilar pair");
    bool any_nonzero = false;
    for (const auto& d : data.dissimilar)
        for (double v : d)
            if (v > 0.0) any_nonzero = true;
    if (!any_nonzero)
        throw InputError("degenerate rating set: every dissimilar pair has identical features");
    return data;
}

double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace

double dissimilarity_sum(const MetricWeights& r, const std::vector<RatingExample>& ratings) {
    double h = 0.0;
    for (const auto& ex : ratings)
        if (ex.sigma == 1) h += std::sqrt(weighted_sq_dist(r, ex.x, ex.x2));
    return h;
}

Objective xing_objective(const std::vector<RatingExample>& ratings, int feature_count) {
    auto data = std::make_shared<PairData>(pack(ratings, feature_count));

    Objective obj;
    obj.value = [data](const Vec& r) {
        double sim = 0.0;
        for (const auto& d : data->similar) sim += dot(r, d);
        double h = 0.0;
        for (const auto& d : data->dissimilar) h += std::sqrt(std::max(dot(r, d), 0.0));
        return sim - std::log(h);  // h == 0 yields +inf, rejected by the line search
    };
    obj.gradient = [data](const Vec& r) {
        Vec grad(r.size(), 0.0);
        for (const auto& d : data->similar)
            for (std::size_t k = 0; k < r.size(); ++k) grad[k] += d[k];
        double h = 0.0;
        std::vector<double> dists(data->dissimilar.size());
        for (std::size_t i = 0; i < data->dissimilar.size(); ++i) {
            dists[i] = std::sqrt(std::max(dot(r, data->dissimilar[i]), 0.0));
            h += dists[i];
        }
        for (std::size_t i = 0; i < data->dissimilar.size(); ++i) {
            const double scale = 1.0 / (h * 2.0 * std::max(dists[i], kSqrtGuard));
            const Vec& d = data->dissimilar[i];
            for (std::size_t k = 0; k < r.size(); ++k) grad[k] -= scale * d[k];
        }
        return grad;
    };
    obj.project = [](Vec& r) {
        for (double& v : r) v = std::max(v, 0.0);
    };
    return obj;
}

MetricWeights fit_xing(const std::vector<RatingExample>& ratings, int feature_count,
                       const SolverConfig& cfg, SolverResult* diagnostics) {
    Objective obj = xing_objective(ratings, feature_count);
    Vec init(static_cast<std::size_t>(feature_count), 1.0);
    // Along the all-ones ray the surrogate g(t*1) = t*F - log(sqrt(t)*h) is
    // minimized at t = 1/(2F); starting there keeps the iterates at the
    // barrier's natural scale.
    double sim_sum = 0.0;
    for (const auto& ex : ratings)
        if (ex.sigma == 3) sim_sum += weighted_sq_dist(init, ex.x, ex.x2);
    if (sim_sum > 0.0)
        for (double& v : init) v = 1.0 / (2.0 * sim_sum);
    SolverResult res = minimize(obj, std::move(init), cfg);
    MetricWeights r = res.params;
    // The surrogate's stationary point solves the constrained program after
    // rescaling: the squared distance is 1-homogeneous in r, so dividing by
    // h^2 puts the dissimilarity sum at 1. The slight overshoot keeps the
    // constraint satisfied under floating-point rounding.
    const double h = dissimilarity_sum(r, ratings);
    if (!(h > 0.0)) throw NumericError("dissimilarity sum vanished after optimization", r);
    const double scale = (1.0 + 1e-9) / (h * h);
    for (double& v : r) v *= scale;
    if (diagnostics) *diagnostics = std::move(res);
    return r;
}

}  // namespace metriq
