#include <algorithm>
#include <cmath>
#include <memory>

#include "metriq/learners.hpp"

namespace metriq {

namespace {

double logistic(double t) { return 1.0 / (1.0 + std::exp(-t)); }

// P(sigma <= v) = logistic(d^2 + theta_v), with theta_0 = -inf and theta_3 = +inf.
double cumulative(double sq_dist, const OrdinalModel& m, int v) {
    switch (v) {
        case 0: return 0.0;
        case 1: return logistic(sq_dist + m.theta1);
        case 2: return logistic(sq_dist + m.theta2);
        default: return 1.0;
    }
}

void check_level(int level) {
    if (level < 1 || level > 3)
        throw InputError("rating level must be 1, 2 or 3, got " + std::to_string(level));
}

struct PackedRatings {
    // squared per-feature differences per rating, plus the level
    std::vector<Vec> sq_diffs;
    std::vector<int> sigma;
    int feature_count = 0;
};

PackedRatings pack(const std::vector<RatingExample>& ratings, int feature_count) {
    if (ratings.empty()) throw InputError("rating set is empty");
    PackedRatings packed;
    packed.feature_count = feature_count;
    packed.sq_diffs.reserve(ratings.size());
    packed.sigma.reserve(ratings.size());
    for (const auto& ex : ratings) {
        if (static_cast<int>(ex.x.size()) != feature_count ||
            static_cast<int>(ex.x2.size()) != feature_count)
            throw InputError("rating feature vectors do not match the declared feature count");
        check_level(ex.sigma);
        Vec d(ex.x.size());
        for (std::size_t k = 0; k < d.size(); ++k) {
            const double diff = ex.x[k] - ex.x2[k];
            d[k] = diff * diff;
        }
        packed.sq_diffs.push_back(std::move(d));
        packed.sigma.push_back(ex.sigma);
    }
    return packed;
}

}  // namespace

double ordinal_prob(const OrdinalModel& m, const FeatureVec& x, const FeatureVec& x2, int level) {
    check_level(level);
    if (m.theta1 > m.theta2) throw InputError("ordinal model requires theta1 <= theta2");
    const double sq = weighted_sq_dist(m.r, x, x2);
    return cumulative(sq, m, level) - cumulative(sq, m, level - 1);
}

double ordinal_log_likelihood(const OrdinalModel& m, const std::vector<RatingExample>& ratings) {
    double ll = 0.0;
    for (const auto& ex : ratings)
        ll += std::log(std::max(ordinal_prob(m, ex.x, ex.x2, ex.sigma), kProbFloor));
    return ll;
}

Objective ordinal_objective(const std::vector<RatingExample>& ratings, int feature_count) {
    auto packed = std::make_shared<PackedRatings>(pack(ratings, feature_count));
    const std::size_t k = static_cast<std::size_t>(feature_count);

    Objective obj;
    obj.value = [packed, k](const Vec& p) {
        double neg_ll = 0.0;
        for (std::size_t i = 0; i < packed->sq_diffs.size(); ++i) {
            double sq = 0.0;
            const Vec& d = packed->sq_diffs[i];
            for (std::size_t j = 0; j < k; ++j) sq += p[j] * d[j];
            const int v = packed->sigma[i];
            const double upper = v == 3 ? 1.0 : logistic(sq + p[k + (v == 1 ? 0 : 1)]);
            const double lower = v == 1 ? 0.0 : logistic(sq + p[k + (v == 2 ? 0 : 1)]);
            neg_ll -= std::log(std::max(upper - lower, kProbFloor));
        }
        return neg_ll;
    };
    obj.gradient = [packed, k](const Vec& p) {
        Vec grad(p.size(), 0.0);
        for (std::size_t i = 0; i < packed->sq_diffs.size(); ++i) {
            double sq = 0.0;
            const Vec& d = packed->sq_diffs[i];
            for (std::size_t j = 0; j < k; ++j) sq += p[j] * d[j];
            const int v = packed->sigma[i];
            // slopes of the two cumulative logits bounding level v
            const double upper = v == 3 ? 1.0 : logistic(sq + p[k + (v == 1 ? 0 : 1)]);
            const double lower = v == 1 ? 0.0 : logistic(sq + p[k + (v == 2 ? 0 : 1)]);
            const double prob = upper - lower;
            if (prob < kProbFloor) continue;  // clipped region is flat
            const double d_upper = v == 3 ? 0.0 : upper * (1.0 - upper);
            const double d_lower = v == 1 ? 0.0 : lower * (1.0 - lower);
            const double d_sq = (d_upper - d_lower) / prob;
            for (std::size_t j = 0; j < k; ++j) grad[j] -= d_sq * d[j];
            if (v == 1) grad[k] -= d_upper / prob;
            if (v == 2) {
                grad[k] -= -d_lower / prob;
                grad[k + 1] -= d_upper / prob;
            }
            if (v == 3) grad[k + 1] -= -d_lower / prob;
        }
        return grad;
    };
    obj.project = [k](Vec& p) {
        for (std::size_t j = 0; j < k; ++j) p[j] = std::max(p[j], 0.0);
        if (p[k] > p[k + 1]) {
            const double mid = 0.5 * (p[k] + p[k + 1]);
            p[k] = mid;
            p[k + 1] = mid;
        }
    };
    return obj;
}

OrdinalModel fit_ordinal(const std::vector<RatingExample>& ratings, int feature_count,
                         const SolverConfig& cfg, SolverResult* diagnostics) {
    Objective obj = ordinal_objective(ratings, feature_count);
    Vec init(static_cast<std::size_t>(feature_count) + 2, 0.0);
    init[feature_count] = -1.0;
    init[feature_count + 1] = 1.0;
    SolverResult res = minimize(obj, std::move(init), cfg);
    OrdinalModel model;
    model.r.assign(res.params.begin(), res.params.begin() + feature_count);
    model.theta1 = res.params[feature_count];
    model.theta2 = res.params[feature_count + 1];
    if (diagnostics) *diagnostics = std::move(res);
    return model;
}

}  // namespace metriq
