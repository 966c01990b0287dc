#include "metriq/metric.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace metriq {

bool all_finite(const Vec& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

SoftLabel one_hot(int num_classes, int class_index) {
    if (class_index < 1 || class_index > num_classes)
        throw InputError("class index " + std::to_string(class_index) + " outside 1.." +
                         std::to_string(num_classes));
    SoftLabel u(static_cast<std::size_t>(num_classes), 0.0);
    u[static_cast<std::size_t>(class_index - 1)] = 1.0;
    return u;
}

bool is_soft_label(const SoftLabel& u, double tol) {
    double total = 0.0;
    for (double x : u) {
        if (!std::isfinite(x) || x < 0.0) return false;
        total += x;
    }
    return std::abs(total - 1.0) <= tol;
}

SymmetricMatrix::SymmetricMatrix(int dim, double fill)
    : dim_(dim), upper_(upper_size(dim), fill) {
    if (dim < 0) throw InputError("matrix dimension must be nonnegative");
}

SymmetricMatrix SymmetricMatrix::from_upper(int dim, Vec upper) {
    if (upper.size() != upper_size(dim))
        throw InputError("expected " + std::to_string(upper_size(dim)) +
                         " upper-triangle entries, got " + std::to_string(upper.size()));
    SymmetricMatrix q(dim);
    q.upper_ = std::move(upper);
    return q;
}

std::size_t SymmetricMatrix::upper_index(int a, int b) const {
    if (a > b) std::swap(a, b);
    if (a < 0 || b >= dim_) throw InputError("matrix index out of range");
    // row a starts after the a previous rows of lengths dim_, dim_-1, ...
    return static_cast<std::size_t>(a) * dim_ - static_cast<std::size_t>(a) * (a - 1) / 2 +
           static_cast<std::size_t>(b - a);
}

double SymmetricMatrix::bilinear(const Vec& u, const Vec& v) const {
    if (static_cast<int>(u.size()) != dim_ || static_cast<int>(v.size()) != dim_)
        throw InputError("soft label length does not match matrix dimension");
    double total = 0.0;
    for (int a = 0; a < dim_; ++a) {
        if (u[a] == 0.0) continue;
        double row = 0.0;
        for (int b = 0; b < dim_; ++b) row += (*this)(a, b) * v[b];
        total += u[a] * row;
    }
    return total;
}

double weighted_sq_dist(const MetricWeights& r, const FeatureVec& x, const FeatureVec& y) {
    if (r.size() != x.size() || x.size() != y.size())
        throw InputError("weighted_sq_dist: dimension mismatch");
    double total = 0.0;
    for (std::size_t k = 0; k < r.size(); ++k) {
        const double d = x[k] - y[k];
        total += r[k] * d * d;
    }
    return total;
}

double hybrid_sq_dist(const MetricWeights& r, const SymmetricMatrix& q, const FeatureVec& x,
                      const FeatureVec& y, const SoftLabel& u, const SoftLabel& u2) {
    return weighted_sq_dist(r, x, y) + q.bilinear(u, u2);
}

std::vector<RankedNeighbor> rank_neighbors(const std::function<double(std::size_t)>& distance_to_query,
                                           std::size_t database_size, std::size_t k) {
    if (database_size == 0) throw InputError("rank_neighbors: empty database");
    if (k == 0 || k > database_size)
        throw InputError("rank_neighbors: k = " + std::to_string(k) + " outside 1.." +
                         std::to_string(database_size));
    std::vector<RankedNeighbor> all(database_size);
    for (std::size_t i = 0; i < database_size; ++i) all[i] = {i, distance_to_query(i)};
    std::sort(all.begin(), all.end(), [](const RankedNeighbor& a, const RankedNeighbor& b) {
        if (a.distance != b.distance) return a.distance < b.distance;
        return a.index < b.index;
    });
    all.resize(k);
    return all;
}

}  // namespace metriq
