#ifndef METRIQ_METRIC_HPP
#define METRIQ_METRIC_HPP

#include <cstddef>
#include <functional>
#include <vector>

#include "metriq/error.hpp"

namespace metriq {

using Vec = std::vector<double>;

/// Observed feature vector x of a single object.
using FeatureVec = Vec;

/// Per-feature nonnegative weights r of the weighted Euclidean metric.
using MetricWeights = Vec;

/// Probability vector over the M classes. One-hot for objects with a hard
/// class label, a classifier posterior for unlabeled ones.
using SoftLabel = Vec;

bool all_finite(const Vec& v);

/// One-hot soft label for a 1-based class index.
SoftLabel one_hot(int num_classes, int class_index);

/// True when u is nonnegative and sums to 1 within the given tolerance.
bool is_soft_label(const SoftLabel& u, double tol = 1e-9);

/// Symmetric nonnegative matrix stored as its upper triangle (row-major,
/// diagonal included). Symmetry is structural: there are exactly
/// m(m+1)/2 free entries and (a,b) and (b,a) read the same storage.
class SymmetricMatrix {
  public:
    SymmetricMatrix() = default;
    explicit SymmetricMatrix(int dim, double fill = 0.0);
    static SymmetricMatrix from_upper(int dim, Vec upper);

    int dim() const { return dim_; }
    static std::size_t upper_size(int dim) { return static_cast<std::size_t>(dim) * (dim + 1) / 2; }

    double operator()(int a, int b) const { return upper_[upper_index(a, b)]; }
    double& upper_at(int a, int b) { return upper_[upper_index(a, b)]; }

    const Vec& upper() const { return upper_; }
    Vec& upper() { return upper_; }

    /// u^T Q v for probability vectors of length dim().
    double bilinear(const Vec& u, const Vec& v) const;

  private:
    std::size_t upper_index(int a, int b) const;
    int dim_ = 0;
    Vec upper_;
};

/// Squared weighted Euclidean distance: sum_k r_k (x_k - y_k)^2.
double weighted_sq_dist(const MetricWeights& r, const FeatureVec& x, const FeatureVec& y);

/// Squared hybrid distance: weighted feature term plus the class-pair offset
/// u^T Q u2 that stands in for unobserved features.
double hybrid_sq_dist(const MetricWeights& r, const SymmetricMatrix& q, const FeatureVec& x,
                      const FeatureVec& y, const SoftLabel& u, const SoftLabel& u2);

struct RankedNeighbor {
    std::size_t index;  // position in the database
    double distance;
};

/// The k database entries closest to the query, ascending by distance;
/// ties broken by ascending insertion index. `distance_to_query(i)` must
/// return the distance of database entry i.
std::vector<RankedNeighbor> rank_neighbors(const std::function<double(std::size_t)>& distance_to_query,
                                           std::size_t database_size, std::size_t k);

}  // namespace metriq

#endif
