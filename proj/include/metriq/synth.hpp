#ifndef METRIQ_SYNTH_HPP
#define METRIQ_SYNTH_HPP

#include <utility>
#include <vector>

#include "metriq/dataset.hpp"
#include "metriq/metric.hpp"
#include "metriq/rng.hpp"

namespace metriq {

struct Matrix {
    int rows = 0, cols = 0;
    Vec data;  // row-major

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}
    double& at(int i, int j) { return data[static_cast<std::size_t>(i) * cols + j]; }
    double at(int i, int j) const { return data[static_cast<std::size_t>(i) * cols + j]; }
};

/// A^T v.
Vec transpose_times(const Matrix& a, const Vec& v);

/// Mixture of Gaussians with covariance factor^T factor per component.
struct GaussianMixture {
    Vec weights;                  // normalized, positive
    std::vector<Vec> means;       // one D-vector per component
    std::vector<Matrix> factors;  // one DxD matrix per component

    /// Draws one sample: component by weight, then mean + factor^T * (iid standard normals).
    Vec sample(Rng& rng) const;
};

/// Ground truth used to simulate data: per-class mixtures over observed
/// features x (5 components) and missing features z (2 components), class
/// priors, and the true metric weights for both feature blocks.
struct GenerativeModel {
    Vec class_priors;                        // M entries summing to 1
    std::vector<GaussianMixture> x_mixtures; // one per class, over R^K
    std::vector<GaussianMixture> z_mixtures; // one per class, over R^J
    Vec r_true;                              // K nonnegative weights
    Vec r_perp_true;                         // J nonnegative weights
};

struct SyntheticObject {
    ObjectId o;
    FeatureVec x;  // observed
    FeatureVec z;  // missing at learning time, used only to simulate ratings
    int c = 0;
};

/// Provenance of one generated rating set: the noisy pair distances and the
/// two quantile cuts that discretized them.
struct RatingGenReport {
    Vec y_values;  // one per directed pair, in pair enumeration order
    double threshold_q20 = 0.0;
    double threshold_q50 = 0.0;
    double noise_sd = 0.0;
};

/// Samples a fresh generative model: mixture scales and priors from U[0.5,1.5],
/// component means standard normal, factor entries N(0, 1/D), r ~ Exp(rate 1),
/// r_perp ~ Exp(rate 0.2).
GenerativeModel sample_generative_model(Rng& rng, int feature_count, int missing_count,
                                        int class_count);

/// Draws n objects: class from the priors, then x and z independently given
/// the class. Ids are "o1".."oN".
std::vector<SyntheticObject> sample_objects(const GenerativeModel& model, int n, Rng& rng);

/// Rates every directed pair (a,b), a != b: the true squared distance over x
/// and z plus N(0, noise_sd^2) noise, cut at the empirical 20th percentile
/// (similar) and median (neutral vs dissimilar).
std::pair<std::vector<RatingExample>, RatingGenReport> generate_ratings(
    const std::vector<SyntheticObject>& objects, const Vec& r_true, const Vec& r_perp_true,
    double noise_sd, Rng& rng);

/// Empirical quantile with linear interpolation between order statistics.
double interpolated_quantile(Vec values, double q);

}  // namespace metriq

#endif
