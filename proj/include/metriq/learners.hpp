#ifndef METRIQ_LEARNERS_HPP
#define METRIQ_LEARNERS_HPP

#include <cstdint>
#include <map>
#include <vector>

#include "metriq/dataset.hpp"
#include "metriq/metric.hpp"
#include "metriq/rng.hpp"
#include "metriq/solver.hpp"

namespace metriq {

/// Probabilities below this floor are clipped before logarithms.
inline constexpr double kProbFloor = 1e-12;

/// Default regularization grid and split used by cross-validated fits.
inline const Vec kDefaultLambdaGrid = {1.0, 2.0, 4.0, 8.0, 16.0};
inline constexpr double kDefaultSplitFraction = 0.7;

// ---------------------------------------------------------------------------
// Ordinal regression
// ---------------------------------------------------------------------------

/// Cumulative-logit model over the three rating levels with boundary
/// parameters theta1 <= theta2 (the third boundary is +infinity).
struct OrdinalModel {
    MetricWeights r;
    double theta1 = -1.0;
    double theta2 = 1.0;
};

/// P(sigma = level | x, x2) under the model; the three level probabilities
/// sum to 1.
double ordinal_prob(const OrdinalModel& m, const FeatureVec& x, const FeatureVec& x2, int level);

double ordinal_log_likelihood(const OrdinalModel& m, const std::vector<RatingExample>& ratings);

/// Negated rating log-likelihood over packed parameters [r_0..r_{K-1}, theta1, theta2].
Objective ordinal_objective(const std::vector<RatingExample>& ratings, int feature_count);

OrdinalModel fit_ordinal(const std::vector<RatingExample>& ratings, int feature_count,
                         const SolverConfig& cfg, SolverResult* diagnostics = nullptr);

// ---------------------------------------------------------------------------
// Convex-optimization metric (similar pairs close, dissimilar pairs spread)
// ---------------------------------------------------------------------------

/// Sum of metric distances over the dissimilar (sigma = 1) pairs; the
/// constraint of the convex program requires this to reach 1.
double dissimilarity_sum(const MetricWeights& r, const std::vector<RatingExample>& ratings);

/// Barrier surrogate: sum of squared distances over similar pairs minus
/// log of the dissimilarity sum, over r >= 0.
Objective xing_objective(const std::vector<RatingExample>& ratings, int feature_count);

/// Minimizes the surrogate and rescales so the dissimilarity constraint is
/// tight. Throws InputError when the rating set lacks similar or dissimilar
/// pairs or every dissimilar pair has identical features.
MetricWeights fit_xing(const std::vector<RatingExample>& ratings, int feature_count,
                       const SolverConfig& cfg, SolverResult* diagnostics = nullptr);

// ---------------------------------------------------------------------------
// Neighborhood component analysis with L1 shrinkage
// ---------------------------------------------------------------------------

/// Softmax-over-negative-squared-distance probability that x belongs to class
/// c given the labeled set. `exclude` removes one training index (leave-one-out);
/// pass -1 to use all of G. Clipped below at kProbFloor.
double nca_prob(const MetricWeights& r, const std::vector<LabeledExample>& G, const FeatureVec& x,
                int c, std::ptrdiff_t exclude = -1);

double nca_loo_prob(const MetricWeights& r, const std::vector<LabeledExample>& G,
                    std::size_t held_out);

/// Negated (leave-one-out log-likelihood - lambda * sum r_k) over r >= 0.
Objective nca_objective(const std::vector<LabeledExample>& G, int feature_count, double lambda);

struct NcaModel {
    MetricWeights r;
    double lambda_used = 0.0;
};

NcaModel fit_nca(const std::vector<LabeledExample>& G, int feature_count, double lambda,
                 const SolverConfig& cfg, SolverResult* diagnostics = nullptr);

/// Outcome of the validation sweep over the regularization grid.
struct LambdaSelection {
    double lambda = 0.0;
    Vec grid;
    Vec validation_scores;  // validation log-likelihood per grid entry
};

/// Random 70/30 split of G, one fit per grid lambda, validation-likelihood
/// argmax (ties to the smaller lambda), then a refit on the full G. Splits
/// leaving fewer than two classes on either side are redrawn up to 20 times.
NcaModel fit_nca_with_selection(const std::vector<LabeledExample>& G, int feature_count,
                                const Vec& lambda_grid, double split_fraction, Rng& rng,
                                const SolverConfig& cfg, LambdaSelection* selection = nullptr);

// ---------------------------------------------------------------------------
// Kernel density classifier and soft labels
// ---------------------------------------------------------------------------

/// Gaussian-kernel class-density classifier: per-feature kernel weights w,
/// the training examples, and class priors from training frequencies.
struct KdeClassifier {
    Vec w;  // K nonnegative kernel weights
    std::vector<LabeledExample> train;
    Vec priors;  // M entries summing to 1
    double lambda_used = 0.0;
    int num_classes = 0;
};

/// Bayes posterior over classes from the unnormalized Gaussian kernel
/// densities. When every class density underflows to zero the priors are
/// returned. Throws InputError if some class has no training point.
SoftLabel kde_posterior(const KdeClassifier& clf, const FeatureVec& x);

/// Negated (leave-one-out log-posterior - lambda * sum w_k) over w >= 0.
/// A held-out point whose class has no other member contributes its log prior
/// (constant in w).
Objective kde_objective(const std::vector<LabeledExample>& G, int feature_count, int class_count,
                        double lambda);

/// Fits kernel weights by the leave-one-out posterior likelihood with L1
/// shrinkage, lambda selected on a 70/30 split as for NCA.
KdeClassifier fit_kde_classifier(const std::vector<LabeledExample>& G, int feature_count,
                                 int class_count, const Vec& lambda_grid, double split_fraction,
                                 Rng& rng, const SolverConfig& cfg,
                                 LambdaSelection* selection = nullptr);

/// fit_kde_classifier, except that a single-class problem yields the trivial
/// classifier (zero kernel weights, unit prior) without any fitting.
KdeClassifier fit_soft_classifier(const std::vector<LabeledExample>& G, int feature_count,
                                  int class_count, const Vec& lambda_grid, double split_fraction,
                                  Rng& rng, const SolverConfig& cfg,
                                  LambdaSelection* selection = nullptr);

/// Soft label for every object appearing in S or G: one-hot for labeled
/// objects, classifier posterior for the rest.
std::map<ObjectId, SoftLabel> soft_labels(const std::vector<RatingExample>& S,
                                          const std::vector<LabeledExample>& G,
                                          const KdeClassifier& clf);

// ---------------------------------------------------------------------------
// Hybrid metric over observed features and class-pair offsets
// ---------------------------------------------------------------------------

struct HybridModel {
    MetricWeights r;
    SymmetricMatrix q;  // M x M, elementwise nonnegative
    KdeClassifier classifier;
};

double hybrid_sq_dist(const HybridModel& m, const FeatureVec& x, const FeatureVec& x2,
                      const SoftLabel& u, const SoftLabel& u2);

/// Sum of hybrid distances over the dissimilar pairs of S, with soft labels
/// taken from the given map.
double hybrid_dissimilarity_sum(const MetricWeights& r, const SymmetricMatrix& q,
                                const std::vector<RatingExample>& ratings,
                                const std::map<ObjectId, SoftLabel>& labels);

/// Barrier surrogate over packed parameters [r (K entries), upper(Q)
/// (M(M+1)/2 entries)], all clamped nonnegative.
Objective hybrid_objective(const std::vector<RatingExample>& ratings,
                           const std::map<ObjectId, SoftLabel>& labels, int feature_count,
                           int class_count);

/// Fits the classifier on G, builds soft labels, minimizes the surrogate and
/// rescales (r, Q) jointly so the dissimilarity constraint is tight. With a
/// single class the classifier step is skipped (every soft label is the
/// trivial one-hot).
HybridModel fit_hybrid(const std::vector<RatingExample>& S, const std::vector<LabeledExample>& G,
                       int feature_count, int class_count, Rng& rng, const SolverConfig& cfg,
                       SolverResult* diagnostics = nullptr);

/// Same, reusing an already fitted classifier.
HybridModel fit_hybrid_with_classifier(const std::vector<RatingExample>& S,
                                       const std::vector<LabeledExample>& G,
                                       KdeClassifier classifier, int feature_count,
                                       int class_count, const SolverConfig& cfg,
                                       SolverResult* diagnostics = nullptr);

}  // namespace metriq

#endif
