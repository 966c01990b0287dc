#ifndef METRIQ_DATASET_HPP
#define METRIQ_DATASET_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "metriq/metric.hpp"

namespace metriq {

using ObjectId = std::string;

/// A class-labeled object: one triplet of the label set G.
struct LabeledExample {
    ObjectId o;
    FeatureVec x;
    int c = 0;  // 1-based class index
};

/// A rated directed pair of objects: one quintuplet of the rating set S.
/// sigma is 1 (dissimilar), 2 (neutral) or 3 (similar).
struct RatingExample {
    ObjectId o, o2;
    FeatureVec x, x2;
    int sigma = 0;
};

struct ObjectEntry {
    ObjectId id;
    FeatureVec x;
};

/// An immutable-after-load collection of objects, labels and ratings.
/// Every id referenced by labels or ratings resolves to an object entry;
/// objects may legally appear in ratings without a label.
struct Dataset {
    std::vector<ObjectEntry> objects;
    std::vector<LabeledExample> labels;
    std::vector<RatingExample> ratings;
    int feature_count = 0;  // K
    int class_count = 0;    // M (largest class index seen in labels)

    std::unordered_map<ObjectId, std::size_t> index;

    void rebuild_index();
    std::optional<std::size_t> index_of(const ObjectId& id) const;
    const FeatureVec& features_of(const ObjectId& id) const;
    std::optional<int> label_of(const ObjectId& id) const;
};

/// Loads and cross-references the three CSV files. Throws ParseError with the
/// file name and line for malformed rows, unknown object references, ratings
/// outside {1,2,3} or inconsistent feature counts.
Dataset load_dataset(const std::string& features_path, const std::string& labels_path,
                     const std::string& ratings_path);

void save_dataset(const Dataset& ds, const std::string& features_path,
                  const std::string& labels_path, const std::string& ratings_path);

/// One feature dropped by the correlation filter: `dropped` correlated with
/// the earlier kept feature `against` at `correlation`. Zero-variance columns
/// are recorded as (j, j, 1.0).
struct DroppedFeature {
    int dropped = 0;
    int against = 0;
    double correlation = 0.0;
};

struct PreprocessReport {
    std::vector<int> kept_feature_indices;
    std::vector<DroppedFeature> dropped_pairs;
    Vec means;       // per kept feature, recorded by normalize
    Vec deviations;  // sample standard deviation (N-1 denominator)
};

struct FilterResult {
    std::vector<FeatureVec> rows;           // reduced feature matrix
    std::vector<int> kept_feature_indices;  // strictly increasing
    std::vector<DroppedFeature> dropped_pairs;
};

/// Greedy correlation filter, scanning features in ascending index order.
/// A feature is dropped when its absolute Pearson correlation with any
/// earlier kept feature exceeds the threshold.
FilterResult filter_correlated(const std::vector<FeatureVec>& rows, double threshold);

/// Affine per-feature transform fitted on training data and reapplied to
/// test points with the training statistics.
struct Standardizer {
    Vec mean;
    Vec stddev;
    FeatureVec apply(const FeatureVec& x) const;
};

/// Standardizes every column to sample mean 0 and sample standard deviation 1
/// (N-1 denominator). Throws InputError on a zero-variance column; run the
/// correlation filter first.
std::pair<std::vector<FeatureVec>, Standardizer> normalize(const std::vector<FeatureVec>& rows);

/// Correlation filter followed by normalization over the dataset's feature
/// matrix; labels and ratings are rebuilt against the transformed features.
std::pair<Dataset, PreprocessReport> preprocess_dataset(const Dataset& ds, double threshold);

void write_preprocess_report(const PreprocessReport& report, const std::string& path);

/// Uniform sample of round(fraction * |ratings|) ratings without replacement.
/// Deterministic for a given seed.
std::vector<RatingExample> split_ratings(const std::vector<RatingExample>& ratings, double fraction,
                                         std::uint64_t seed);

}  // namespace metriq

#endif
