#ifndef METRIQ_EVAL_HPP
#define METRIQ_EVAL_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "metriq/dataset.hpp"
#include "metriq/learners.hpp"
#include "metriq/solver.hpp"

namespace metriq {

enum class Algorithm { ordinal, xing, nca, hybrid };

/// Short tags used on the command line and in reports: or, co, nca, hyb.
const char* algorithm_tag(Algorithm a);
Algorithm parse_algorithm(const std::string& tag);

/// One retrieval outcome for a query: the model's top-k, the ideal
/// (gain-descending) top-k, and the rating gains of the candidate pool.
struct RankedList {
    ObjectId query;
    std::vector<ObjectId> retrieved;
    std::vector<ObjectId> ideal;
    std::map<ObjectId, int> gains;  // sigma from the test rating set
};

/// Normalized discounted cumulative gain at cutoff k, with gain 2^sigma - 1
/// and discount 1/log2(1+p). Exactly 1.0 when the retrieved gain sequence
/// matches the ideal one position by position.
double ndcg_at_k(const RankedList& ranked, int k);

struct ExperimentConfig {
    int n_objects = 200;
    int train_size = 100;
    int feature_count = 20;  // K
    int missing_count = 20;  // J
    int class_count = 3;     // M
    double noise_sd = 50.0;
    std::vector<double> fractions = {0.05, 0.075, 0.10, 0.125, 0.15};
    int replications = 10;
    std::uint64_t master_seed = 0;
    int ndcg_k = 10;
    std::vector<Algorithm> algorithms = {Algorithm::ordinal, Algorithm::xing, Algorithm::nca,
                                         Algorithm::hybrid};
    SolverConfig solver;
    Vec lambda_grid = kDefaultLambdaGrid;
    double split_fraction = kDefaultSplitFraction;
    int workers = 1;
};

/// One replication (synthetic) or fold (leave-one-out) of one cell.
struct CellEntry {
    int replication = 0;
    std::uint64_t seed = 0;
    bool ok = false;
    double ndcg = 0.0;  // mean NDCG over the cell's queries; valid when ok
    std::string error;
};

/// Aggregate for one (algorithm, fraction) cell.
struct CellResult {
    Algorithm algorithm = Algorithm::ordinal;
    double fraction = 1.0;
    std::vector<CellEntry> entries;
    double mean_ndcg = 0.0;  // over successful entries
    double sd_ndcg = 0.0;    // sample standard deviation; 0 with fewer than 2 successes
    int n_success = 0;
    int n_failed = 0;
};

struct ExperimentReport {
    std::string mode;  // "synthetic" or "loo"
    ExperimentConfig config;
    std::vector<CellResult> cells;
};

/// Synthetic pipeline: per replication, sample a generative model, draw
/// objects, rate all directed pairs, split train/test, subsample the training
/// ratings at each fraction, fit the selected algorithms and score retrieval
/// by mean NDCG over the test queries. Degenerate cells (for example a
/// subsample with no dissimilar pairs) are recorded as failed and excluded
/// from aggregates. Deterministic for a given master seed and any worker count.
ExperimentReport run_synthetic_experiment(const ExperimentConfig& cfg);

/// Leave-one-out protocol over an externally supplied dataset with complete
/// directed rating coverage: per fold, drop one object everywhere, fit,
/// retrieve from the remaining objects and score against the held-out
/// object's ratings.
ExperimentReport run_loo_experiment(const Dataset& ds, const ExperimentConfig& cfg);

void write_report_json(const ExperimentReport& report, const std::string& path);
void write_report_csv(const ExperimentReport& report, const std::string& path);

/// Recomputes each cell's aggregate fields from its entries (used to verify
/// report consistency).
void aggregate_cell(CellResult& cell);

}  // namespace metriq

#endif
