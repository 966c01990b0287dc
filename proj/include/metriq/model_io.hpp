#ifndef METRIQ_MODEL_IO_HPP
#define METRIQ_MODEL_IO_HPP

#include <string>
#include <variant>

#include "metriq/eval.hpp"
#include "metriq/learners.hpp"

namespace metriq {

struct XingModel {
    MetricWeights r;
};

struct SolverSummary {
    int iterations = 0;
    bool converged = false;
    std::string termination;
    double initial_value = 0.0;
    double final_value = 0.0;
};

/// A fitted model of any of the four algorithms, plus enough context to
/// reuse it for retrieval.
struct TrainedModel {
    Algorithm algorithm = Algorithm::ordinal;
    int feature_count = 0;
    int class_count = 0;
    std::variant<OrdinalModel, XingModel, NcaModel, HybridModel> model;
    SolverConfig solver;
    SolverSummary summary;
    LambdaSelection selection;  // populated for nca and hyb
};

/// Metric weights the model ranks with (hybrid adds the class-pair term
/// separately).
const MetricWeights& model_weights(const TrainedModel& m);

/// Squared distance under the model. Soft labels are required for hybrid
/// models and ignored otherwise.
double model_sq_dist(const TrainedModel& m, const FeatureVec& a, const FeatureVec& b,
                     const SoftLabel* ua = nullptr, const SoftLabel* ub = nullptr);

void save_model(const TrainedModel& m, const std::string& path);
TrainedModel load_model(const std::string& path);

}  // namespace metriq

#endif
