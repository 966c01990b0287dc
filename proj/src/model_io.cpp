#include "metriq/model_io.hpp"

#include <fstream>

#include <json.hpp>

#include "json_util.hpp"

namespace metriq {

namespace {

using nlohmann::json;

json classifier_json(const KdeClassifier& clf) {
    json train = json::array();
    for (const auto& ex : clf.train)
        train.push_back({{"object_id", ex.o}, {"x", ex.x}, {"class", ex.c}});
    return {{"w", clf.w},
            {"priors", clf.priors},
            {"lambda", clf.lambda_used},
            {"num_classes", clf.num_classes},
            {"train", std::move(train)}};
}

KdeClassifier classifier_from_json(const json& j) {
    KdeClassifier clf;
    clf.w = j.at("w").get<Vec>();
    clf.priors = j.at("priors").get<Vec>();
    clf.lambda_used = j.at("lambda").get<double>();
    clf.num_classes = j.at("num_classes").get<int>();
    for (const auto& je : j.at("train"))
        clf.train.push_back({je.at("object_id").get<ObjectId>(), je.at("x").get<FeatureVec>(),
                             je.at("class").get<int>()});
    return clf;
}

}  // namespace

const MetricWeights& model_weights(const TrainedModel& m) {
    switch (m.algorithm) {
        case Algorithm::ordinal: return std::get<OrdinalModel>(m.model).r;
        case Algorithm::xing: return std::get<XingModel>(m.model).r;
        case Algorithm::nca: return std::get<NcaModel>(m.model).r;
        case Algorithm::hybrid: return std::get<HybridModel>(m.model).r;
    }
    throw InputError("unknown algorithm in model");
}

double model_sq_dist(const TrainedModel& m, const FeatureVec& a, const FeatureVec& b,
                     const SoftLabel* ua, const SoftLabel* ub) {
    if (m.algorithm == Algorithm::hybrid) {
        if (ua == nullptr || ub == nullptr)
            throw InputError("hybrid distance needs soft labels for both objects");
        const auto& hm = std::get<HybridModel>(m.model);
        return hybrid_sq_dist(hm.r, hm.q, a, b, *ua, *ub);
    }
    return weighted_sq_dist(model_weights(m), a, b);
}

void save_model(const TrainedModel& m, const std::string& path) {
    json j;
    j["algorithm"] = algorithm_tag(m.algorithm);
    j["feature_count"] = m.feature_count;
    j["class_count"] = m.class_count;
    j["solver"] = detail::solver_config_json(m.solver);
    j["summary"] = {{"iterations", m.summary.iterations},
                    {"converged", m.summary.converged},
                    {"termination", m.summary.termination},
                    {"initial_value", m.summary.initial_value},
                    {"final_value", m.summary.final_value}};
    switch (m.algorithm) {
        case Algorithm::ordinal: {
            const auto& om = std::get<OrdinalModel>(m.model);
            j["r"] = om.r;
            j["theta"] = {om.theta1, om.theta2};
            break;
        }
        case Algorithm::xing: {
            j["r"] = std::get<XingModel>(m.model).r;
            break;
        }
        case Algorithm::nca: {
            const auto& nm = std::get<NcaModel>(m.model);
            j["r"] = nm.r;
            j["lambda"] = nm.lambda_used;
            break;
        }
        case Algorithm::hybrid: {
            const auto& hm = std::get<HybridModel>(m.model);
            j["r"] = hm.r;
            j["q_upper"] = hm.q.upper();
            j["classifier"] = classifier_json(hm.classifier);
            break;
        }
    }
    if (!m.selection.grid.empty())
        j["lambda_selection"] = {{"lambda", m.selection.lambda},
                                 {"grid", m.selection.grid},
                                 {"validation_scores", m.selection.validation_scores}};
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write " + path);
    f << j.dump(2) << '\n';
}

TrainedModel load_model(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error("cannot open " + path);
    json j;
    try {
        f >> j;
    } catch (const json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }

    TrainedModel m;
    try {
        m.algorithm = parse_algorithm(j.at("algorithm").get<std::string>());
        m.feature_count = j.at("feature_count").get<int>();
        m.class_count = j.at("class_count").get<int>();
        m.solver = detail::solver_config_from_json(j.at("solver"));
        const auto& s = j.at("summary");
        m.summary = {s.at("iterations").get<int>(), s.at("converged").get<bool>(),
                     s.at("termination").get<std::string>(), s.at("initial_value").get<double>(),
                     s.at("final_value").get<double>()};
        switch (m.algorithm) {
            case Algorithm::ordinal: {
                OrdinalModel om;
                om.r = j.at("r").get<Vec>();
                om.theta1 = j.at("theta").at(0).get<double>();
                om.theta2 = j.at("theta").at(1).get<double>();
                m.model = std::move(om);
                break;
            }
            case Algorithm::xing:
                m.model = XingModel{j.at("r").get<Vec>()};
                break;
            case Algorithm::nca:
                m.model = NcaModel{j.at("r").get<Vec>(), j.at("lambda").get<double>()};
                break;
            case Algorithm::hybrid: {
                HybridModel hm;
                hm.r = j.at("r").get<Vec>();
                hm.q = SymmetricMatrix::from_upper(m.class_count, j.at("q_upper").get<Vec>());
                hm.classifier = classifier_from_json(j.at("classifier"));
                m.model = std::move(hm);
                break;
            }
        }
        if (j.contains("lambda_selection")) {
            const auto& sel = j.at("lambda_selection");
            m.selection.lambda = sel.at("lambda").get<double>();
            m.selection.grid = sel.at("grid").get<Vec>();
            m.selection.validation_scores = sel.at("validation_scores").get<Vec>();
        }
    } catch (const json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    return m;
}

}  // namespace metriq
