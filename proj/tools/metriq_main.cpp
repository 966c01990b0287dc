// metriq: distance metric learning from pairwise similarity ratings and
// class labels, with a synthetic benchmark generator and an NDCG-based
// retrieval evaluation harness.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "metriq/dataset.hpp"
#include "metriq/eval.hpp"
#include "metriq/learners.hpp"
#include "metriq/log.hpp"
#include "metriq/model_io.hpp"
#include "metriq/rng.hpp"
#include "metriq/synth.hpp"

namespace fs = std::filesystem;
using namespace metriq;

namespace {

std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct DataPaths {
    std::string features, labels, ratings;
};

DataPaths data_paths(const std::string& dir) {
    return {(fs::path(dir) / "features.csv").string(), (fs::path(dir) / "labels.csv").string(),
            (fs::path(dir) / "ratings.csv").string()};
}

Dataset load_dir(const std::string& dir) {
    const DataPaths p = data_paths(dir);
    return load_dataset(p.features, p.labels, p.ratings);
}

struct GenOptions {
    std::string out_dir;
    std::uint64_t seed = 0;
    int n = 200, k = 20, j = 20, m = 3;
    double noise_sd = 50.0;
};

int cmd_gen(const GenOptions& opt) {
    Rng rng(opt.seed);
    const GenerativeModel model = sample_generative_model(rng, opt.k, opt.j, opt.m);
    const auto objects = sample_objects(model, opt.n, rng);
    const auto [ratings, report] =
        generate_ratings(objects, model.r_true, model.r_perp_true, opt.noise_sd, rng);

    Dataset ds;
    ds.feature_count = opt.k;
    ds.class_count = opt.m;
    for (const auto& obj : objects) ds.objects.push_back({obj.o, obj.x});
    for (const auto& obj : objects) ds.labels.push_back({obj.o, obj.x, obj.c});
    ds.ratings = ratings;
    ds.rebuild_index();

    fs::create_directories(opt.out_dir);
    const DataPaths p = data_paths(opt.out_dir);
    save_dataset(ds, p.features, p.labels, p.ratings);

    nlohmann::json meta = {{"seed", opt.seed},
                           {"n_objects", opt.n},
                           {"feature_count", opt.k},
                           {"missing_count", opt.j},
                           {"class_count", opt.m},
                           {"noise_sd", opt.noise_sd},
                           {"threshold_q20", report.threshold_q20},
                           {"threshold_q50", report.threshold_q50},
                           {"r_true", model.r_true},
                           {"r_perp_true", model.r_perp_true}};
    std::ofstream f(fs::path(opt.out_dir) / "meta.json", std::ios::binary);
    if (!f) throw Error("cannot write meta.json under " + opt.out_dir);
    f << meta.dump(2) << '\n';

    log::info("wrote " + std::to_string(objects.size()) + " objects and " +
              std::to_string(ratings.size()) + " ratings to " + opt.out_dir);
    return 0;
}

struct TrainOptions {
    std::string algo;
    std::string data_dir;
    std::string out_path;
    std::uint64_t seed = 0;
    SolverConfig solver;
    Vec lambda_grid = kDefaultLambdaGrid;
    double split_fraction = kDefaultSplitFraction;
};

int cmd_train(const TrainOptions& opt) {
    const Dataset ds = load_dir(opt.data_dir);
    const Algorithm algo = parse_algorithm(opt.algo);

    TrainedModel out;
    out.algorithm = algo;
    out.feature_count = ds.feature_count;
    out.class_count = ds.class_count;
    out.solver = opt.solver;

    SolverResult diag;
    switch (algo) {
        case Algorithm::ordinal:
            out.model = fit_ordinal(ds.ratings, ds.feature_count, opt.solver, &diag);
            break;
        case Algorithm::xing:
            out.model = XingModel{fit_xing(ds.ratings, ds.feature_count, opt.solver, &diag)};
            break;
        case Algorithm::nca: {
            Rng rng(opt.seed);
            out.model = fit_nca_with_selection(ds.labels, ds.feature_count, opt.lambda_grid,
                                               opt.split_fraction, rng, opt.solver,
                                               &out.selection);
            break;
        }
        case Algorithm::hybrid: {
            Rng rng(opt.seed);
            KdeClassifier clf =
                fit_soft_classifier(ds.labels, ds.feature_count, ds.class_count, opt.lambda_grid,
                                    opt.split_fraction, rng, opt.solver, &out.selection);
            out.model = fit_hybrid_with_classifier(ds.ratings, ds.labels, std::move(clf),
                                                   ds.feature_count, ds.class_count, opt.solver,
                                                   &diag);
            break;
        }
    }
    if (!diag.trace.empty())
        out.summary = {diag.iterations, diag.converged, termination_name(diag.termination),
                       diag.trace.front(), diag.final_value};

    save_model(out, opt.out_path);
    log::info("fitted " + opt.algo + ": " + std::to_string(out.summary.iterations) +
              " iterations, final objective " + g17(out.summary.final_value) + " (" +
              out.summary.termination + ")");
    return 0;
}

struct RetrieveOptions {
    std::string model_path;
    std::string data_dir;
    std::string query;
    std::string out_path;
    int k = 10;
};

int cmd_retrieve(const RetrieveOptions& opt) {
    const TrainedModel model = load_model(opt.model_path);
    const Dataset ds = load_dir(opt.data_dir);
    if (!ds.index_of(opt.query)) throw InputError("unknown query id '" + opt.query + "'");
    const FeatureVec& qx = ds.features_of(opt.query);

    std::vector<SoftLabel> u;
    const SoftLabel* qu = nullptr;
    if (model.algorithm == Algorithm::hybrid) {
        const auto& clf = std::get<HybridModel>(model.model).classifier;
        u.reserve(ds.objects.size() + 1);
        for (const auto& obj : ds.objects) {
            const auto c = ds.label_of(obj.id);
            u.push_back(c ? one_hot(clf.num_classes, *c) : kde_posterior(clf, obj.x));
        }
        const auto qc = ds.label_of(opt.query);
        u.push_back(qc ? one_hot(clf.num_classes, *qc) : kde_posterior(clf, qx));
        qu = &u.back();
    }

    const auto ranked = rank_neighbors(
        [&](std::size_t i) {
            return model_sq_dist(model, qx, ds.objects[i].x, qu,
                                 model.algorithm == Algorithm::hybrid ? &u[i] : nullptr);
        },
        ds.objects.size(), static_cast<std::size_t>(opt.k));

    std::string out = "rank,object_id,distance\n";
    for (std::size_t p = 0; p < ranked.size(); ++p) {
        out += std::to_string(p + 1) + "," + ds.objects[ranked[p].index].id + "," +
               g17(std::sqrt(ranked[p].distance)) + "\n";
    }
    std::ofstream f(opt.out_path, std::ios::binary);
    if (!f) throw Error("cannot write " + opt.out_path);
    f << out;
    return 0;
}

struct PreprocessOptions {
    std::string data_dir;
    std::string out_dir;
    double threshold = 0.95;
};

int cmd_preprocess(const PreprocessOptions& opt) {
    const Dataset ds = load_dir(opt.data_dir);
    auto [reduced, report] = preprocess_dataset(ds, opt.threshold);
    fs::create_directories(opt.out_dir);
    const DataPaths p = data_paths(opt.out_dir);
    save_dataset(reduced, p.features, p.labels, p.ratings);
    write_preprocess_report(report, (fs::path(opt.out_dir) / "preprocess_report.json").string());
    log::info("kept " + std::to_string(report.kept_feature_indices.size()) + " of " +
              std::to_string(ds.feature_count) + " features");
    return 0;
}

struct ExperimentOptions {
    ExperimentConfig cfg;
    std::string out_dir;
    std::string data_dir;  // loo only
    bool strict = false;
};

int write_experiment_outputs(const ExperimentReport& report, const ExperimentOptions& opt) {
    fs::create_directories(opt.out_dir);
    write_report_json(report, (fs::path(opt.out_dir) / "report.json").string());
    write_report_csv(report, (fs::path(opt.out_dir) / "report.csv").string());
    int failures = 0;
    for (const auto& cell : report.cells) failures += cell.n_failed;
    for (const auto& cell : report.cells)
        log::info(std::string(algorithm_tag(cell.algorithm)) + " @ " + g17(cell.fraction) +
                  ": mean NDCG " + g17(cell.mean_ndcg) + " (sd " + g17(cell.sd_ndcg) + ", n " +
                  std::to_string(cell.n_success) + ")");
    if (failures > 0) {
        log::error(std::to_string(failures) + " cell entr" + (failures == 1 ? "y" : "ies") +
                   " failed; see report.json");
        if (opt.strict) return 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"metriq: similarity-rating and class-label distance metric learning"};
    app.require_subcommand(1);

    GenOptions gen;
    CLI::App* cgen = app.add_subcommand("gen", "generate a synthetic dataset");
    cgen->add_option("--out", gen.out_dir, "output directory")->required();
    cgen->add_option("--seed", gen.seed, "random seed");
    cgen->add_option("--n", gen.n, "number of objects");
    cgen->add_option("--k", gen.k, "observed feature count");
    cgen->add_option("--j", gen.j, "missing feature count");
    cgen->add_option("--m", gen.m, "class count");
    cgen->add_option("--noise-sd", gen.noise_sd, "rating noise standard deviation");

    PreprocessOptions pre;
    CLI::App* cpre = app.add_subcommand("preprocess", "correlation-filter and normalize features");
    cpre->add_option("--data", pre.data_dir, "input dataset directory")->required();
    cpre->add_option("--out", pre.out_dir, "output dataset directory")->required();
    cpre->add_option("--threshold", pre.threshold, "absolute correlation threshold");

    TrainOptions train;
    CLI::App* ctrain = app.add_subcommand("train", "fit a metric on a dataset");
    ctrain->add_option("--algo", train.algo, "algorithm: or, co, nca or hyb")->required();
    ctrain->add_option("--data", train.data_dir, "dataset directory")->required();
    ctrain->add_option("--out", train.out_path, "model output file")->required();
    ctrain->add_option("--seed", train.seed, "random seed");
    ctrain->add_option("--max-iters", train.solver.max_iters, "solver iteration cap");
    ctrain->add_option("--grad-tol", train.solver.grad_tol, "solver gradient tolerance");
    ctrain->add_option("--initial-step", train.solver.initial_step, "solver initial step");
    ctrain->add_option("--lambda-grid", train.lambda_grid, "regularization grid")
        ->delimiter(',');
    ctrain->add_option("--split-fraction", train.split_fraction, "selection train fraction");

    RetrieveOptions retr;
    CLI::App* cretr = app.add_subcommand("retrieve", "rank database objects for a query");
    cretr->add_option("--model", retr.model_path, "trained model file")->required();
    cretr->add_option("--data", retr.data_dir, "dataset directory")->required();
    cretr->add_option("--query", retr.query, "query object id")->required();
    cretr->add_option("--k", retr.k, "list length");
    cretr->add_option("--out", retr.out_path, "ranked list output file")->required();

    ExperimentOptions exp;
    std::vector<double> fraction_percents = {5.0, 7.5, 10.0, 12.5, 15.0};
    std::vector<std::string> algo_tags = {"or", "co", "nca", "hyb"};
    CLI::App* cexp = app.add_subcommand("experiment", "run an evaluation protocol");
    cexp->require_subcommand(1);

    CLI::App* csyn = cexp->add_subcommand("synthetic", "replicated synthetic benchmark");
    csyn->add_option("--out", exp.out_dir, "report output directory")->required();
    csyn->add_option("--seed", exp.cfg.master_seed, "master seed");
    csyn->add_option("--reps", exp.cfg.replications, "number of replications");
    csyn->add_option("--fractions", fraction_percents, "rating subset sizes in percent")
        ->delimiter(',');
    csyn->add_option("--algos", algo_tags, "algorithms to run")->delimiter(',');
    csyn->add_option("--n", exp.cfg.n_objects, "objects per replication");
    csyn->add_option("--train-size", exp.cfg.train_size, "training objects per replication");
    csyn->add_option("--k", exp.cfg.feature_count, "observed feature count");
    csyn->add_option("--j", exp.cfg.missing_count, "missing feature count");
    csyn->add_option("--m", exp.cfg.class_count, "class count");
    csyn->add_option("--noise-sd", exp.cfg.noise_sd, "rating noise standard deviation");
    csyn->add_option("--ndcg-k", exp.cfg.ndcg_k, "NDCG cutoff");
    csyn->add_option("--workers", exp.cfg.workers, "worker threads");
    csyn->add_option("--max-iters", exp.cfg.solver.max_iters, "solver iteration cap");
    csyn->add_option("--grad-tol", exp.cfg.solver.grad_tol, "solver gradient tolerance");
    csyn->add_flag("--strict", exp.strict, "fail on any degenerate cell");

    CLI::App* cloo = cexp->add_subcommand("loo", "leave-one-out protocol on a dataset");
    cloo->add_option("--data", exp.data_dir, "dataset directory")->required();
    cloo->add_option("--out", exp.out_dir, "report output directory")->required();
    cloo->add_option("--seed", exp.cfg.master_seed, "master seed");
    cloo->add_option("--algos", algo_tags, "algorithms to run")->delimiter(',');
    cloo->add_option("--ndcg-k", exp.cfg.ndcg_k, "NDCG cutoff");
    cloo->add_option("--workers", exp.cfg.workers, "worker threads");
    cloo->add_option("--max-iters", exp.cfg.solver.max_iters, "solver iteration cap");
    cloo->add_option("--grad-tol", exp.cfg.solver.grad_tol, "solver gradient tolerance");
    cloo->add_flag("--strict", exp.strict, "fail on any degenerate cell");

    CLI11_PARSE(app, argc, argv);

    try {
        if (cgen->parsed()) return cmd_gen(gen);
        if (cpre->parsed()) return cmd_preprocess(pre);
        if (ctrain->parsed()) return cmd_train(train);
        if (cretr->parsed()) return cmd_retrieve(retr);
        if (cexp->parsed()) {
            exp.cfg.algorithms.clear();
            for (const auto& tag : algo_tags) exp.cfg.algorithms.push_back(parse_algorithm(tag));
            if (csyn->parsed()) {
                exp.cfg.fractions.clear();
                for (double pct : fraction_percents) {
                    if (!(pct > 0.0 && pct <= 100.0))
                        throw InputError("fractions are percentages in (0, 100]");
                    exp.cfg.fractions.push_back(pct / 100.0);
                }
                return write_experiment_outputs(run_synthetic_experiment(exp.cfg), exp);
            }
            const Dataset ds = load_dir(exp.data_dir);
            return write_experiment_outputs(run_loo_experiment(ds, exp.cfg), exp);
        }
    } catch (const Error& e) {
        log::error(e.what());
        return 1;
    } catch (const std::exception& e) {
        log::error(std::string("unexpected: ") + e.what());
        return 1;
    }
    return 0;
}
