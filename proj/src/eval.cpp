#include "metriq/eval.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <mutex>
#include <optional>
#include <thread>
#include <unordered_map>

#include <json.hpp>

#include "json_util.hpp"
#include "metriq/log.hpp"
#include "metriq/rng.hpp"
#include "metriq/synth.hpp"

namespace metriq {

namespace {

// seed-derivation tags; the path (master, tag, indices...) identifies a task
constexpr std::uint64_t kTagGenerate = 1;
constexpr std::uint64_t kTagNcaFit = 2;
constexpr std::uint64_t kTagClassifierFit = 3;
constexpr std::uint64_t kTagSplit = 4;
constexpr std::uint64_t kTagCell = 5;
constexpr std::uint64_t kTagLooCell = 6;

void run_parallel(int n_tasks, int workers, const std::function<void(int)>& task) {
    workers = std::max(1, std::min(workers, n_tasks));
    if (workers == 1) {
        for (int i = 0; i < n_tasks; ++i) task(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            while (true) {
                const int i = next.fetch_add(1);
                if (i >= n_tasks) break;
                try {
                    task(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

double gain_of(int sigma) { return std::pow(2.0, static_cast<double>(sigma)) - 1.0; }

/// Indices 0..n-1 ordered by descending gain, ties by ascending index.
std::vector<std::size_t> ideal_order(const std::vector<int>& gains) {
    std::vector<std::size_t> order(gains.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (gains[a] != gains[b]) return gains[a] > gains[b];
        return a < b;
    });
    return order;
}

std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

const char* algorithm_tag(Algorithm a) {
    switch (a) {
        case Algorithm::ordinal: return "or";
        case Algorithm::xing: return "co";
        case Algorithm::nca: return "nca";
        case Algorithm::hybrid: return "hyb";
    }
    return "?";
}

Algorithm parse_algorithm(const std::string& tag) {
    if (tag == "or") return Algorithm::ordinal;
    if (tag == "co") return Algorithm::xing;
    if (tag == "nca") return Algorithm::nca;
    if (tag == "hyb") return Algorithm::hybrid;
    throw InputError("unknown algorithm tag '" + tag + "' (expected or, co, nca or hyb)");
}

double ndcg_at_k(const RankedList& ranked, int k) {
    if (k < 1) throw InputError("ndcg_at_k: k must be >= 1");
    if (ranked.retrieved.size() < static_cast<std::size_t>(k) ||
        ranked.ideal.size() < static_cast<std::size_t>(k))
        throw InputError("ndcg_at_k: ranked lists shorter than k");
    auto gain = [&](const ObjectId& id) {
        auto it = ranked.gains.find(id);
        if (it == ranked.gains.end())
            throw InputError("ndcg_at_k: no gain recorded for object '" + id + "'");
        return gain_of(it->second);
    };
    double dcg = 0.0, idcg = 0.0;
    double previous = std::numeric_limits<double>::infinity();
    for (int p = 1; p <= k; ++p) {
        const double discount = 1.0 / std::log2(static_cast<double>(p) + 1.0);
        dcg += gain(ranked.retrieved[p - 1]) * discount;
        const double ideal_gain = gain(ranked.ideal[p - 1]);
        if (ideal_gain > previous)
            throw InputError("ndcg_at_k: ideal list is not gain-descending");
        previous = ideal_gain;
        idcg += ideal_gain * discount;
    }
    if (!(idcg > 0.0)) throw InputError("ndcg_at_k: ideal DCG is zero");
    return dcg / idcg;
}

void aggregate_cell(CellResult& cell) {
    cell.n_success = 0;
    cell.n_failed = 0;
    double sum = 0.0;
    for (const auto& e : cell.entries) {
        if (e.ok) {
            ++cell.n_success;
            sum += e.ndcg;
        } else {
            ++cell.n_failed;
        }
    }
    cell.mean_ndcg = cell.n_success > 0 ? sum / cell.n_success : 0.0;
    double ss = 0.0;
    for (const auto& e : cell.entries)
        if (e.ok) ss += (e.ndcg - cell.mean_ndcg) * (e.ndcg - cell.mean_ndcg);
    cell.sd_ndcg = cell.n_success >= 2 ? std::sqrt(ss / (cell.n_success - 1)) : 0.0;
}

// ---------------------------------------------------------------------------
// Synthetic pipeline
// ---------------------------------------------------------------------------

namespace {

struct SynthReplication {
    std::vector<CellEntry> cells;  // fraction-major: f_idx * n_algos + a_idx
};

void check_synthetic_config(const ExperimentConfig& cfg) {
    if (cfg.n_objects < 2) throw InputError("experiment needs at least 2 objects");
    if (cfg.train_size < 1 || cfg.train_size >= cfg.n_objects)
        throw InputError("train_size must be in [1, n_objects)");
    if (cfg.replications < 1) throw InputError("replications must be >= 1");
    if (cfg.fractions.empty()) throw InputError("no fractions given");
    for (double f : cfg.fractions)
        if (!(f > 0.0 && f <= 1.0)) throw InputError("fractions must be in (0, 1]");
    if (cfg.algorithms.empty()) throw InputError("no algorithms selected");
    if (cfg.ndcg_k < 1 || cfg.ndcg_k > cfg.train_size)
        throw InputError("ndcg_k must be in [1, train_size]");
}

SynthReplication run_synthetic_replication(const ExperimentConfig& cfg, int rep) {
    const auto t_start = std::chrono::steady_clock::now();
    const std::uint64_t master = cfg.master_seed;
    const std::uint64_t rep_u = static_cast<std::uint64_t>(rep);
    const int n_algos = static_cast<int>(cfg.algorithms.size());
    const int n_frac = static_cast<int>(cfg.fractions.size());

    SynthReplication out;
    out.cells.assign(static_cast<std::size_t>(n_algos) * n_frac, CellEntry{});
    auto cell_at = [&](int f_idx, int a_idx) -> CellEntry& {
        return out.cells[static_cast<std::size_t>(f_idx) * n_algos + a_idx];
    };
    for (int f_idx = 0; f_idx < n_frac; ++f_idx)
        for (int a_idx = 0; a_idx < n_algos; ++a_idx) {
            CellEntry& e = cell_at(f_idx, a_idx);
            e.replication = rep;
            e.seed = derive_seed(master, {kTagCell, rep_u, static_cast<std::uint64_t>(f_idx),
                                          static_cast<std::uint64_t>(a_idx)});
        }

    Rng gen_rng(derive_seed(master, {kTagGenerate, rep_u}));
    const GenerativeModel model =
        sample_generative_model(gen_rng, cfg.feature_count, cfg.missing_count, cfg.class_count);
    const std::vector<SyntheticObject> objects = sample_objects(model, cfg.n_objects, gen_rng);
    const auto [all_ratings, gen_report] =
        generate_ratings(objects, model.r_true, model.r_perp_true, cfg.noise_sd, gen_rng);

    const int n = cfg.n_objects;
    const int train_size = cfg.train_size;
    std::unordered_map<ObjectId, int> object_index;
    object_index.reserve(objects.size());
    for (int i = 0; i < n; ++i) object_index.emplace(objects[i].o, i);

    std::vector<int> sigma(static_cast<std::size_t>(n) * n, 0);
    for (const auto& r : all_ratings)
        sigma[static_cast<std::size_t>(object_index.at(r.o)) * n + object_index.at(r.o2)] = r.sigma;

    std::vector<LabeledExample> G;
    G.reserve(train_size);
    for (int i = 0; i < train_size; ++i) G.push_back({objects[i].o, objects[i].x, objects[i].c});

    std::vector<RatingExample> S;
    S.reserve(static_cast<std::size_t>(train_size) * (train_size - 1));
    for (const auto& r : all_ratings)
        if (object_index.at(r.o) < train_size && object_index.at(r.o2) < train_size) S.push_back(r);

    const bool want_nca = std::count(cfg.algorithms.begin(), cfg.algorithms.end(), Algorithm::nca);
    const bool want_hyb =
        std::count(cfg.algorithms.begin(), cfg.algorithms.end(), Algorithm::hybrid);

    // NCA and the hybrid's classifier depend only on G, so they are fitted
    // once per replication and shared across fractions.
    std::optional<NcaModel> nca;
    std::string nca_error;
    if (want_nca) {
        try {
            Rng rng(derive_seed(master, {kTagNcaFit, rep_u}));
            nca = fit_nca_with_selection(G, cfg.feature_count, cfg.lambda_grid,
                                         cfg.split_fraction, rng, cfg.solver);
        } catch (const Error& e) {
            nca_error = e.what();
        }
    }
    std::optional<KdeClassifier> classifier;
    std::string classifier_error;
    if (want_hyb) {
        try {
            Rng rng(derive_seed(master, {kTagClassifierFit, rep_u}));
            classifier = fit_soft_classifier(G, cfg.feature_count, cfg.class_count,
                                             cfg.lambda_grid, cfg.split_fraction, rng, cfg.solver);
        } catch (const Error& e) {
            classifier_error = e.what();
        }
    }

    // soft labels for retrieval: one-hot for the labeled training objects,
    // classifier posterior for the unlabeled test queries
    std::vector<SoftLabel> train_u, test_u;
    if (classifier) {
        train_u.reserve(train_size);
        for (int i = 0; i < train_size; ++i)
            train_u.push_back(one_hot(classifier->num_classes, objects[i].c));
        test_u.reserve(n - train_size);
        for (int i = train_size; i < n; ++i)
            test_u.push_back(kde_posterior(*classifier, objects[i].x));
    }

    // mean NDCG over the test queries for a given squared-distance callback
    auto score = [&](const std::function<double(int, int)>& sq_dist) {
        double total = 0.0;
        int n_queries = 0;
        for (int q = train_size; q < n; ++q) {
            std::vector<int> gains(train_size);
            for (int i = 0; i < train_size; ++i)
                gains[i] = sigma[static_cast<std::size_t>(q) * n + i];
            auto ranked = rank_neighbors([&](std::size_t i) { return sq_dist(q, static_cast<int>(i)); },
                                         static_cast<std::size_t>(train_size),
                                         static_cast<std::size_t>(cfg.ndcg_k));
            const auto ideal = ideal_order(gains);
            RankedList list;
            list.query = objects[q].o;
            for (const auto& rn : ranked) list.retrieved.push_back(objects[rn.index].o);
            for (int p = 0; p < cfg.ndcg_k; ++p) list.ideal.push_back(objects[ideal[p]].o);
            for (int i = 0; i < train_size; ++i) list.gains[objects[i].o] = gains[i];
            total += ndcg_at_k(list, cfg.ndcg_k);
            ++n_queries;
        }
        return total / n_queries;
    };
    auto score_weights = [&](const MetricWeights& r) {
        return score([&](int q, int i) { return weighted_sq_dist(r, objects[q].x, objects[i].x); });
    };

    for (int f_idx = 0; f_idx < n_frac; ++f_idx) {
        std::vector<RatingExample> S_f;
        std::string split_error;
        try {
            S_f = split_ratings(S, cfg.fractions[f_idx],
                                derive_seed(master, {kTagSplit, rep_u,
                                                     static_cast<std::uint64_t>(f_idx)}));
        } catch (const Error& e) {
            split_error = e.what();
        }
        for (int a_idx = 0; a_idx < n_algos; ++a_idx) {
            CellEntry& entry = cell_at(f_idx, a_idx);
            try {
                if (!split_error.empty()) throw InputError(split_error);
                switch (cfg.algorithms[a_idx]) {
                    case Algorithm::ordinal: {
                        const OrdinalModel m = fit_ordinal(S_f, cfg.feature_count, cfg.solver);
                        entry.ndcg = score_weights(m.r);
                        break;
                    }
                    case Algorithm::xing: {
                        entry.ndcg = score_weights(fit_xing(S_f, cfg.feature_count, cfg.solver));
                        break;
                    }
                    case Algorithm::nca: {
                        if (!nca) throw InputError(nca_error);
                        entry.ndcg = score_weights(nca->r);
                        break;
                    }
                    case Algorithm::hybrid: {
                        if (!classifier) throw InputError(classifier_error);
                        const HybridModel m = fit_hybrid_with_classifier(
                            S_f, G, *classifier, cfg.feature_count, cfg.class_count, cfg.solver);
                        entry.ndcg = score([&](int q, int i) {
                            return hybrid_sq_dist(m.r, m.q, objects[q].x, objects[i].x,
                                                  test_u[q - train_size], train_u[i]);
                        });
                        break;
                    }
                }
                entry.ok = true;
            } catch (const Error& e) {
                entry.ok = false;
                entry.error = e.what();
            }
        }
    }

    const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start);
    log::info("replication " + std::to_string(rep) + " finished in " +
              format_g17(elapsed.count()) + " s");
    return out;
}

}  // namespace

ExperimentReport run_synthetic_experiment(const ExperimentConfig& cfg) {
    check_synthetic_config(cfg);
    const int n_algos = static_cast<int>(cfg.algorithms.size());
    const int n_frac = static_cast<int>(cfg.fractions.size());

    std::vector<SynthReplication> reps(cfg.replications);
    run_parallel(cfg.replications, cfg.workers,
                 [&](int rep) { reps[rep] = run_synthetic_replication(cfg, rep); });

    ExperimentReport report;
    report.mode = "synthetic";
    report.config = cfg;
    for (int a_idx = 0; a_idx < n_algos; ++a_idx)
        for (int f_idx = 0; f_idx < n_frac; ++f_idx) {
            CellResult cell;
            cell.algorithm = cfg.algorithms[a_idx];
            cell.fraction = cfg.fractions[f_idx];
            for (int rep = 0; rep < cfg.replications; ++rep)
                cell.entries.push_back(
                    reps[rep].cells[static_cast<std::size_t>(f_idx) * n_algos + a_idx]);
            aggregate_cell(cell);
            report.cells.push_back(std::move(cell));
        }
    return report;
}

// ---------------------------------------------------------------------------
// Leave-one-out pipeline
// ---------------------------------------------------------------------------

ExperimentReport run_loo_experiment(const Dataset& ds, const ExperimentConfig& cfg) {
    const int n = static_cast<int>(ds.objects.size());
    if (n < 3) throw InputError("leave-one-out needs at least 3 objects");
    if (cfg.algorithms.empty()) throw InputError("no algorithms selected");

    // complete directed coverage is required both for scoring and for the
    // per-fold training sets
    std::vector<int> sigma(static_cast<std::size_t>(n) * n, 0);
    for (const auto& r : ds.ratings) {
        const auto a = ds.index_of(r.o), b = ds.index_of(r.o2);
        if (!a || !b) throw InputError("rating references an object missing from the dataset");
        sigma[*a * n + *b] = r.sigma;
    }
    std::vector<std::string> missing;
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            if (a == b || sigma[static_cast<std::size_t>(a) * n + b] != 0) continue;
            if (missing.size() < 10)
                missing.push_back("(" + ds.objects[a].id + "," + ds.objects[b].id + ")");
        }
    if (!missing.empty()) {
        std::string what = "incomplete rating coverage; missing pairs include ";
        for (const auto& m : missing) what += m + " ";
        throw InputError(what);
    }

    const int n_algos = static_cast<int>(cfg.algorithms.size());
    const int k = std::min(cfg.ndcg_k, n - 1);
    std::vector<std::vector<CellEntry>> folds(n, std::vector<CellEntry>(n_algos));

    run_parallel(n, cfg.workers, [&](int fold) {
        std::vector<ObjectEntry> db;  // the n-1 remaining objects
        db.reserve(n - 1);
        for (int i = 0; i < n; ++i)
            if (i != fold) db.push_back(ds.objects[i]);

        std::vector<LabeledExample> G_fold;
        for (const auto& ex : ds.labels)
            if (ex.o != ds.objects[fold].id) G_fold.push_back(ex);
        std::vector<RatingExample> S_fold;
        for (const auto& ex : ds.ratings)
            if (ex.o != ds.objects[fold].id && ex.o2 != ds.objects[fold].id) S_fold.push_back(ex);

        const FeatureVec& query = ds.objects[fold].x;
        std::vector<int> gains(db.size());
        for (std::size_t i = 0; i < db.size(); ++i)
            gains[i] = sigma[static_cast<std::size_t>(fold) * n + *ds.index_of(db[i].id)];

        auto score = [&](const std::function<double(std::size_t)>& sq_dist) {
            auto ranked = rank_neighbors(sq_dist, db.size(), static_cast<std::size_t>(k));
            const auto ideal = ideal_order(gains);
            RankedList list;
            list.query = ds.objects[fold].id;
            for (const auto& rn : ranked) list.retrieved.push_back(db[rn.index].id);
            for (int p = 0; p < k; ++p) list.ideal.push_back(db[ideal[p]].id);
            for (std::size_t i = 0; i < db.size(); ++i) list.gains[db[i].id] = gains[i];
            return ndcg_at_k(list, k);
        };

        for (int a_idx = 0; a_idx < n_algos; ++a_idx) {
            CellEntry& entry = folds[fold][a_idx];
            entry.replication = fold;
            entry.seed = derive_seed(cfg.master_seed,
                                     {kTagLooCell, static_cast<std::uint64_t>(fold),
                                      static_cast<std::uint64_t>(a_idx)});
            try {
                switch (cfg.algorithms[a_idx]) {
                    case Algorithm::ordinal: {
                        const OrdinalModel m = fit_ordinal(S_fold, ds.feature_count, cfg.solver);
                        entry.ndcg = score([&](std::size_t i) {
                            return weighted_sq_dist(m.r, query, db[i].x);
                        });
                        break;
                    }
                    case Algorithm::xing: {
                        const MetricWeights r = fit_xing(S_fold, ds.feature_count, cfg.solver);
                        entry.ndcg = score(
                            [&](std::size_t i) { return weighted_sq_dist(r, query, db[i].x); });
                        break;
                    }
                    case Algorithm::nca: {
                        Rng rng(entry.seed);
                        const NcaModel m =
                            fit_nca_with_selection(G_fold, ds.feature_count, cfg.lambda_grid,
                                                   cfg.split_fraction, rng, cfg.solver);
                        entry.ndcg = score([&](std::size_t i) {
                            return weighted_sq_dist(m.r, query, db[i].x);
                        });
                        break;
                    }
                    case Algorithm::hybrid: {
                        Rng rng(entry.seed);
                        KdeClassifier clf = fit_soft_classifier(
                            G_fold, ds.feature_count, ds.class_count, cfg.lambda_grid,
                            cfg.split_fraction, rng, cfg.solver);
                        const HybridModel m = fit_hybrid_with_classifier(
                            S_fold, G_fold, clf, ds.feature_count, ds.class_count, cfg.solver);
                        // the held-out query is unlabeled at retrieval time
                        const SoftLabel u_query = kde_posterior(m.classifier, query);
                        std::vector<SoftLabel> db_u;
                        db_u.reserve(db.size());
                        for (const auto& obj : db) {
                            const auto c = [&]() -> std::optional<int> {
                                for (const auto& ex : G_fold)
                                    if (ex.o == obj.id) return ex.c;
                                return std::nullopt;
                            }();
                            db_u.push_back(c ? one_hot(m.classifier.num_classes, *c)
                                             : kde_posterior(m.classifier, obj.x));
                        }
                        entry.ndcg = score([&](std::size_t i) {
                            return hybrid_sq_dist(m.r, m.q, query, db[i].x, u_query, db_u[i]);
                        });
                        break;
                    }
                }
                entry.ok = true;
            } catch (const Error& e) {
                entry.ok = false;
                entry.error = e.what();
            }
        }
        log::info("fold " + std::to_string(fold) + " finished");
    });

    ExperimentReport report;
    report.mode = "loo";
    report.config = cfg;
    for (int a_idx = 0; a_idx < n_algos; ++a_idx) {
        CellResult cell;
        cell.algorithm = cfg.algorithms[a_idx];
        cell.fraction = 1.0;
        for (int fold = 0; fold < n; ++fold) cell.entries.push_back(folds[fold][a_idx]);
        aggregate_cell(cell);
        report.cells.push_back(std::move(cell));
    }
    return report;
}

// ---------------------------------------------------------------------------
// Report serialization
// ---------------------------------------------------------------------------

namespace {

nlohmann::json config_json(const ExperimentReport& report) {
    const ExperimentConfig& cfg = report.config;
    nlohmann::json algos = nlohmann::json::array();
    for (Algorithm a : cfg.algorithms) algos.push_back(algorithm_tag(a));
    // the worker count is deliberately not echoed: reports are byte-identical
    // for any scheduling of the same seeds
    return {{"n_objects", cfg.n_objects},
            {"train_size", cfg.train_size},
            {"feature_count", cfg.feature_count},
            {"missing_count", cfg.missing_count},
            {"class_count", cfg.class_count},
            {"noise_sd", cfg.noise_sd},
            {"fractions", cfg.fractions},
            {"replications", cfg.replications},
            {"master_seed", cfg.master_seed},
            {"ndcg_k", cfg.ndcg_k},
            {"algorithms", algos},
            {"solver", detail::solver_config_json(cfg.solver)},
            {"lambda_grid", cfg.lambda_grid},
            {"split_fraction", cfg.split_fraction}};
}

}  // namespace

void write_report_json(const ExperimentReport& report, const std::string& path) {
    nlohmann::json j;
    j["mode"] = report.mode;
    j["config"] = config_json(report);
    j["cells"] = nlohmann::json::array();
    for (const auto& cell : report.cells) {
        nlohmann::json entries = nlohmann::json::array();
        for (const auto& e : cell.entries) {
            nlohmann::json je = {{"replication", e.replication}, {"seed", e.seed}, {"ok", e.ok}};
            if (e.ok)
                je["ndcg"] = e.ndcg;
            else
                je["error"] = e.error;
            entries.push_back(std::move(je));
        }
        j["cells"].push_back({{"algorithm", algorithm_tag(cell.algorithm)},
                              {"fraction", cell.fraction},
                              {"mean_ndcg", cell.mean_ndcg},
                              {"sd_ndcg", cell.sd_ndcg},
                              {"n_success", cell.n_success},
                              {"n_failed", cell.n_failed},
                              {"entries", std::move(entries)}});
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write " + path);
    f << j.dump(2) << '\n';
}

void write_report_csv(const ExperimentReport& report, const std::string& path) {
    std::string out = "algorithm,fraction,mean_ndcg,sd_ndcg,n_success\n";
    for (const auto& cell : report.cells) {
        out += algorithm_tag(cell.algorithm);
        out += ',';
        out += format_g17(cell.fraction);
        out += ',';
        out += format_g17(cell.mean_ndcg);
        out += ',';
        out += format_g17(cell.sd_ndcg);
        out += ',';
        out += std::to_string(cell.n_success);
        out += '\n';
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write " + path);
    f << out;
}

}  // namespace metriq
