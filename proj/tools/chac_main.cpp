#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "chac/hac.hpp"
#include "chac/io.hpp"
#include "chac/log.hpp"
#include "chac/metrics.hpp"

namespace {

struct ClusterOpts {
    std::string input;
    std::string format = "csv";
    std::string mode = "heap";
    std::string nns = "exact";
    double epsilon = 0.1;
    bool epsilon_given = false;
    double c_target = 2.0;
    double lambda = 1.5;
    std::optional<double> delta;
    std::optional<double> big_delta;
    std::uint32_t lsh_k = 0;
    std::uint32_t lsh_l = 0;
    std::uint32_t lsh_gamma = 1;
    std::uint64_t seed = 0;
    std::string output;
    std::string stats_out;
    std::string map_out;
};

void add_cluster_flags(CLI::App* cmd, ClusterOpts& o) {
    cmd->add_option("--input", o.input, "input point file")->required();
    cmd->add_option("--format", o.format, "input format")
        ->check(CLI::IsMember({"csv", "fvecs"}));
    cmd->add_option("--mode", o.mode, "engine mode")
        ->check(CLI::IsMember({"exact", "heap", "bucket"}));
    cmd->add_option("--nns", o.nns, "nearest-neighbor backend")
        ->check(CLI::IsMember({"exact", "lsh"}));
    cmd->add_option("--epsilon", o.epsilon, "merge slack (1+epsilon)");
    cmd->add_option("--c", o.c_target, "approximation target for the lsh backend");
    cmd->add_option("--lambda", o.lambda, "additive slack split, in (1, c/(1+epsilon))");
    cmd->add_option("--delta", o.delta, "lower bound on the min pairwise distance");
    cmd->add_option("--big-delta", o.big_delta, "upper bound on the max pairwise distance");
    cmd->add_option("--lsh-k", o.lsh_k, "hash atoms per table (0 = auto)");
    cmd->add_option("--lsh-l", o.lsh_l, "tables per scale (0 = auto)");
    cmd->add_option("--lsh-gamma", o.lsh_gamma, "independent table-set repetitions");
    cmd->add_option("--seed", o.seed, "RNG seed");
}

chac::PointFormat parse_format(const std::string& f) {
    return f == "fvecs" ? chac::PointFormat::fvecs : chac::PointFormat::csv;
}

chac::HacConfig build_config(CLI::App* cmd, ClusterOpts& o) {
    o.epsilon_given = cmd->count("--epsilon") > 0;
    chac::HacConfig cfg;
    if (o.mode == "exact") {
        if (o.epsilon_given && o.epsilon != 0.0) {
            throw CLI::ValidationError("--mode exact requires --epsilon 0");
        }
        if (o.nns != "exact") {
            throw CLI::ValidationError("--mode exact requires --nns exact");
        }
        cfg.mode = chac::HacMode::exact;
        cfg.epsilon = 0.0;
    } else {
        cfg.mode = o.mode == "bucket" ? chac::HacMode::bucket_approx : chac::HacMode::heap_approx;
        cfg.epsilon = o.epsilon;
    }
    cfg.backend = o.nns == "lsh" ? chac::NnsBackend::lsh_adaptive : chac::NnsBackend::exact;
    cfg.c_target = o.c_target;
    cfg.lambda = o.lambda;
    cfg.seed = o.seed;
    cfg.lsh_k = o.lsh_k;
    cfg.lsh_l = o.lsh_l;
    cfg.lsh_gamma = o.lsh_gamma;
    if (o.delta || o.big_delta) {
        if (!o.delta || !o.big_delta) {
            throw CLI::ValidationError("--delta and --big-delta must be given together");
        }
        cfg.bounds = chac::DistanceBounds{*o.delta, *o.big_delta};
    }
    cfg.validate();
    return cfg;
}

nlohmann::json config_echo(const chac::HacConfig& cfg, const ClusterOpts& o,
                           const chac::HacResult& result, std::size_t n_input) {
    nlohmann::json j{{"seed", cfg.seed},
                     {"mode", chac::to_string(cfg.mode)},
                     {"nns", chac::to_string(cfg.backend)},
                     {"epsilon", cfg.epsilon},
                     {"input", o.input},
                     {"n_input", n_input},
                     {"n_leaves", result.dendrogram.num_leaves}};
    if (cfg.backend == chac::NnsBackend::lsh_adaptive) {
        j["c_target"] = cfg.c_target;
        j["lambda"] = cfg.lambda;
    }
    if (result.bounds_used) {
        j["delta"] = result.bounds_used->delta;
        j["big_delta"] = result.bounds_used->big_delta;
    }
    return j;
}

int run_cluster(CLI::App* cmd, ClusterOpts& o, bool bench) {
    const chac::HacConfig cfg = build_config(cmd, o);
    const chac::Dataset points = chac::load_points(o.input, parse_format(o.format));
    chac::log::info("loaded %zu points of dimension %zu", points.size(), points.dim);
    const chac::HacResult result = chac::run_hac(points, cfg);
    chac::log::info("finished %llu merges in %.3fs",
                    static_cast<unsigned long long>(result.stats.merges),
                    result.stats.total_seconds);
    if (!o.output.empty()) {
        chac::write_dendrogram(result.dendrogram, o.output);
    }
    if (!o.map_out.empty()) {
        chac::write_leaf_map(result.leaf_of_input, o.map_out);
    }
    if (!o.stats_out.empty()) {
        chac::emit_stats(result.stats, o.stats_out, config_echo(cfg, o, result, points.size()));
    }
    if (bench) {
        const chac::RunStats& s = result.stats;
        std::printf("%-28s %s\n", "engine", chac::to_string(cfg.mode));
        std::printf("%-28s %s\n", "backend", chac::to_string(cfg.backend));
        std::printf("%-28s %zu\n", "points", points.size());
        std::printf("%-28s %zu\n", "leaves", result.dendrogram.num_leaves);
        std::printf("%-28s %.6f\n", "init_seconds", s.init_seconds);
        std::printf("%-28s %.6f\n", "loop_seconds", s.loop_seconds);
        std::printf("%-28s %.6f\n", "total_seconds", s.total_seconds);
        std::printf("%-28s %llu\n", "merges", static_cast<unsigned long long>(s.merges));
        std::printf("%-28s %llu\n", "stale_dequeues",
                    static_cast<unsigned long long>(s.stale_dequeues));
        std::printf("%-28s %llu\n", "requeues", static_cast<unsigned long long>(s.requeues));
        std::printf("%-28s %llu\n", "max_requeues_per_centroid",
                    static_cast<unsigned long long>(s.max_requeues_per_centroid));
        std::printf("%-28s %llu\n", "nns_queries", static_cast<unsigned long long>(s.nns_queries));
        std::printf("%-28s %llu\n", "nns_inserts", static_cast<unsigned long long>(s.nns_inserts));
        std::printf("%-28s %llu\n", "nns_deletes", static_cast<unsigned long long>(s.nns_deletes));
        std::printf("%-28s %llu\n", "identical_centroid_merges",
                    static_cast<unsigned long long>(s.identical_centroid_merges));
        std::printf("%-28s %.6f\n", "gamma", s.gamma());
    }
    return 0;
}

int run_invariant_check(CLI::App* cmd, ClusterOpts& o) {
    chac::HacConfig cfg = build_config(cmd, o);
    cfg.debug_checks = true;  // queue invariants asserted per operation
    const chac::Dataset points = chac::load_points(o.input, parse_format(o.format));
    if (points.size() > 4096) {
        throw CLI::ValidationError(
            "invariant-check rescans all centroid pairs per merge; use <= 4096 points");
    }
    const double factor = cfg.backend == chac::NnsBackend::exact
                              ? 1.0 + cfg.epsilon
                              : cfg.c_target;
    std::uint64_t violations = 0;
    std::uint64_t checked = 0;
    double worst_ratio = 0.0;
    chac::EngineHooks hooks;
    hooks.on_merge = [&](const chac::Centroid& a, const chac::Centroid& b, double distance,
                         const chac::ActiveSet& active) {
        std::vector<const chac::Centroid*> pool;
        active.for_each([&](const chac::Centroid& c) { pool.push_back(&c); });
        if (!active.find(a.id)) pool.push_back(&a);
        if (!active.find(b.id)) pool.push_back(&b);
        double lopt = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < pool.size(); ++i) {
            for (std::size_t j = i + 1; j < pool.size(); ++j) {
                lopt = std::min(lopt, chac::euclidean_dist(pool[i]->coords, pool[j]->coords));
            }
        }
        ++checked;
        if (lopt > 0.0) {
            worst_ratio = std::max(worst_ratio, distance / lopt);
        }
        if (distance > factor * lopt) {
            ++violations;
        }
    };
    const chac::HacResult result = chac::run_hac(points, cfg, &hooks);
    chac::validate_dendrogram(result.dendrogram);
    std::printf("merges checked              %llu\n", static_cast<unsigned long long>(checked));
    std::printf("merge-bound factor          %.6f\n", factor);
    std::printf("worst distance/optimal      %.6f\n", worst_ratio);
    std::printf("violations                  %llu\n", static_cast<unsigned long long>(violations));
    if (result.bounds_used && cfg.epsilon > 0.0) {
        const double cap = std::ceil(std::log(2.0 * result.bounds_used->big_delta /
                                              result.bounds_used->delta) /
                                     std::log(1.0 + cfg.epsilon));
        std::printf("requeue cap                 %.0f\n", cap);
        std::printf("max requeues per centroid   %llu\n",
                    static_cast<unsigned long long>(result.stats.max_requeues_per_centroid));
        if (static_cast<double>(result.stats.max_requeues_per_centroid) > cap) {
            std::printf("requeue cap exceeded\n");
            return 1;
        }
    }
    if (cfg.backend == chac::NnsBackend::exact && violations > 0) {
        return 1;
    }
    return 0;
}

struct MetricsOpts {
    std::string dendrogram;
    std::string labels;
    std::string map;
    std::string input;
    std::string format = "csv";
    std::string cuts = "all";
    double log_base = 1.1;
    std::string flatten = "skip";
    std::vector<double> inversion_deltas{0.0};
    std::string output;
    std::uint64_t seed = 0;
};

int run_metrics(const MetricsOpts& o) {
    const chac::Dendrogram dend = chac::load_dendrogram(o.dendrogram);
    const chac::Clustering truth = chac::normalize_labels(chac::load_labels(o.labels));
    std::vector<std::uint32_t> map;
    const std::vector<std::uint32_t>* map_ptr = nullptr;
    if (!o.map.empty()) {
        map = chac::load_leaf_map(o.map);
        map_ptr = &map;
    } else if (truth.size() != dend.num_leaves) {
        throw CLI::ValidationError(
            "label count differs from dendrogram leaves; pass --map from `cluster --map-out`");
    }

    chac::CutPolicy policy;
    policy.mode = o.cuts == "log" ? chac::CutMode::log_thresholds : chac::CutMode::all_thresholds;
    policy.log_base = o.log_base;
    policy.rule = o.flatten == "cut-above" ? chac::FlattenRule::cut_above
                                           : chac::FlattenRule::skip_unformed;

    nlohmann::json out;
    const chac::BestCut best_ari = chac::best_cut_score(dend, truth, chac::ari, policy, map_ptr);
    const chac::BestCut best_nmi = chac::best_cut_score(dend, truth, chac::nmi, policy, map_ptr);
    out["ari"] = {{"score", best_ari.score}, {"threshold", best_ari.threshold}};
    out["nmi"] = {{"score", best_nmi.score}, {"threshold", best_nmi.threshold}};

    if (map_ptr == nullptr) {
        out["purity"] = chac::dendrogram_purity(dend, truth, 2000, 1000000, o.seed);
    } else {
        // purity is defined over dendrogram leaves; derive leaf labels through
        // the map and refuse on conflicts
        std::vector<std::int64_t> leaf_labels(dend.num_leaves, -1);
        for (std::size_t i = 0; i < map.size(); ++i) {
            std::int64_t& slot = leaf_labels[map[i]];
            if (slot == -1) {
                slot = truth.labels[i];
            } else if (slot != truth.labels[i]) {
                throw CLI::ValidationError(
                    "duplicate input rows carry conflicting labels; purity undefined");
            }
        }
        out["purity"] =
            chac::dendrogram_purity(dend, chac::normalize_labels(leaf_labels), 2000, 1000000,
                                    o.seed);
    }

    if (!o.input.empty()) {
        const chac::Dataset points = chac::load_points(o.input, parse_format(o.format));
        const chac::Dataset leaves = chac::dedup_points(points).points;
        if (leaves.size() != dend.num_leaves) {
            throw CLI::ValidationError("dataset does not match the dendrogram leaf count");
        }
        out["dasgupta"] = chac::dasgupta_cost(dend, leaves, nullptr, 2000, 1000000, o.seed);
        out["dasgupta_kernel"] = "1/(1+dist)";
    }

    nlohmann::json inv = nlohmann::json::object();
    for (const double d : o.inversion_deltas) {
        inv[std::to_string(d)] = chac::delta_inversions(dend, d);
    }
    out["delta_inversions"] = inv;
    out["cuts"] = o.cuts;
    out["flatten"] = o.flatten == "cut-above" ? "cut_above" : "skip_unformed";

    if (o.output.empty()) {
        std::cout << out.dump(2) << '\n';
    } else {
        std::ofstream f(o.output);
        if (!f) {
            throw std::runtime_error("cannot open output file: " + o.output);
        }
        f << out.dump(2) << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Approximate centroid-linkage hierarchical clustering"};
    app.require_subcommand(1);

    ClusterOpts cluster_opts;
    CLI::App* cluster = app.add_subcommand("cluster", "run the engine and write a dendrogram");
    add_cluster_flags(cluster, cluster_opts);
    cluster->add_option("--output", cluster_opts.output, "dendrogram CSV path")->required();
    cluster->add_option("--stats-out", cluster_opts.stats_out, "run statistics JSON path");
    cluster->add_option("--map-out", cluster_opts.map_out, "input-row to leaf map CSV path");

    ClusterOpts bench_opts;
    CLI::App* bench = app.add_subcommand("bench", "run the engine and print timings and counters");
    add_cluster_flags(bench, bench_opts);
    bench->add_option("--output", bench_opts.output, "dendrogram CSV path");
    bench->add_option("--stats-out", bench_opts.stats_out, "run statistics JSON path");

    ClusterOpts inv_opts;
    CLI::App* invariant =
        app.add_subcommand("invariant-check", "debug run with a step-wise merge oracle");
    add_cluster_flags(invariant, inv_opts);

    MetricsOpts metrics_opts;
    CLI::App* metrics = app.add_subcommand("metrics", "score a dendrogram against labels");
    metrics->add_option("--dendrogram", metrics_opts.dendrogram, "dendrogram CSV path")
        ->required();
    metrics->add_option("--labels", metrics_opts.labels, "ground-truth labels path")->required();
    metrics->add_option("--map", metrics_opts.map, "leaf map from `cluster --map-out`");
    metrics->add_option("--input", metrics_opts.input, "point file (enables Dasgupta cost)");
    metrics->add_option("--format", metrics_opts.format, "input format")
        ->check(CLI::IsMember({"csv", "fvecs"}));
    metrics->add_option("--cuts", metrics_opts.cuts, "threshold policy")
        ->check(CLI::IsMember({"all", "log"}));
    metrics->add_option("--log-base", metrics_opts.log_base, "geometric step for --cuts log");
    metrics->add_option("--flatten", metrics_opts.flatten, "non-monotone flatten rule")
        ->check(CLI::IsMember({"skip", "cut-above"}));
    metrics->add_option("--inversion-delta", metrics_opts.inversion_deltas,
                        "delta values for the inversion count");
    metrics->add_option("--seed", metrics_opts.seed, "sampling seed for large instances");
    metrics->add_option("--output", metrics_opts.output, "scores JSON path (default stdout)");

    try {
        app.parse(argc, argv);
        if (cluster->parsed()) return run_cluster(cluster, cluster_opts, false);
        if (bench->parsed()) return run_cluster(bench, bench_opts, true);
        if (invariant->parsed()) return run_invariant_check(invariant, inv_opts);
        if (metrics->parsed()) return run_metrics(metrics_opts);
        return 2;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const chac::ParseError& e) {
        chac::log::error("%s", e.what());
        return 2;
    } catch (const std::invalid_argument& e) {
        chac::log::error("%s", e.what());
        return 2;
    } catch (const std::exception& e) {
        chac::log::error("%s", e.what());
        return 1;
    }
}
