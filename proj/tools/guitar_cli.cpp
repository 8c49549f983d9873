// Command-line front end: dataset generation, graph construction, ground
// truth, single searches, parameter sweeps and report generation.

#include <cinttypes>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "guitar/bench.hpp"
#include "guitar/dataset.hpp"
#include "guitar/graph.hpp"
#include "guitar/measure.hpp"
#include "guitar/oracle.hpp"
#include "guitar/search.hpp"

namespace {

using namespace guitar;

struct MeasureArgs {
    std::string path;
    std::string kind;
    uint64_t seed = 0;

    void attach(CLI::App* cmd) {
        cmd->add_option("--measure", path, "measure weight file");
        cmd->add_option("--measure-kind", kind,
                        "random measure kind (inner-product|cosine|neg-l2|mlp-sigmoid|deepfm)");
        cmd->add_option("--measure-seed", seed, "seed for --measure-kind");
    }

    MeasureSpec resolve(uint32_t dim) const {
        if (!path.empty()) return load_measure(path);
        if (kind.empty()) {
            throw CLI::ValidationError("measure", "need --measure or --measure-kind");
        }
        return make_random_measure(parse_measure_kind(kind), dim, seed);
    }
};

int cmd_gen(const std::string& out, uint32_t n, uint32_t dim, uint64_t seed,
            const std::string& dist, const std::string& format) {
    const VectorDataset ds = generate_synthetic(n, dim, seed, parse_distribution(dist));
    save_dataset(ds, out, parse_file_format(format));
    std::printf("wrote %u vectors (dim %u) to %s\n", ds.count(), ds.dim, out.c_str());
    return 0;
}

int cmd_gen_measure(const std::string& out, const std::string& kind, uint32_t dim,
                    uint64_t seed, const std::vector<uint32_t>& layers,
                    uint32_t fm_dim, uint32_t deep_dim,
                    const std::vector<uint32_t>& hidden) {
    MeasureSpec spec;
    const MeasureKind mk = parse_measure_kind(kind);
    if (mk == MeasureKind::MlpSigmoid && !layers.empty()) {
        spec = make_random_mlp(layers, seed);
    } else if (mk == MeasureKind::DeepFm && fm_dim > 0 && deep_dim > 0) {
        spec = make_random_deepfm(fm_dim, deep_dim,
                                  hidden.empty() ? std::vector<uint32_t>{32, 32} : hidden,
                                  seed);
    } else {
        spec = make_random_measure(mk, dim, seed);
    }
    save_measure(spec, out);
    std::printf("wrote %s measure (%zu weights) to %s\n", kind.c_str(),
                spec.weights.size(), out.c_str());
    return 0;
}

int cmd_build(const std::string& data_path, const std::string& format, uint32_t M,
              uint32_t kc, uint64_t seed, const std::string& out) {
    const VectorDataset data = load_dataset(data_path, parse_file_format(format));
    const ProximityGraph graph = build_graph(data, {M, kc, seed});
    save_graph(graph, out);
    std::printf("built graph over %u vectors (M=%u, k_construction=%u), "
                "%u unreachable, wrote %s\n",
                graph.size(), M, kc, graph.unreachable_count, out.c_str());
    return 0;
}

int cmd_groundtruth(const std::string& data_path, const std::string& queries_path,
                    const std::string& format, const MeasureArgs& margs, uint32_t k,
                    const std::string& out) {
    const FileFormat f = parse_file_format(format);
    const VectorDataset data = load_dataset(data_path, f);
    const VectorDataset queries = load_dataset(queries_path, f);
    const MeasureSpec spec = margs.resolve(data.dim);
    const GroundTruth gt = build_groundtruth(data, queries, spec, k);
    save_groundtruth(gt, out);
    std::printf("wrote ground truth for %u queries (k=%u) to %s\n", gt.query_count(), k,
                out.c_str());
    return 0;
}

int cmd_search(const std::string& graph_path, const std::string& data_path,
               const std::string& queries_path, const std::string& format,
               const MeasureArgs& margs, const std::string& strategy, double alpha,
               uint32_t k, uint32_t k_search, uint32_t fixed_count,
               const std::string& out) {
    const FileFormat f = parse_file_format(format);
    const VectorDataset data = load_dataset(data_path, f);
    const VectorDataset queries = load_dataset(queries_path, f);
    const ProximityGraph graph = load_graph(graph_path, data);
    const MeasureSpec spec = margs.resolve(data.dim);

    SearchParams params;
    params.k = k;
    params.k_search = k_search;
    params.strategy = parse_strategy(strategy);
    params.alpha = alpha;
    params.fixed_count = fixed_count;

    std::ofstream csv(out, std::ios::trunc);
    if (!csv) {
        throw std::runtime_error("cannot open for write: " + out);
    }
    csv << "query_id,rank,vertex,score,nn_evals,grad_evals,hops,elapsed_ns\n";
    char buf[192];
    for (uint32_t qi = 0; qi < queries.count(); ++qi) {
        const auto t0 = std::chrono::steady_clock::now();
        const SearchResult r = search(graph, data, spec, queries.row(qi), params);
        const auto t1 = std::chrono::steady_clock::now();
        const int64_t ns =
            std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count();
        for (size_t rank = 0; rank < r.topk.entries.size(); ++rank) {
            const TopKEntry& e = r.topk.entries[rank];
            std::snprintf(buf, sizeof(buf),
                          "%u,%zu,%u,%.17g,%" PRIu64 ",%" PRIu64 ",%" PRIu64 ",%" PRId64 "\n",
                          qi, rank, e.vertex, e.score, r.stats.nn_evals,
                          r.stats.grad_evals, r.stats.hops, ns);
            csv << buf;
        }
    }
    std::printf("wrote per-query results to %s\n", out.c_str());
    return 0;
}

int cmd_sweep(const std::string& grid_path, const std::string& data_path,
              std::string queries_path, const std::string& format,
              const MeasureArgs& margs, const std::string& truth_path,
              const std::string& out_dir, unsigned threads) {
    const SweepGrid grid = load_grid(grid_path);
    const FileFormat f = parse_file_format(format);
    const VectorDataset data = load_dataset(data_path, f);
    if (queries_path.empty()) queries_path = grid.queries_path;
    if (queries_path.empty()) {
        throw CLI::ValidationError("sweep", "need --queries or a queries path in the grid");
    }
    const VectorDataset queries = load_dataset(queries_path, f);
    const MeasureSpec spec = margs.resolve(data.dim);
    const GroundTruth truth = load_groundtruth(truth_path);

    // one stream per strategy so runs diff cleanly
    std::vector<RunRecord> records;
    const auto t0 = std::chrono::steady_clock::now();
    records = run_sweep(grid, data, queries, spec, truth, threads,
                        [&](const RunRecord& r) {
                            std::printf("%-26s M=%u kc=%u ks=%-4u recall=%.4f "
                                        "total=%.1f qps=%.1f\n",
                                        r.variant_label().c_str(), r.m, r.k_construction,
                                        r.k_search, r.recall, r.mean_total_cost, r.qps);
                            std::fflush(stdout);
                        });
    const auto t1 = std::chrono::steady_clock::now();

    for (Strategy s : grid.strategies) {
        std::vector<RunRecord> subset;
        for (const RunRecord& r : records) {
            if (r.strategy == s) subset.push_back(r);
        }
        const std::string path = out_dir + "/records_" + strategy_name(s) + ".csv";
        write_records_csv(subset, path);
        std::printf("wrote %zu records to %s\n", subset.size(), path.c_str());
    }
    std::printf("sweep finished in %.1fs (%zu records)\n",
                std::chrono::duration<double>(t1 - t0).count(), records.size());
    return 0;
}

std::vector<RunRecord> load_all_records(const std::vector<std::string>& paths) {
    std::vector<RunRecord> records;
    for (const std::string& p : paths) {
        auto part = read_records_csv(p);
        records.insert(records.end(), part.begin(), part.end());
    }
    if (records.empty()) {
        throw std::runtime_error("no records found in the given files");
    }
    return records;
}

int cmd_curve(const std::vector<std::string>& record_paths, const std::string& metric,
              const std::string& out) {
    const auto records = load_all_records(record_paths);
    const ParetoCurve curve = pareto_curve(records, parse_metric(metric));
    write_curve_json(curve, out);
    std::printf("wrote %zu curve points (max recall %.4f) to %s\n", curve.points.size(),
                curve.max_recall, out.c_str());
    return 0;
}

int cmd_breakdown(const std::vector<std::string>& record_paths,
                  const std::vector<double>& levels, const std::string& out) {
    const auto records = load_all_records(record_paths);
    const auto rows = breakdown_table(records, levels);
    std::fputs(format_breakdown(rows).c_str(), stdout);
    if (!out.empty()) {
        if (out.size() > 4 && out.substr(out.size() - 5) == ".json") {
            write_breakdown_json(rows, out);
        } else {
            write_breakdown_csv(rows, out);
        }
        std::printf("wrote breakdown to %s\n", out.c_str());
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"proximity-graph search under neural ranking measures"};
    app.require_subcommand(1);

    std::string out, data_path, queries_path, graph_path, truth_path, grid_path;
    std::string format = "raw-f32";
    std::string dist = "gaussian";
    std::string kind, strategy = "baseline", metric = "qps", out_dir = ".";
    uint32_t n = 0, dim = 0, k = 10, k_search = 64, M = 16, kc = 100, fixed_count = 1;
    uint32_t fm_dim = 0, deep_dim = 0;
    uint64_t seed = 0;
    double alpha = 1.01;
    unsigned threads = 1;
    std::vector<uint32_t> layers, hidden;
    std::vector<std::string> record_paths;
    std::vector<double> levels{0.85, 0.90, 0.95};
    MeasureArgs margs;

    auto* gen = app.add_subcommand("gen", "generate a synthetic dataset");
    gen->add_option("--out", out)->required();
    gen->add_option("--n", n)->required();
    gen->add_option("--dim", dim)->required();
    gen->add_option("--seed", seed);
    gen->add_option("--dist", dist, "uniform|gaussian");
    gen->add_option("--format", format, "raw-f32|csv");

    auto* genm = app.add_subcommand("gen-measure", "generate a random measure file");
    genm->add_option("--out", out)->required();
    genm->add_option("--kind", kind)->required();
    genm->add_option("--dim", dim, "vector dim (default architectures)");
    genm->add_option("--seed", seed);
    genm->add_option("--layers", layers, "mlp-sigmoid: full layer dims");
    genm->add_option("--fm-dim", fm_dim, "deepfm: factorization dims");
    genm->add_option("--deep-dim", deep_dim, "deepfm: deep-part dims");
    genm->add_option("--hidden", hidden, "deepfm: hidden layer dims");

    auto* build = app.add_subcommand("build", "build the l2 proximity graph");
    build->add_option("--data", data_path)->required();
    build->add_option("--format", format);
    build->add_option("--M", M);
    build->add_option("--kc", kc, "construction queue width");
    build->add_option("--seed", seed);
    build->add_option("--out", out)->required();

    auto* gt = app.add_subcommand("groundtruth", "exact top-k per query");
    gt->add_option("--data", data_path)->required();
    gt->add_option("--queries", queries_path)->required();
    gt->add_option("--format", format);
    gt->add_option("--k", k);
    gt->add_option("--out", out)->required();
    margs.attach(gt);

    auto* se = app.add_subcommand("search", "run one search configuration");
    se->add_option("--graph", graph_path)->required();
    se->add_option("--data", data_path)->required();
    se->add_option("--queries", queries_path)->required();
    se->add_option("--format", format);
    se->add_option("--strategy", strategy,
                   "baseline|guitar-angle|guitar-projection|guitar-fixed-count");
    se->add_option("--alpha", alpha, ">= 1, inf disables pruning");
    se->add_option("--k", k);
    se->add_option("--k-search", k_search);
    se->add_option("--fixed-count", fixed_count);
    se->add_option("--out", out)->required();
    margs.attach(se);

    auto* sw = app.add_subcommand("sweep", "run a parameter grid");
    sw->add_option("--grid", grid_path)->required();
    sw->add_option("--data", data_path)->required();
    sw->add_option("--queries", queries_path);
    sw->add_option("--format", format);
    sw->add_option("--truth", truth_path)->required();
    sw->add_option("--out-dir", out_dir);
    sw->add_option("--threads", threads, "parallel query workers (timing mode)");
    margs.attach(sw);

    auto* cu = app.add_subcommand("curve", "bucketed recall-vs-metric curve");
    cu->add_option("--records", record_paths)->required();
    cu->add_option("--metric", metric, "qps|total_cost");
    cu->add_option("--out", out)->required();

    auto* br = app.add_subcommand("breakdown", "cost table at recall levels");
    br->add_option("--records", record_paths)->required();
    br->add_option("--levels", levels)->delimiter(',');
    br->add_option("--out", out);

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gen(out, n, dim, seed, dist, format);
        if (genm->parsed()) {
            return cmd_gen_measure(out, kind, dim, seed, layers, fm_dim, deep_dim, hidden);
        }
        if (build->parsed()) return cmd_build(data_path, format, M, kc, seed, out);
        if (gt->parsed()) {
            return cmd_groundtruth(data_path, queries_path, format, margs, k, out);
        }
        if (se->parsed()) {
            return cmd_search(graph_path, data_path, queries_path, format, margs, strategy,
                              alpha, k, k_search, fixed_count, out);
        }
        if (sw->parsed()) {
            return cmd_sweep(grid_path, data_path, queries_path, format, margs, truth_path,
                             out_dir, threads);
        }
        if (cu->parsed()) return cmd_curve(record_paths, metric, out);
        if (br->parsed()) return cmd_breakdown(record_paths, levels, out);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
