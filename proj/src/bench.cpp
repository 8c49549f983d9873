#include "guitar/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <unordered_set>

#include <json.hpp>

#include "guitar/graph.hpp"

namespace guitar {

namespace {

constexpr double kNearTieWindow = 1e-9;

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt_alpha(double a) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", a);
    return buf;
}

} // namespace

RecallBreakdown recall_detail(const TopKResult& result,
                              std::span<const uint32_t> truth_indices,
                              std::span<const double> truth_scores, uint32_t k) {
    if (truth_indices.size() != k || truth_scores.size() != k) {
        throw std::runtime_error("recall: ground-truth row size does not match k");
    }
    std::unordered_set<uint32_t> truth(truth_indices.begin(), truth_indices.end());
    const double kth_score = truth_scores[k - 1];
    RecallBreakdown out;
    for (const TopKEntry& e : result.entries) {
        if (truth.count(e.vertex)) {
            out.exact_hits++;
        } else if (std::abs(e.score - kth_score) <= kNearTieWindow) {
            // float-order instability at score ties should not penalize the
            // search; counted separately from exact hits
            out.near_tie_hits++;
        }
    }
    out.value = static_cast<double>(out.exact_hits + out.near_tie_hits) /
                static_cast<double>(k);
    return out;
}

double recall(const TopKResult& result, std::span<const uint32_t> truth_indices,
              std::span<const double> truth_scores, uint32_t k) {
    return recall_detail(result, truth_indices, truth_scores, k).value;
}

void SweepGrid::validate() const {
    if (m_values.empty() || k_construction_values.empty() || k_search_values.empty() ||
        strategies.empty()) {
        throw std::runtime_error("sweep grid: m, k_construction, k_search and "
                                 "strategies must be non-empty");
    }
    if (k == 0) throw std::runtime_error("sweep grid: k must be >= 1");
    for (uint32_t ks : k_search_values) {
        if (ks < k) throw std::runtime_error("sweep grid: every k_search must be >= k");
    }
    for (double a : alpha_values) {
        if (!(a >= 1.0)) throw std::runtime_error("sweep grid: alpha values must be >= 1");
    }
    for (uint32_t fc : fixed_count_values) {
        if (fc == 0) throw std::runtime_error("sweep grid: fixed_count values must be >= 1");
    }
    bool needs_alpha = false, needs_fixed = false;
    for (Strategy s : strategies) {
        needs_alpha |= (s == Strategy::GuitarAngle || s == Strategy::GuitarProjection);
        needs_fixed |= (s == Strategy::GuitarFixedCount);
    }
    if (needs_alpha && alpha_values.empty()) {
        throw std::runtime_error("sweep grid: guitar strategies need alpha values");
    }
    if (needs_fixed && fixed_count_values.empty()) {
        throw std::runtime_error("sweep grid: guitar-fixed-count needs fixed_count values");
    }
}

SweepGrid load_grid(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open grid file: " + path);
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw std::runtime_error(path + ": invalid json: " + e.what());
    }
    SweepGrid g;
    g.m_values = j.at("m").get<std::vector<uint32_t>>();
    g.k_construction_values = j.at("k_construction").get<std::vector<uint32_t>>();
    g.k_search_values = j.at("k_search").get<std::vector<uint32_t>>();
    g.k = j.at("k").get<uint32_t>();
    for (const auto& s : j.at("strategies")) {
        g.strategies.push_back(parse_strategy(s.get<std::string>()));
    }
    if (j.contains("alpha")) g.alpha_values = j["alpha"].get<std::vector<double>>();
    if (j.contains("fixed_count")) {
        g.fixed_count_values = j["fixed_count"].get<std::vector<uint32_t>>();
    }
    if (j.contains("queries")) g.queries_path = j["queries"].get<std::string>();
    if (j.contains("graph_seed")) g.graph_seed = j["graph_seed"].get<uint64_t>();
    g.validate();
    return g;
}

std::string RunRecord::variant_label() const {
    switch (strategy) {
    case Strategy::Baseline: return "baseline";
    case Strategy::GuitarAngle: return "guitar-angle-" + fmt_alpha(alpha);
    case Strategy::GuitarProjection: return "guitar-projection-" + fmt_alpha(alpha);
    case Strategy::GuitarFixedCount:
        return "guitar-fixed-" + std::to_string(fixed_count);
    }
    throw std::logic_error("unreachable strategy");
}

namespace {

struct QueryOutcome {
    double recall = 0.0;
    uint32_t near_ties = 0;
    uint64_t nn = 0, grad = 0, hops = 0;
    int64_t elapsed_ns = 0;
};

RunRecord run_one(const ProximityGraph& graph, const VectorDataset& data,
                  const VectorDataset& queries, const MeasureSpec& spec,
                  const GroundTruth& truth, const SearchParams& params,
                  unsigned threads) {
    const uint32_t nq = queries.count();
    std::vector<QueryOutcome> outcomes(nq);

    auto worker = [&](uint32_t begin, uint32_t step) {
        for (uint32_t qi = begin; qi < nq; qi += step) {
            const auto t0 = std::chrono::steady_clock::now();
            const SearchResult r = search(graph, data, spec, queries.row(qi), params);
            const auto t1 = std::chrono::steady_clock::now();
            QueryOutcome& o = outcomes[qi];
            const RecallBreakdown rb = recall_detail(r.topk, truth.row_indices(qi),
                                                     truth.row_scores(qi), truth.k);
            o.recall = rb.value;
            o.near_ties = rb.near_tie_hits;
            o.nn = r.stats.nn_evals;
            o.grad = r.stats.grad_evals;
            o.hops = r.stats.hops;
            o.elapsed_ns =
                std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count();
        }
    };

    double wall_seconds = 0.0;
    if (threads <= 1) {
        worker(0, 1);
        int64_t total_ns = 0;
        for (const auto& o : outcomes) total_ns += o.elapsed_ns;
        wall_seconds = static_cast<double>(total_ns) * 1e-9;
    } else {
        const auto t0 = std::chrono::steady_clock::now();
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (unsigned t = 0; t < threads; ++t) {
            pool.emplace_back(worker, t, threads);
        }
        for (auto& th : pool) th.join();
        const auto t1 = std::chrono::steady_clock::now();
        wall_seconds = std::chrono::duration<double>(t1 - t0).count();
    }

    RunRecord rec;
    rec.strategy = params.strategy;
    rec.alpha = params.alpha;
    rec.fixed_count = params.fixed_count;
    rec.m = graph.params.M;
    rec.k_construction = graph.params.k_construction;
    rec.k_search = params.k_search;
    rec.k = params.k;
    rec.dataset_fingerprint = graph.dataset_fingerprint;

    double recall_sum = 0.0;
    uint64_t nn_sum = 0, grad_sum = 0, hops_sum = 0;
    for (const auto& o : outcomes) {
        recall_sum += o.recall;
        nn_sum += o.nn;
        grad_sum += o.grad;
        hops_sum += o.hops;
        rec.near_tie_hits += o.near_ties;
    }
    rec.recall = nq == 0 ? 0.0 : recall_sum / nq;
    rec.qps = wall_seconds > 0.0 ? nq / wall_seconds : 0.0;
    rec.mean_nn_evals = nq == 0 ? 0.0 : static_cast<double>(nn_sum) / nq;
    rec.mean_grad_evals = nq == 0 ? 0.0 : static_cast<double>(grad_sum) / nq;
    rec.mean_total_cost = rec.mean_nn_evals + 2.0 * rec.mean_grad_evals;
    rec.mean_hops = nq == 0 ? 0.0 : static_cast<double>(hops_sum) / nq;
    return rec;
}

} // namespace

std::vector<RunRecord> run_sweep(const SweepGrid& grid, const VectorDataset& data,
                                 const VectorDataset& queries, const MeasureSpec& spec,
                                 const GroundTruth& truth, unsigned threads,
                                 const std::function<void(const RunRecord&)>& on_record) {
    grid.validate();
    if (truth.k != grid.k) {
        throw std::runtime_error("run_sweep: ground truth k does not match grid k");
    }
    if (truth.query_count() != queries.count()) {
        throw std::runtime_error("run_sweep: ground truth query count does not match queries");
    }

    std::vector<RunRecord> records;
    for (uint32_t m : grid.m_values) {
        for (uint32_t kc : grid.k_construction_values) {
            const ProximityGraph graph = build_graph(data, {m, kc, grid.graph_seed});
            for (Strategy strat : grid.strategies) {
                SearchParams params;
                params.k = grid.k;
                params.strategy = strat;

                // one sweep axis per strategy family
                std::vector<SearchParams> variants;
                if (strat == Strategy::Baseline) {
                    variants.push_back(params);
                } else if (strat == Strategy::GuitarFixedCount) {
                    for (uint32_t fc : grid.fixed_count_values) {
                        params.fixed_count = fc;
                        variants.push_back(params);
                    }
                } else {
                    for (double a : grid.alpha_values) {
                        params.alpha = a;
                        variants.push_back(params);
                    }
                }

                for (SearchParams v : variants) {
                    for (uint32_t ks : grid.k_search_values) {
                        v.k_search = ks;
                        RunRecord rec = run_one(graph, data, queries, spec, truth, v, threads);
                        if (on_record) on_record(rec);
                        records.push_back(std::move(rec));
                    }
                }
            }
        }
    }
    return records;
}

Metric parse_metric(const std::string& name) {
    if (name == "qps") return Metric::Qps;
    if (name == "total_cost") return Metric::TotalCost;
    throw std::runtime_error("unknown metric: " + name);
}

ParetoCurve pareto_curve(std::span<const RunRecord> records, Metric metric) {
    if (records.empty()) {
        throw std::runtime_error("pareto_curve: no records");
    }
    ParetoCurve curve;
    curve.metric = metric;
    for (const RunRecord& r : records) {
        curve.max_recall = std::max(curve.max_recall, r.recall);
    }
    const double width = curve.max_recall / 100.0;

    std::map<int, double> best; // bucket -> best metric value
    for (const RunRecord& r : records) {
        int bucket = 0;
        if (width > 0.0) {
            bucket = std::min(99, static_cast<int>(std::floor(r.recall / width)));
        }
        const double value = metric == Metric::Qps ? r.qps : r.mean_total_cost;
        auto it = best.find(bucket);
        if (it == best.end()) {
            best[bucket] = value;
        } else if (metric == Metric::Qps ? value > it->second : value < it->second) {
            it->second = value;
        }
    }
    for (const auto& [bucket, value] : best) {
        curve.points.push_back({(bucket + 1) * width, value});
    }
    return curve;
}

std::vector<BreakdownRow> breakdown_table(std::span<const RunRecord> records,
                                          std::span<const double> levels) {
    // variants in first-appearance order
    std::vector<std::string> variants;
    for (const RunRecord& r : records) {
        const std::string label = r.variant_label();
        if (std::find(variants.begin(), variants.end(), label) == variants.end()) {
            variants.push_back(label);
        }
    }

    std::vector<BreakdownRow> rows;
    for (const std::string& variant : variants) {
        for (double level : levels) {
            BreakdownRow row;
            row.variant = variant;
            row.level = level;
            const RunRecord* pick = nullptr;
            for (const RunRecord& r : records) {
                if (r.variant_label() != variant || r.recall < level) continue;
                if (!pick || r.mean_total_cost < pick->mean_total_cost ||
                    (r.mean_total_cost == pick->mean_total_cost && r.qps > pick->qps)) {
                    pick = &r;
                }
            }
            if (pick) {
                row.reachable = true;
                row.nn_evals = pick->mean_nn_evals;
                row.grad_evals = pick->mean_grad_evals;
                row.total_cost = pick->mean_nn_evals + 2.0 * pick->mean_grad_evals;
                row.qps = pick->qps;
            }
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

namespace {

const char* kRecordsHeader =
    "strategy,alpha,fixed_count,m,k_construction,k_search,k,dataset_fingerprint,"
    "recall,qps,mean_nn_evals,mean_grad_evals,mean_total_cost,mean_hops,near_tie_hits";

} // namespace

void write_records_csv(std::span<const RunRecord> records, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open for write: " + path);
    }
    out << kRecordsHeader << "\n";
    for (const RunRecord& r : records) {
        out << strategy_name(r.strategy) << ',' << fmt_double(r.alpha) << ','
            << r.fixed_count << ',' << r.m << ',' << r.k_construction << ','
            << r.k_search << ',' << r.k << ',' << r.dataset_fingerprint << ','
            << fmt_double(r.recall) << ',' << fmt_double(r.qps) << ','
            << fmt_double(r.mean_nn_evals) << ',' << fmt_double(r.mean_grad_evals) << ','
            << fmt_double(r.mean_total_cost) << ',' << fmt_double(r.mean_hops) << ','
            << r.near_tie_hits << "\n";
        out.flush(); // keep partial results on interruption
    }
    if (!out) {
        throw std::runtime_error("write failed: " + path);
    }
}

std::vector<RunRecord> read_records_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open records file: " + path);
    }
    std::string line;
    if (!std::getline(in, line) || line != kRecordsHeader) {
        throw std::runtime_error(path + ": not a records csv (bad header)");
    }
    std::vector<RunRecord> records;
    size_t row = 1;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() != 15) {
            throw std::runtime_error(path + ": malformed row " + std::to_string(row));
        }
        RunRecord r;
        try {
            r.strategy = parse_strategy(fields[0]);
            r.alpha = std::stod(fields[1]);
            r.fixed_count = static_cast<uint32_t>(std::stoul(fields[2]));
            r.m = static_cast<uint32_t>(std::stoul(fields[3]));
            r.k_construction = static_cast<uint32_t>(std::stoul(fields[4]));
            r.k_search = static_cast<uint32_t>(std::stoul(fields[5]));
            r.k = static_cast<uint32_t>(std::stoul(fields[6]));
            r.dataset_fingerprint = std::stoull(fields[7]);
            r.recall = std::stod(fields[8]);
            r.qps = std::stod(fields[9]);
            r.mean_nn_evals = std::stod(fields[10]);
            r.mean_grad_evals = std::stod(fields[11]);
            r.mean_total_cost = std::stod(fields[12]);
            r.mean_hops = std::stod(fields[13]);
            r.near_tie_hits = std::stoull(fields[14]);
        } catch (const std::exception&) {
            throw std::runtime_error(path + ": malformed row " + std::to_string(row));
        }
        records.push_back(std::move(r));
        ++row;
    }
    return records;
}

void write_curve_json(const ParetoCurve& curve, const std::string& path) {
    nlohmann::json j;
    j["metric"] = curve.metric == Metric::Qps ? "qps" : "total_cost";
    j["max_recall"] = curve.max_recall;
    j["points"] = nlohmann::json::array();
    for (const ParetoPoint& p : curve.points) {
        j["points"].push_back({{"recall_bucket_upper", p.recall_bucket_upper},
                               {"value", p.value}});
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open for write: " + path);
    }
    out << j.dump(2) << "\n";
    if (!out) {
        throw std::runtime_error("write failed: " + path);
    }
}

void write_breakdown_csv(std::span<const BreakdownRow> rows, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open for write: " + path);
    }
    out << "variant,level,reachable,nn_evals,grad_evals,total_cost,qps\n";
    for (const BreakdownRow& r : rows) {
        out << r.variant << ',' << fmt_double(r.level) << ',' << (r.reachable ? 1 : 0)
            << ',' << fmt_double(r.nn_evals) << ',' << fmt_double(r.grad_evals) << ','
            << fmt_double(r.total_cost) << ',' << fmt_double(r.qps) << "\n";
    }
    if (!out) {
        throw std::runtime_error("write failed: " + path);
    }
}

void write_breakdown_json(std::span<const BreakdownRow> rows, const std::string& path) {
    nlohmann::json j = nlohmann::json::array();
    for (const BreakdownRow& r : rows) {
        nlohmann::json row;
        row["variant"] = r.variant;
        row["level"] = r.level;
        row["reachable"] = r.reachable;
        if (r.reachable) {
            row["nn_evals"] = r.nn_evals;
            row["grad_evals"] = r.grad_evals;
            row["total_cost"] = r.total_cost;
            row["qps"] = r.qps;
        }
        j.push_back(std::move(row));
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open for write: " + path);
    }
    out << j.dump(2) << "\n";
    if (!out) {
        throw std::runtime_error("write failed: " + path);
    }
}

std::string format_breakdown(std::span<const BreakdownRow> rows) {
    std::ostringstream out;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%-26s %8s %10s %10s %10s %10s\n", "variant", "level",
                  "#NN", "#Grad", "Total", "QPS");
    out << buf;
    for (const BreakdownRow& r : rows) {
        if (r.reachable) {
            std::snprintf(buf, sizeof(buf), "%-26s %8.2f %10.2f %10.2f %10.2f %10.2f\n",
                          r.variant.c_str(), r.level, r.nn_evals, r.grad_evals,
                          r.total_cost, r.qps);
        } else {
            std::snprintf(buf, sizeof(buf), "%-26s %8.2f %10s %10s %10s %10s\n",
                          r.variant.c_str(), r.level, "-", "-", "-", "unreachable");
        }
        out << buf;
    }
    return out.str();
}

} // namespace guitar
