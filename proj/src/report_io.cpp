#include "pfnbench/report_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "pfnbench/errors.hpp"
#include "pfnbench/pareto.hpp"

namespace pfnbench {
namespace {

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += "\"";
    return out;
}

std::vector<std::string> parse_csv_row(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cell += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cell += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            cells.push_back(std::move(cell));
            cell.clear();
        } else {
            cell += c;
        }
    }
    cells.push_back(std::move(cell));
    return cells;
}

constexpr const char* kReportHeader =
    "dataset,method,split,fraction,n_train,f1,macro_f1,accuracy,"
    "tune_seconds,train_seconds,infer_seconds,status,reason,tuned_params";

}  // namespace

void save_report(const std::vector<BenchmarkRecord>& records, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("save_report: cannot open " + path);
    f << kReportHeader << "\n";
    char buf[64];
    for (const auto& r : records) {
        f << csv_escape(r.dataset) << ',' << csv_escape(r.method) << ',' << r.split_id << ',';
        std::snprintf(buf, sizeof(buf), "%.2f", r.fraction);
        f << buf << ',' << r.n_train_used << ',';
        std::snprintf(buf, sizeof(buf), "%.6f,%.6f,%.6f", r.f1, r.macro_f1, r.accuracy);
        f << buf << ',';
        std::snprintf(buf, sizeof(buf), "%.6f,%.6f,%.6f", r.tune_seconds, r.train_seconds,
                      r.infer_seconds);
        f << buf << ',' << r.status << ',' << csv_escape(r.reason) << ','
          << csv_escape(r.tuned_params) << "\n";
    }
    if (!f) throw IoError("save_report: write failed for " + path);
}

std::vector<BenchmarkRecord> load_report(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("load_report: cannot open " + path);
    std::string line;
    if (!std::getline(f, line)) throw ParseError(path + ": empty report");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kReportHeader) throw ParseError(path + ": unexpected report header");

    std::vector<BenchmarkRecord> records;
    std::size_t line_no = 1;
    while (std::getline(f, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = parse_csv_row(line);
        if (cells.size() != 14) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": expected 14 cells");
        }
        try {
            BenchmarkRecord r;
            r.dataset = cells[0];
            r.method = cells[1];
            r.split_id = std::stoi(cells[2]);
            r.fraction = std::stod(cells[3]);
            r.n_train_used = static_cast<std::size_t>(std::stoull(cells[4]));
            r.f1 = std::stod(cells[5]);
            r.macro_f1 = std::stod(cells[6]);
            r.accuracy = std::stod(cells[7]);
            r.tune_seconds = std::stod(cells[8]);
            r.train_seconds = std::stod(cells[9]);
            r.infer_seconds = std::stod(cells[10]);
            r.status = cells[11];
            r.reason = cells[12];
            r.tuned_params = cells[13];
            records.push_back(std::move(r));
        } catch (const std::exception& e) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return records;
}

void save_train_log(const TrainLog& log, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("save_train_log: cannot open " + path);
    f << "step,loss,holdout_acc,seconds\n";
    char buf[96];
    for (const auto& e : log.entries) {
        std::snprintf(buf, sizeof(buf), "%d,%.6f,%.6f,%.3f\n", e.step, e.loss, e.holdout_acc,
                      e.seconds);
        f << buf;
    }
    if (!f) throw IoError("save_train_log: write failed for " + path);
}

// ------------------------------------------------------------- aggregates

namespace {

struct BlockKey {
    std::string dataset;
    int split;
    double fraction;

    bool operator<(const BlockKey& o) const {
        return std::tie(dataset, split, fraction) < std::tie(o.dataset, o.split, o.fraction);
    }
};

}  // namespace

StatsSummary compute_stats(const std::vector<BenchmarkRecord>& records,
                           const StatsOptions& options) {
    if (records.empty()) throw ConfigError("compute_stats: no records");

    StatsSummary out;
    out.options = options;

    std::set<std::string> method_set, dataset_set;
    for (const auto& r : records) {
        method_set.insert(r.method);
        dataset_set.insert(r.dataset);
    }
    out.methods.assign(method_set.begin(), method_set.end());
    out.datasets.assign(dataset_set.begin(), dataset_set.end());
    const std::size_t k = out.methods.size();
    auto method_index = [&](const std::string& m) {
        return static_cast<std::size_t>(
            std::lower_bound(out.methods.begin(), out.methods.end(), m) - out.methods.begin());
    };
    auto dataset_index = [&](const std::string& d) {
        return static_cast<std::size_t>(
            std::lower_bound(out.datasets.begin(), out.datasets.end(), d) - out.datasets.begin());
    };

    // group records into (dataset, split, fraction) blocks
    std::map<BlockKey, std::vector<const BenchmarkRecord*>> blocks;
    for (const auto& r : records) {
        blocks[{r.dataset, r.split_id, r.fraction}].push_back(&r);
    }

    std::vector<std::vector<double>> f1_rows, time_rows;
    for (const auto& [key, cell_records] : blocks) {
        if (cell_records.size() != k) {
            ++out.excluded_blocks;
            continue;
        }
        std::vector<double> f1_row(k), time_row(k);
        bool ok = true;
        for (const auto* r : cell_records) {
            if (r->status != "ok") {
                ok = false;
                break;
            }
            f1_row[method_index(r->method)] = r->f1;
            time_row[method_index(r->method)] = r->total_seconds();
        }
        if (!ok) {
            ++out.excluded_blocks;
            continue;
        }
        f1_rows.push_back(std::move(f1_row));
        time_rows.push_back(std::move(time_row));
    }
    if (f1_rows.empty()) throw ConfigError("compute_stats: no complete blocks");

    Matrix<double> f1_scores(f1_rows.size(), k), time_scores(time_rows.size(), k);
    for (std::size_t i = 0; i < f1_rows.size(); ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            f1_scores(i, j) = f1_rows[i][j];
            time_scores(i, j) = time_rows[i][j];
        }
    }
    out.f1_ranks = rank_analysis(f1_scores, out.methods, /*higher_better=*/true, options.alpha,
                                 options.wilcoxon_exact_limit);
    out.time_ranks = rank_analysis(time_scores, out.methods, /*higher_better=*/false,
                                   options.alpha, options.wilcoxon_exact_limit);

    // --- data efficiency and Pareto, per (dataset, split) ---
    out.efficiency = Matrix<double>(out.datasets.size(), k);
    out.pareto_avg = Matrix<double>(out.datasets.size(), k);
    Matrix<double> eff_counts(out.datasets.size(), k), pareto_counts(out.datasets.size(), k);

    std::map<std::pair<std::string, int>, std::vector<const BenchmarkRecord*>> split_groups;
    for (const auto& r : records) split_groups[{r.dataset, r.split_id}].push_back(&r);

    for (const auto& [key, recs] : split_groups) {
        // per-method curves over the fraction grid
        std::map<std::string, std::map<double, const BenchmarkRecord*>> per_method;
        bool ok = true;
        for (const auto* r : recs) {
            if (r->status != "ok") ok = false;
            per_method[r->method][r->fraction] = r;
        }
        if (!ok || per_method.size() != k) continue;

        std::vector<double> fractions;
        for (const auto& [frac, _] : per_method.begin()->second) fractions.push_back(frac);
        std::vector<std::vector<double>> curves(k);
        std::vector<std::vector<double>> times(k);
        std::vector<std::size_t> counts;
        bool grids_match = true;
        for (const auto& [m, curve] : per_method) {
            if (curve.size() != fractions.size()) grids_match = false;
        }
        if (!grids_match) continue;
        for (double frac : fractions) {
            counts.push_back(per_method.begin()->second.at(frac)->n_train_used);
        }
        for (const auto& [m, curve] : per_method) {
            const std::size_t mi = method_index(m);
            for (double frac : fractions) {
                curves[mi].push_back(curve.at(frac)->f1);
                times[mi].push_back(curve.at(frac)->total_seconds());
            }
        }

        const std::size_t di = dataset_index(key.first);
        const std::size_t n_max = counts.back();
        const auto eff = data_efficiency(curves, counts, n_max, options.efficiency_threshold);
        for (std::size_t m = 0; m < k; ++m) {
            out.efficiency(di, m) += eff[m].eta;
            eff_counts(di, m) += 1.0;
        }

        std::vector<std::pair<double, double>> points(k);
        for (std::size_t m = 0; m < k; ++m) {
            std::vector<double> time_vals = times[m];
            if (options.log_time_auc) {
                for (auto& t : time_vals) t = std::log10(std::max(t, 1e-9));
            }
            points[m] = {auc_trapezoid(fractions, curves[m]),
                         auc_trapezoid(fractions, time_vals)};
        }
        const auto ranks = pareto_rank(points);
        for (std::size_t m = 0; m < k; ++m) {
            out.pareto_avg(di, m) += static_cast<double>(ranks[m]);
            pareto_counts(di, m) += 1.0;
        }
    }
    for (std::size_t d = 0; d < out.datasets.size(); ++d) {
        for (std::size_t m = 0; m < k; ++m) {
            if (eff_counts(d, m) > 0.0) out.efficiency(d, m) /= eff_counts(d, m);
            if (pareto_counts(d, m) > 0.0) out.pareto_avg(d, m) /= pareto_counts(d, m);
        }
    }
    out.efficiency_avg.assign(k, 0.0);
    for (std::size_t m = 0; m < k; ++m) {
        for (std::size_t d = 0; d < out.datasets.size(); ++d) {
            out.efficiency_avg[m] += out.efficiency(d, m);
        }
        out.efficiency_avg[m] /= static_cast<double>(out.datasets.size());
    }
    return out;
}

namespace {

nlohmann::json rank_summary_json(const RankSummary& rs) {
    nlohmann::json j;
    j["methods"] = rs.methods;
    j["avg_ranks"] = rs.avg_ranks;
    j["friedman_applicable"] = rs.friedman_applicable;
    if (rs.friedman_applicable) {
        j["friedman"] = {{"statistic", rs.friedman.statistic},
                         {"p", rs.friedman.p},
                         {"n_blocks", rs.friedman.n_blocks}};
    }
    j["pairwise_performed"] = rs.pairwise_performed;
    const std::size_t k = rs.methods.size();
    auto matrix_json = [&](const Matrix<double>& m) {
        nlohmann::json rows = nlohmann::json::array();
        for (std::size_t i = 0; i < k; ++i) {
            nlohmann::json row = nlohmann::json::array();
            for (std::size_t jj = 0; jj < k; ++jj) row.push_back(m(i, jj));
            rows.push_back(row);
        }
        return rows;
    };
    j["p_raw"] = matrix_json(rs.p_raw);
    j["p_adjusted"] = matrix_json(rs.p_adjusted);
    j["groups"] = rs.groups;
    j["alpha"] = rs.alpha;
    return j;
}

}  // namespace

void save_stats_summary(const StatsSummary& summary, const std::string& json_path) {
    nlohmann::json j;
    j["methods"] = summary.methods;
    j["datasets"] = summary.datasets;
    j["f1_ranks"] = rank_summary_json(summary.f1_ranks);
    j["time_ranks"] = rank_summary_json(summary.time_ranks);
    nlohmann::json eff = nlohmann::json::object();
    for (std::size_t d = 0; d < summary.datasets.size(); ++d) {
        nlohmann::json row = nlohmann::json::object();
        for (std::size_t m = 0; m < summary.methods.size(); ++m) {
            row[summary.methods[m]] = summary.efficiency(d, m);
        }
        eff[summary.datasets[d]] = row;
    }
    j["data_efficiency"] = eff;
    nlohmann::json eff_avg = nlohmann::json::object();
    for (std::size_t m = 0; m < summary.methods.size(); ++m) {
        eff_avg[summary.methods[m]] = summary.efficiency_avg[m];
    }
    j["data_efficiency_average"] = eff_avg;
    nlohmann::json pareto = nlohmann::json::object();
    for (std::size_t d = 0; d < summary.datasets.size(); ++d) {
        nlohmann::json row = nlohmann::json::object();
        for (std::size_t m = 0; m < summary.methods.size(); ++m) {
            row[summary.methods[m]] = summary.pareto_avg(d, m);
        }
        pareto[summary.datasets[d]] = row;
    }
    j["pareto_avg_rank"] = pareto;
    j["excluded_blocks"] = summary.excluded_blocks;
    j["options"] = {{"alpha", summary.options.alpha},
                    {"efficiency_threshold", summary.options.efficiency_threshold},
                    {"log_time_auc", summary.options.log_time_auc}};

    std::ofstream f(json_path, std::ios::trunc);
    if (!f) throw IoError("save_stats_summary: cannot open " + json_path);
    f << j.dump(2) << "\n";
    if (!f) throw IoError("save_stats_summary: write failed");
}

namespace {

void render_rank_block(std::ostringstream& os, const std::string& title, const RankSummary& rs) {
    os << title << "\n";
    std::vector<std::size_t> order(rs.methods.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return rs.avg_ranks[a] < rs.avg_ranks[b]; });
    for (std::size_t i : order) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "  %-8s avg rank %.3f\n", rs.methods[i].c_str(),
                      rs.avg_ranks[i]);
        os << buf;
    }
    if (rs.friedman_applicable) {
        char buf[96];
        std::snprintf(buf, sizeof(buf), "  Friedman chi2 = %.3f, p = %.4g\n",
                      rs.friedman.statistic, rs.friedman.p);
        os << buf;
    }
    if (!rs.pairwise_performed) {
        os << "  omnibus not rejected at alpha: all methods grouped together\n";
    }
    os << "  indistinguishable groups (alpha=" << rs.alpha << "):\n";
    for (const auto& group : rs.groups) {
        os << "    {";
        for (std::size_t i = 0; i < group.size(); ++i) {
            os << (i ? ", " : " ") << rs.methods[static_cast<std::size_t>(group[i])];
        }
        os << " }\n";
    }
}

}  // namespace

std::string render_stats_summary(const StatsSummary& summary) {
    std::ostringstream os;
    render_rank_block(os, "F1 score ranking (lower rank is better):", summary.f1_ranks);
    os << "\n";
    render_rank_block(os, "Total time ranking (lower rank is better):", summary.time_ranks);

    os << "\nRelative data efficiency (threshold "
       << summary.options.efficiency_threshold * 100.0 << "% of best):\n";
    os << "  dataset";
    for (const auto& m : summary.methods) os << "  " << m;
    os << "\n";
    for (std::size_t d = 0; d < summary.datasets.size(); ++d) {
        os << "  " << summary.datasets[d];
        for (std::size_t m = 0; m < summary.methods.size(); ++m) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "  %.1f%%", summary.efficiency(d, m) * 100.0);
            os << buf;
        }
        os << "\n";
    }
    os << "  average";
    for (std::size_t m = 0; m < summary.methods.size(); ++m) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "  %.1f%%", summary.efficiency_avg[m] * 100.0);
        os << buf;
    }
    os << "\n";

    os << "\nMean Pareto rank over (F1 AUC maximized, time AUC minimized):\n";
    os << "  dataset";
    for (const auto& m : summary.methods) os << "  " << m;
    os << "\n";
    for (std::size_t d = 0; d < summary.datasets.size(); ++d) {
        os << "  " << summary.datasets[d];
        for (std::size_t m = 0; m < summary.methods.size(); ++m) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "  %.2f", summary.pareto_avg(d, m));
            os << buf;
        }
        os << "\n";
    }
    if (summary.excluded_blocks > 0) {
        os << "\nexcluded blocks (failed or skipped records): " << summary.excluded_blocks << "\n";
    }
    return os.str();
}

std::string render_learning_curves(const std::vector<BenchmarkRecord>& records) {
    std::map<std::tuple<std::string, std::string, double>, std::pair<double, int>> cells;
    for (const auto& r : records) {
        if (r.status != "ok") continue;
        auto& cell = cells[{r.dataset, r.method, r.fraction}];
        cell.first += r.f1;
        cell.second += 1;
    }
    std::ostringstream os;
    os << "dataset,method,fraction,mean_f1\n";
    for (const auto& [key, val] : cells) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.2f,%.6f\n", std::get<2>(key),
                      val.first / std::max(1, val.second));
        os << std::get<0>(key) << ',' << std::get<1>(key) << ',' << buf;
    }
    return os.str();
}

}  // namespace pfnbench
