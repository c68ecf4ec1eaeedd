#pragma once

// simulation harness: runs letter x scenario cells over replicated cohorts,
// scores every estimation method against the design target, and persists
// metrics, raw estimates, a manifest, and summary figures

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "mdag/datagen.hpp"
#include "mdag/mi.hpp"

namespace mdag {

inline constexpr const char* library_version = "0.1.0";

// ---------------------------------------------------------------------------
// cell configuration

struct ScenarioConfig {
    Letter letter = Letter::A;
    OutcomeScenario outcome = OutcomeScenario::I;
    // no missingness scenario means diagnostic mode: methods see complete data
    std::optional<MissScenario> miss = MissScenario::i;
    double prevalence = 0.5;
    std::size_t n = 0;  // zero picks the scenario default for the prevalence
    int nsim = 100;
    std::vector<std::string> methods = method_names();
    std::uint64_t seed = 1;
    int bootstrap = 240;
    int m = 5;
    int cycles = 5;
    double truth = 0.3;
};

inline std::size_t resolved_n(const ScenarioConfig& cfg) {
    return cfg.n > 0 ? cfg.n : default_n(cfg.outcome, cfg.prevalence);
}

inline std::string cell_key(const ScenarioConfig& cfg) {
    std::ostringstream os;
    os << letter_char(cfg.letter) << "-" << to_string(cfg.outcome) << "-"
       << (cfg.miss ? to_string(*cfg.miss) : std::string("none")) << "-p"
       << static_cast<int>(std::lround(cfg.prevalence * 100)) << "-n" << resolved_n(cfg);
    return os.str();
}

inline void validate_config(const ScenarioConfig& cfg) {
    if (cfg.nsim < 2) throw std::invalid_argument("cell config: nsim must be at least 2");
    if (cfg.methods.empty()) throw std::invalid_argument("cell config: no methods listed");
    if (cfg.prevalence != 0.10 && cfg.prevalence != 0.50)
        throw std::invalid_argument("cell config: prevalence must be 0.10 or 0.50");
    auto known = method_names();
    for (const auto& m : cfg.methods)
        if (m != "g-comp" && std::find(known.begin(), known.end(), m) == known.end())
            throw std::invalid_argument("cell config: unknown method " + m);
}

// ---------------------------------------------------------------------------
// metrics

struct MetricsRow {
    std::string method;
    int nsim_eff = 0;
    int failures = 0;
    bool degraded = false;
    double bias = std::numeric_limits<double>::quiet_NaN();
    double relbias_pct = std::numeric_limits<double>::quiet_NaN();
    double emp_se = std::numeric_limits<double>::quiet_NaN();
    double est_se = std::numeric_limits<double>::quiet_NaN();
    double coverage_pct = std::numeric_limits<double>::quiet_NaN();
    double mcse_bias = std::numeric_limits<double>::quiet_NaN();
    double mcse_emp_se = std::numeric_limits<double>::quiet_NaN();
    double mcse_coverage = std::numeric_limits<double>::quiet_NaN();
};

inline MetricsRow compute_metrics(const std::vector<double>& estimates,
                                  const std::vector<double>& ses,
                                  const std::vector<bool>& ci_hits, double truth = 0.3) {
    std::size_t n = estimates.size();
    if (n < 2) throw std::invalid_argument("metrics need at least 2 replications");
    if (ses.size() != n || ci_hits.size() != n)
        throw std::invalid_argument("metrics inputs must have equal length");
    MetricsRow row;
    row.nsim_eff = static_cast<int>(n);
    double mean = 0.0, mean_se = 0.0, hits = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mean += estimates[i];
        mean_se += ses[i];
        hits += ci_hits[i] ? 1.0 : 0.0;
    }
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double e : estimates) ss += (e - mean) * (e - mean);
    row.bias = mean - truth;
    row.relbias_pct = row.bias / truth * 100.0;
    row.emp_se = std::sqrt(ss / static_cast<double>(n - 1));
    row.est_se = mean_se / static_cast<double>(n);
    row.coverage_pct = 100.0 * hits / static_cast<double>(n);
    row.mcse_bias = row.emp_se / std::sqrt(static_cast<double>(n));
    row.mcse_emp_se = row.emp_se / std::sqrt(2.0 * static_cast<double>(n - 1));
    row.mcse_coverage =
        std::sqrt(row.coverage_pct * (100.0 - row.coverage_pct) / static_cast<double>(n));
    return row;
}

// ---------------------------------------------------------------------------
// one cell

struct RepRecord {
    int rep = 0;
    std::string method;
    bool ok = false;
    double point = std::numeric_limits<double>::quiet_NaN();
    double se = std::numeric_limits<double>::quiet_NaN();
    double lo = std::numeric_limits<double>::quiet_NaN();
    double hi = std::numeric_limits<double>::quiet_NaN();
    std::string message;
};

struct CellResult {
    ScenarioConfig cfg;
    std::string key;
    MissCalibration calibration;  // empty in diagnostic mode
    std::vector<MetricsRow> metrics;
    std::vector<RepRecord> records;
};

namespace detail {

// aggregate one method's records into a metrics row; too few successes leave
// the statistics unset but keep the failure accounting
inline MetricsRow summarize_method(const std::string& method,
                                   const std::vector<RepRecord>& records, int nsim,
                                   double truth) {
    std::vector<double> pts, ses;
    std::vector<bool> hits;
    int failures = 0;
    for (const auto& r : records) {
        if (r.method != method) continue;
        if (!r.ok) {
            ++failures;
            continue;
        }
        pts.push_back(r.point);
        ses.push_back(r.se);
        hits.push_back(r.lo <= truth && truth <= r.hi);
    }
    MetricsRow row;
    if (pts.size() >= 2) row = compute_metrics(pts, ses, hits, truth);
    row.method = method;
    row.nsim_eff = static_cast<int>(pts.size());
    row.failures = failures;
    row.degraded = failures * 20 > nsim;  // more than 5% of replications lost
    return row;
}

}  // namespace detail

// runs every replication of one grid cell; a pre-calibrated missingness spec
// can be supplied so grids calibrate once up front
inline CellResult run_cell(const ScenarioConfig& cfg,
                           const MissSpec* calibrated = nullptr) {
    validate_config(cfg);
    CellResult out;
    out.cfg = cfg;
    out.key = cell_key(cfg);

    DgpSpec dgp;
    dgp.scenario = cfg.outcome;
    dgp.prevalence = cfg.prevalence;
    dgp.n = resolved_n(cfg);

    MissSpec mspec;
    if (cfg.miss) {
        if (calibrated) {
            mspec = *calibrated;
        } else {
            mspec = build_miss_spec(cfg.letter, *cfg.miss);
            out.calibration = calibrate_miss_intercepts(mspec, dgp);
        }
    }

    ModelSpec outcome_spec = outcome_model_spec(cfg.outcome);
    EstimateOptions opt;
    opt.m = cfg.m;
    opt.cycles = cfg.cycles;
    opt.bootstrap = cfg.bootstrap;

    for (int rep = 0; rep < cfg.nsim; ++rep) {
        Rng gen(derive_seed(cfg.seed, static_cast<std::uint64_t>(rep), out.key + "/data"));
        Dataset complete = generate_complete(dgp, gen);
        Dataset masked;
        if (cfg.miss) masked = impose_missingness(complete, mspec, gen);

        for (const auto& method : cfg.methods) {
            RepRecord rec;
            rec.rep = rep;
            rec.method = method;
            Rng mrng(
                derive_seed(cfg.seed, static_cast<std::uint64_t>(rep), out.key + "/" + method));
            try {
                AceEstimate est;
                if (method == "g-comp" || !cfg.miss) {
                    // complete-data benchmark (and the only mode without masking)
                    est = cca_ace(complete, outcome_spec, opt.exposure, cfg.bootstrap, mrng);
                    est.method = method;
                } else {
                    est = estimate_ace(masked, method, outcome_spec, opt, mrng);
                }
                rec.ok = true;
                rec.point = est.point;
                rec.se = est.se;
                rec.lo = est.lo;
                rec.hi = est.hi;
            } catch (const std::exception& e) {
                rec.message = e.what();
            }
            out.records.push_back(std::move(rec));
        }
    }
    for (const auto& method : cfg.methods)
        out.metrics.push_back(
            detail::summarize_method(method, out.records, cfg.nsim, cfg.truth));
    return out;
}

// ---------------------------------------------------------------------------
// grid configuration from JSON: either an explicit "cells" array or factorial
// ranges under "letters"/"outcomes"/"miss"/"prevalences"

struct GridConfig {
    std::vector<ScenarioConfig> cells;
};

namespace detail {

inline void apply_common(ScenarioConfig& cfg, const nlohmann::json& j) {
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("nsim")) cfg.nsim = j.at("nsim").get<int>();
    if (j.contains("B")) cfg.bootstrap = j.at("B").get<int>();
    if (j.contains("m")) cfg.m = j.at("m").get<int>();
    if (j.contains("T")) cfg.cycles = j.at("T").get<int>();
    if (j.contains("truth")) cfg.truth = j.at("truth").get<double>();
    if (j.contains("methods")) cfg.methods = j.at("methods").get<std::vector<std::string>>();
    if (j.contains("n")) cfg.n = j.at("n").get<std::size_t>();
    if (j.contains("prevalence")) cfg.prevalence = j.at("prevalence").get<double>();
}

inline void apply_cell_axes(ScenarioConfig& cfg, const nlohmann::json& j) {
    if (j.contains("letter")) cfg.letter = parse_letter(j.at("letter").get<std::string>());
    if (j.contains("outcome"))
        cfg.outcome = parse_outcome_scenario(j.at("outcome").get<std::string>());
    if (j.contains("miss")) {
        std::string s = j.at("miss").get<std::string>();
        cfg.miss = s == "none" ? std::optional<MissScenario>()
                               : std::optional<MissScenario>(parse_miss_scenario(s));
    }
}

}  // namespace detail

inline GridConfig grid_from_json(const nlohmann::json& j) {
    ScenarioConfig base;
    detail::apply_common(base, j);
    GridConfig grid;
    if (j.contains("cells")) {
        for (const auto& cj : j.at("cells")) {
            ScenarioConfig cfg = base;
            detail::apply_cell_axes(cfg, cj);
            detail::apply_common(cfg, cj);
            grid.cells.push_back(cfg);
        }
    } else if (j.contains("letters")) {
        auto letters = j.at("letters").get<std::vector<std::string>>();
        auto outcomes = j.value("outcomes", std::vector<std::string>{"I"});
        auto misses = j.value("miss", std::vector<std::string>{"i"});
        auto prevs = j.value("prevalences", std::vector<double>{0.5});
        for (const auto& l : letters)
            for (const auto& o : outcomes)
                for (const auto& ms : misses)
                    for (double p : prevs) {
                        ScenarioConfig cfg = base;
                        cfg.letter = parse_letter(l);
                        cfg.outcome = parse_outcome_scenario(o);
                        cfg.miss = ms == "none"
                                       ? std::optional<MissScenario>()
                                       : std::optional<MissScenario>(parse_miss_scenario(ms));
                        cfg.prevalence = p;
                        grid.cells.push_back(cfg);
                    }
    } else {
        throw std::invalid_argument("grid config needs either \"cells\" or \"letters\"");
    }
    for (const auto& cfg : grid.cells) validate_config(cfg);
    return grid;
}

inline GridConfig grid_from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open grid config " + path);
    nlohmann::json j;
    in >> j;
    return grid_from_json(j);
}

// ---------------------------------------------------------------------------
// persistence: full-precision CSV so metrics are recomputable from disk

namespace detail {

inline std::string fmt(double v) {
    if (std::isnan(v)) return "NA";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string sanitize(std::string s) {
    for (char& c : s)
        if (c == ',' || c == '\n' || c == '\r') c = ';';
    return s;
}

inline const char* metrics_header() {
    return "cell,letter,outcome,miss,prevalence,n,nsim,method,nsim_eff,failures,degraded,"
           "bias,relbias_pct,emp_se,est_se,coverage_pct,mcse_bias,mcse_emp_se,mcse_coverage";
}

inline void write_metrics_rows(std::ostream& os, const CellResult& cell) {
    const ScenarioConfig& cfg = cell.cfg;
    for (const auto& row : cell.metrics) {
        os << cell.key << "," << letter_char(cfg.letter) << "," << to_string(cfg.outcome)
           << "," << (cfg.miss ? to_string(*cfg.miss) : std::string("none")) << ","
           << fmt(cfg.prevalence) << "," << resolved_n(cfg) << "," << cfg.nsim << ","
           << row.method << "," << row.nsim_eff << "," << row.failures << ","
           << (row.degraded ? 1 : 0) << "," << fmt(row.bias) << "," << fmt(row.relbias_pct)
           << "," << fmt(row.emp_se) << "," << fmt(row.est_se) << ","
           << fmt(row.coverage_pct) << "," << fmt(row.mcse_bias) << ","
           << fmt(row.mcse_emp_se) << "," << fmt(row.mcse_coverage) << "\n";
    }
}

inline const char* estimates_header() { return "cell,rep,method,ok,point,se,lo,hi,message"; }

inline void write_estimate_rows(std::ostream& os, const CellResult& cell) {
    for (const auto& r : cell.records)
        os << cell.key << "," << r.rep << "," << r.method << "," << (r.ok ? 1 : 0) << ","
           << fmt(r.point) << "," << fmt(r.se) << "," << fmt(r.lo) << "," << fmt(r.hi) << ","
           << sanitize(r.message) << "\n";
}

// ---------------------------------------------------------------------------
// figures: plain SVG dot charts rendered from the metrics rows only

inline const char* method_color(const std::string& method) {
    static const std::vector<std::pair<std::string, std::string>> palette = {
        {"g-comp", "#555555"}, {"CCA", "#1b9e77"},    {"MI-Sim", "#d95f02"},
        {"MI-EO", "#7570b3"},  {"MI-EI", "#e7298a"},  {"MI-EC", "#66a61e"},
        {"MI-Com", "#e6ab02"}, {"MI-SMC", "#a6761d"},
    };
    for (const auto& [name, color] : palette)
        if (name == method) return color.c_str();
    return "#000000";
}

inline void write_dot_chart(const std::string& path, const std::string& title,
                            const std::vector<CellResult>& cells,
                            double (*value)(const MetricsRow&), double ref_line,
                            double lo_axis, double hi_axis) {
    const double left = 70, top = 40, plot_w = 120, plot_h = 360, gap = 20;
    double width = left + cells.size() * (plot_w + gap) + 160;
    double height = top + plot_h + 70;
    auto ypix = [&](double v) {
        double clamped = std::min(hi_axis, std::max(lo_axis, v));
        return top + plot_h * (hi_axis - clamped) / (hi_axis - lo_axis);
    };
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write figure " + path);
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
       << height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<text x=\"" << left << "\" y=\"20\" font-size=\"15\">" << title << "</text>\n";
    // y axis with reference line
    os << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\""
       << top + plot_h << "\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 4; ++t) {
        double v = lo_axis + (hi_axis - lo_axis) * t / 4.0;
        os << "<text x=\"" << left - 8 << "\" y=\"" << ypix(v) + 4
           << "\" text-anchor=\"end\">" << fmt(std::round(v * 100) / 100) << "</text>\n";
        os << "<line x1=\"" << left - 4 << "\" y1=\"" << ypix(v) << "\" x2=\"" << left
           << "\" y2=\"" << ypix(v) << "\" stroke=\"black\"/>\n";
    }
    os << "<line x1=\"" << left << "\" y1=\"" << ypix(ref_line) << "\" x2=\""
       << left + cells.size() * (plot_w + gap) << "\" y2=\"" << ypix(ref_line)
       << "\" stroke=\"#999999\" stroke-dasharray=\"4 3\"/>\n";
    // one column of dots per cell
    for (std::size_t c = 0; c < cells.size(); ++c) {
        double x0 = left + c * (plot_w + gap);
        os << "<text x=\"" << x0 + plot_w / 2 << "\" y=\"" << top + plot_h + 20
           << "\" text-anchor=\"middle\">" << cells[c].key << "</text>\n";
        const auto& rows = cells[c].metrics;
        for (std::size_t k = 0; k < rows.size(); ++k) {
            double v = value(rows[k]);
            if (std::isnan(v)) continue;
            double x = x0 + plot_w * (static_cast<double>(k) + 1.0) /
                                (static_cast<double>(rows.size()) + 1.0);
            os << "<circle cx=\"" << x << "\" cy=\"" << ypix(v) << "\" r=\"4\" fill=\""
               << method_color(rows[k].method) << "\"/>\n";
        }
    }
    // legend from the first cell's method order
    if (!cells.empty()) {
        double lx = left + cells.size() * (plot_w + gap) + 20;
        double ly = top;
        for (const auto& row : cells.front().metrics) {
            os << "<circle cx=\"" << lx << "\" cy=\"" << ly << "\" r=\"4\" fill=\""
               << method_color(row.method) << "\"/>\n";
            os << "<text x=\"" << lx + 10 << "\" y=\"" << ly + 4 << "\">" << row.method
               << "</text>\n";
            ly += 18;
        }
    }
    os << "</svg>\n";
}

}  // namespace detail

// ---------------------------------------------------------------------------
// grid runner with per-cell resume and optional cell-level parallelism

struct GridResult {
    std::vector<CellResult> cells;
    std::vector<std::string> resumed;  // cell keys loaded from a previous run
};

namespace detail {

inline std::filesystem::path cell_metrics_path(const std::filesystem::path& dir,
                                               const std::string& key) {
    return dir / "cells" / (key + ".metrics.csv");
}
inline std::filesystem::path cell_estimates_path(const std::filesystem::path& dir,
                                                 const std::string& key) {
    return dir / "cells" / (key + ".estimates.csv");
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

inline double parse_field(const std::string& s) {
    return s == "NA" ? std::numeric_limits<double>::quiet_NaN() : std::stod(s);
}

// reload a completed cell from its persisted per-cell files
inline CellResult load_cell(const ScenarioConfig& cfg, const std::filesystem::path& dir) {
    CellResult cell;
    cell.cfg = cfg;
    cell.key = cell_key(cfg);
    std::ifstream ms(cell_metrics_path(dir, cell.key));
    std::string line;
    std::getline(ms, line);  // header
    while (std::getline(ms, line)) {
        if (line.empty()) continue;
        auto f = split_csv_line(line);
        MetricsRow row;
        row.method = f[7];
        row.nsim_eff = std::stoi(f[8]);
        row.failures = std::stoi(f[9]);
        row.degraded = f[10] == "1";
        row.bias = parse_field(f[11]);
        row.relbias_pct = parse_field(f[12]);
        row.emp_se = parse_field(f[13]);
        row.est_se = parse_field(f[14]);
        row.coverage_pct = parse_field(f[15]);
        row.mcse_bias = parse_field(f[16]);
        row.mcse_emp_se = parse_field(f[17]);
        row.mcse_coverage = parse_field(f[18]);
        cell.metrics.push_back(row);
    }
    std::ifstream es(cell_estimates_path(dir, cell.key));
    std::getline(es, line);
    while (std::getline(es, line)) {
        if (line.empty()) continue;
        auto f = split_csv_line(line);
        RepRecord r;
        r.rep = std::stoi(f[1]);
        r.method = f[2];
        r.ok = f[3] == "1";
        r.point = parse_field(f[4]);
        r.se = parse_field(f[5]);
        r.lo = parse_field(f[6]);
        r.hi = parse_field(f[7]);
        r.message = f.size() > 8 ? f[8] : "";
        cell.records.push_back(r);
    }
    return cell;
}

inline void save_cell(const CellResult& cell, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir / "cells");
    {
        std::ofstream os(cell_metrics_path(dir, cell.key));
        os << metrics_header() << "\n";
        write_metrics_rows(os, cell);
    }
    {
        std::ofstream os(cell_estimates_path(dir, cell.key));
        os << estimates_header() << "\n";
        write_estimate_rows(os, cell);
    }
}

}  // namespace detail

inline GridResult run_grid(const GridConfig& grid, const std::string& out_dir, int jobs = 1) {
    namespace fs = std::filesystem;
    fs::path dir(out_dir);
    fs::create_directories(dir);
    fs::create_directories(dir / "figs");

    GridResult result;
    result.cells.resize(grid.cells.size());
    std::vector<bool> resumed(grid.cells.size(), false);
    std::vector<int> todo;

    // serial warm-up: resume finished cells and calibrate the rest once, so
    // workers only read the calibrated specs
    std::vector<MissSpec> specs(grid.cells.size());
    std::vector<MissCalibration> calibrations(grid.cells.size());
    for (std::size_t i = 0; i < grid.cells.size(); ++i) {
        const ScenarioConfig& cfg = grid.cells[i];
        std::string key = cell_key(cfg);
        if (fs::exists(detail::cell_metrics_path(dir, key)) &&
            fs::exists(detail::cell_estimates_path(dir, key))) {
            result.cells[i] = detail::load_cell(cfg, dir);
            resumed[i] = true;
            result.resumed.push_back(key);
            continue;
        }
        if (cfg.miss) {
            DgpSpec dgp;
            dgp.scenario = cfg.outcome;
            dgp.prevalence = cfg.prevalence;
            dgp.n = resolved_n(cfg);
            specs[i] = build_miss_spec(cfg.letter, *cfg.miss);
            calibrations[i] = calibrate_miss_intercepts(specs[i], dgp);
        }
        todo.push_back(static_cast<int>(i));
    }

    std::mutex mu;
    std::size_t next = 0;
    auto worker = [&]() {
        for (;;) {
            std::size_t i;
            {
                std::lock_guard<std::mutex> lock(mu);
                if (next >= todo.size()) return;
                i = static_cast<std::size_t>(todo[next++]);
            }
            const ScenarioConfig& cfg = grid.cells[i];
            CellResult cell = run_cell(cfg, cfg.miss ? &specs[i] : nullptr);
            cell.calibration = calibrations[i];
            std::lock_guard<std::mutex> lock(mu);
            result.cells[i] = std::move(cell);
        }
    };
    int workers = std::max(1, jobs);
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    for (std::size_t i = 0; i < grid.cells.size(); ++i)
        if (!resumed[i]) detail::save_cell(result.cells[i], dir);

    // assemble the combined outputs in configuration order
    {
        std::ofstream os(dir / "metrics.csv");
        os << detail::metrics_header() << "\n";
        for (const auto& cell : result.cells) detail::write_metrics_rows(os, cell);
    }
    {
        // raw per-replication estimates, rotated above a million rows per file
        const std::size_t rotate_at = 1000000;
        std::size_t rows = 0;
        int part = 1;
        auto open_part = [&](int p) {
            fs::path path =
                p == 1 ? dir / "estimates.csv"
                       : dir / ("estimates_" + std::to_string(p) + ".csv");
            std::ofstream os(path);
            os << detail::estimates_header() << "\n";
            return os;
        };
        std::ofstream os = open_part(part);
        for (const auto& cell : result.cells) {
            if (rows + cell.records.size() > rotate_at && rows > 0) {
                os = open_part(++part);
                rows = 0;
            }
            detail::write_estimate_rows(os, cell);
            rows += cell.records.size();
        }
    }
    {
        nlohmann::json manifest;
        manifest["version"] = library_version;
        nlohmann::json cells = nlohmann::json::array();
        for (std::size_t i = 0; i < grid.cells.size(); ++i) {
            const ScenarioConfig& cfg = grid.cells[i];
            nlohmann::json cj;
            cj["key"] = cell_key(cfg);
            cj["letter"] = std::string(1, letter_char(cfg.letter));
            cj["outcome"] = to_string(cfg.outcome);
            cj["miss"] = cfg.miss ? to_string(*cfg.miss) : "none";
            cj["prevalence"] = cfg.prevalence;
            cj["n"] = resolved_n(cfg);
            cj["nsim"] = cfg.nsim;
            cj["seed"] = cfg.seed;
            cj["B"] = cfg.bootstrap;
            cj["m"] = cfg.m;
            cj["T"] = cfg.cycles;
            cj["truth"] = cfg.truth;
            cj["methods"] = cfg.methods;
            cj["resumed"] = static_cast<bool>(resumed[i]);
            if (cfg.miss && !resumed[i]) {
                nlohmann::json cal;
                cal["intercepts"] = calibrations[i].intercepts;
                cal["achieved"] = calibrations[i].achieved;
                cal["complete_case"] = calibrations[i].complete_case;
                cj["calibration"] = cal;
            }
            cells.push_back(cj);
        }
        manifest["cells"] = cells;
        std::ofstream os(dir / "manifest.json");
        os << manifest.dump(2) << "\n";
    }
    detail::write_dot_chart(
        (dir / "figs" / "relbias.svg").string(), "relative bias (%) by cell and method",
        result.cells, [](const MetricsRow& r) { return r.relbias_pct; }, 0.0, -100.0, 100.0);
    detail::write_dot_chart(
        (dir / "figs" / "coverage.svg").string(), "95% CI coverage (%) by cell and method",
        result.cells, [](const MetricsRow& r) { return r.coverage_pct; }, 95.0, 0.0, 100.0);
    return result;
}

}  // namespace mdag
