#pragma once

// Experiment orchestration: config files, repeated BO runs per case,
// summary tables, convergence traces and field exports.
//
// Output layout:
//   out_dir/summary.csv, out_dir/summary.txt
//   out_dir/case_<c>/snapshot.csv
//   out_dir/case_<c>/run_<k>/trace.csv

#include <bopinn/bayes_opt.hpp>
#include <bopinn/csv.hpp>
#include <bopinn/error.hpp>
#include <bopinn/pinn_solver.hpp>
#include <bopinn/wave_oracle.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace bopinn {

enum class Scale { desk, paper };
enum class ForwardMode { pinn, analytic };

inline Scale parse_scale(const std::string& s) {
    if (s == "desk") return Scale::desk;
    if (s == "paper") return Scale::paper;
    throw ConfigError("scale must be 'desk' or 'paper', got '" + s + "'");
}

inline ForwardMode parse_forward_mode(const std::string& s) {
    if (s == "pinn") return ForwardMode::pinn;
    if (s == "analytic") return ForwardMode::analytic;
    throw ConfigError("forward_mode must be 'pinn' or 'analytic', got '" + s + "'");
}

struct SnapshotSpec {
    double t_obs = 0.25;
    std::size_t n_sensors = 256;
    double snr_db = 36.34;
};

struct PinnSpec {
    std::vector<int> arch{2, 32, 32, 32, 1};
    std::size_t n_f = 2000;
    std::size_t n_0 = 200;
    std::size_t n_b = 200;
    LbfgsOptions lbfgs{};
    double dropout_rate = 0.0;
    bool warm_start = false;
};

struct ExperimentConfig {
    std::vector<double> cases{0.2, 0.55, 0.85};
    SnapshotSpec snapshot{};
    BoConfig bo{};
    PinnSpec pinn{};
    WaveDomain domain{};
    Scale scale = Scale::desk;
    int runs = 10;
    std::uint64_t seed_base = 1;
    ForwardMode forward_mode = ForwardMode::pinn;
    std::filesystem::path out_dir = "bopinn_out";

    void validate() const {
        bo.validate();
        pinn.lbfgs.validate();
        validate_layer_sizes(pinn.arch);
        if (runs < 1) throw ConfigError("runs must be >= 1");
        if (snapshot.n_sensors < 2) throw ConfigError("snapshot.n_sensors must be >= 2");
        if (!(snapshot.t_obs >= 0.0 && snapshot.t_obs <= domain.horizon))
            throw ConfigError("snapshot.t_obs outside [0, T]");
        if (pinn.n_f == 0 || pinn.n_0 == 0 || pinn.n_b == 0) throw ConfigError("collocation counts must be > 0");
        if (!(pinn.dropout_rate >= 0.0 && pinn.dropout_rate < 1.0)) throw ConfigError("dropout_rate outside [0, 1)");
        if (bo.c_lo < WaveSpeed::kMin || bo.c_hi > WaveSpeed::kMax)
            throw ConfigError("bo bounds must lie within [0.1, 1]");
        for (double c : cases)
            if (!(c >= bo.c_lo && c <= bo.c_hi)) throw ConfigError("case value outside bo bounds");
    }
};

/// Scale presets. `desk` runs in minutes; `paper` is the full-size profile (hours per run).
inline ExperimentConfig preset(Scale s) {
    ExperimentConfig cfg;
    cfg.scale = s;
    if (s == Scale::paper) {
        cfg.domain = WaveDomain(10.0, 1.0);
        cfg.pinn.arch = {2, 64, 128, 128, 128, 128, 64, 1};
        cfg.pinn.n_f = 25000;
        cfg.pinn.n_0 = 500;
        cfg.pinn.n_b = 500;
        cfg.pinn.lbfgs.max_iters = 5000;
        cfg.pinn.dropout_rate = 0.1;
    }
    return cfg;
}

// ---------------------------------------------------------------------------
// Config files: `key = value` lines, `#` comments, dotted section keys.

using KeyValues = std::map<std::string, std::string>;

inline const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = {
        "cases", "scale", "runs", "seed_base", "forward_mode", "out_dir",
        "domain.length", "domain.horizon",
        "snapshot.t_obs", "snapshot.n_sensors", "snapshot.snr_db",
        "bo.c_lo", "bo.c_hi", "bo.n_init", "bo.n_iters", "bo.kappa", "bo.acq_grid", "bo.hyper",
        "pinn.arch", "pinn.n_f", "pinn.n_0", "pinn.n_b", "pinn.max_iters", "pinn.memory", "pinn.grad_tol",
        "pinn.dropout_rate", "pinn.warm_start",
    };
    return keys;
}

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline double to_double(const std::string& key, const std::string& v) {
    try {
        return csv::parse_double(v);
    } catch (const Error&) {
        throw ConfigError("'" + key + "' expects a number, got '" + v + "'");
    }
}

inline long long to_int(const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    long long out = 0;
    try {
        out = std::stoll(v, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != v.size() || v.empty()) throw ConfigError("'" + key + "' expects an integer, got '" + v + "'");
    return out;
}

inline std::vector<std::string> list_items(const std::string& v) {
    std::vector<std::string> out;
    for (auto& item : csv::split(v, ',')) {
        auto t = trim(item);
        if (!t.empty()) out.push_back(t);
    }
    return out;
}

inline bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "on") return true;
    if (v == "false" || v == "0" || v == "off") return false;
    throw ConfigError("'" + key + "' expects true/false, got '" + v + "'");
}

}  // namespace detail

inline KeyValues parse_config(std::istream& is) {
    KeyValues kv;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        const auto key = detail::trim(line.substr(0, eq));
        const auto& known = config_keys();
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw ConfigError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        kv[key] = detail::trim(line.substr(eq + 1));
    }
    return kv;
}

inline KeyValues read_config_file(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file '" + path.string() + "'");
    return parse_config(is);
}

/// Applies the scale preset named by `scale` (default desk), then every other key.
inline ExperimentConfig build_config(const KeyValues& kv) {
    using namespace detail;
    const auto scale_it = kv.find("scale");
    ExperimentConfig cfg = preset(scale_it == kv.end() ? Scale::desk : parse_scale(scale_it->second));
    double length = cfg.domain.length, horizon = cfg.domain.horizon;
    for (const auto& [k, v] : kv) {
        if (k == "scale") continue;
        if (k == "cases") {
            cfg.cases.clear();
            for (const auto& item : list_items(v)) cfg.cases.push_back(to_double(k, item));
        } else if (k == "runs") cfg.runs = static_cast<int>(to_int(k, v));
        else if (k == "seed_base") cfg.seed_base = static_cast<std::uint64_t>(to_int(k, v));
        else if (k == "forward_mode") cfg.forward_mode = parse_forward_mode(v);
        else if (k == "out_dir") cfg.out_dir = v;
        else if (k == "domain.length") length = to_double(k, v);
        else if (k == "domain.horizon") horizon = to_double(k, v);
        else if (k == "snapshot.t_obs") cfg.snapshot.t_obs = to_double(k, v);
        else if (k == "snapshot.n_sensors") cfg.snapshot.n_sensors = static_cast<std::size_t>(to_int(k, v));
        else if (k == "snapshot.snr_db") cfg.snapshot.snr_db = to_double(k, v);
        else if (k == "bo.c_lo") cfg.bo.c_lo = to_double(k, v);
        else if (k == "bo.c_hi") cfg.bo.c_hi = to_double(k, v);
        else if (k == "bo.n_init") cfg.bo.n_init = static_cast<int>(to_int(k, v));
        else if (k == "bo.n_iters") cfg.bo.n_iters = static_cast<int>(to_int(k, v));
        else if (k == "bo.kappa") cfg.bo.kappa = to_double(k, v);
        else if (k == "bo.acq_grid") cfg.bo.acq_grid = static_cast<int>(to_int(k, v));
        else if (k == "bo.hyper") {
            if (v == "ml2") cfg.bo.gp.search = HyperSearch::ml2;
            else if (v == "fixed") cfg.bo.gp.search = HyperSearch::fixed;
            else throw ConfigError("bo.hyper must be 'ml2' or 'fixed'");
        } else if (k == "pinn.arch") {
            cfg.pinn.arch.clear();
            for (const auto& item : list_items(v)) cfg.pinn.arch.push_back(static_cast<int>(to_int(k, item)));
        } else if (k == "pinn.n_f") cfg.pinn.n_f = static_cast<std::size_t>(to_int(k, v));
        else if (k == "pinn.n_0") cfg.pinn.n_0 = static_cast<std::size_t>(to_int(k, v));
        else if (k == "pinn.n_b") cfg.pinn.n_b = static_cast<std::size_t>(to_int(k, v));
        else if (k == "pinn.max_iters") cfg.pinn.lbfgs.max_iters = static_cast<int>(to_int(k, v));
        else if (k == "pinn.memory") cfg.pinn.lbfgs.memory = static_cast<int>(to_int(k, v));
        else if (k == "pinn.grad_tol") cfg.pinn.lbfgs.grad_tol = to_double(k, v);
        else if (k == "pinn.dropout_rate") cfg.pinn.dropout_rate = to_double(k, v);
        else if (k == "pinn.warm_start") cfg.pinn.warm_start = to_bool(k, v);
        else throw ConfigError("unknown key '" + k + "'");
    }
    try {
        cfg.domain = WaveDomain(length, horizon);
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }
    cfg.validate();
    return cfg;
}

// ---------------------------------------------------------------------------
// Seeds.

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Snapshot noise seed: depends on the case value, not its position in the list.
inline std::uint64_t snapshot_seed(std::uint64_t seed_base, double c_true) {
    return splitmix64(seed_base ^ splitmix64(static_cast<std::uint64_t>(std::llround(c_true * 1e6))));
}

inline std::uint64_t run_seed(std::uint64_t seed_base, int run) { return seed_base + static_cast<std::uint64_t>(run); }

inline std::string case_label(double c_true) {
    std::ostringstream os;
    os << "case_" << std::setprecision(6) << c_true;
    return os.str();
}

// ---------------------------------------------------------------------------
// Running cases.

struct RunRecord {
    int run = 0;
    std::uint64_t seed = 0;
    bool ok = true;
    std::string error;
    double g_star = 0.0;
    double c_star = 0.0;
    double wall_time = 0.0;  // seconds
    int evaluations = 0;
    int queries = 0;
    /// First query index (1-based) whose incumbent lies within 0.005 of c_true.
    std::optional<int> hit_query;
};

struct RunSummary {
    double c_true = 0.0;
    double best_g = 0.0;
    double best_c = 0.0;
    double mean_g = 0.0;
    double std_g = 0.0;
    double mean_c = 0.0;
    double std_c = 0.0;
    std::vector<RunRecord> per_run;
    std::string warning;

    /// 100 (1 - |c - c_true| / c_true)
    double accuracy(double c) const { return 100.0 * (1.0 - std::abs(c - c_true) / c_true); }
};

inline double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

/// Sample standard deviation (n - 1); zero for fewer than two values.
inline double std_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

inline void write_trace(const std::filesystem::path& path, const BoTrace& tr, double c_true, const RunRecord& rec) {
    csv::Table t;
    t.meta = {{"c_true", csv::format_double(c_true)},
              {"run", std::to_string(rec.run)},
              {"seed", std::to_string(rec.seed)},
              {"evaluations", std::to_string(tr.evaluations)}};
    t.header = {"iteration", "c", "g", "incumbent_c", "incumbent_g"};
    for (std::size_t i = 0; i < tr.size(); ++i)
        t.rows.push_back({static_cast<double>(i + 1), tr.queried_c[i], tr.queried_g[i], tr.incumbent_c[i],
                          tr.incumbent_g[i]});
    csv::write(path, t);
}

inline PinnForward pinn_forward(const ExperimentConfig& cfg, std::uint64_t seed) {
    PinnForward p;
    p.train.arch = cfg.pinn.arch;
    p.train.lbfgs = cfg.pinn.lbfgs;
    p.train.dropout_rate = cfg.pinn.dropout_rate;
    p.n_f = cfg.pinn.n_f;
    p.n_0 = cfg.pinn.n_0;
    p.n_b = cfg.pinn.n_b;
    p.collocation_seed = splitmix64(seed ^ 0xc011c0ULL);
    p.init_seed = splitmix64(seed ^ 0x1417ULL);
    return p;
}

inline ForwardModel make_forward(const ExperimentConfig& cfg, std::uint64_t seed) {
    if (cfg.forward_mode == ForwardMode::analytic) return AnalyticForward{};
    return pinn_forward(cfg, seed);
}

/// g(c) for one BO run. With warm starting, each PINN starts from the previous query's parameters.
inline Target make_target(const ExperimentConfig& cfg, const Snapshot& obs, std::uint64_t seed) {
    auto fwd = make_forward(cfg, seed);
    if (!cfg.pinn.warm_start || std::holds_alternative<AnalyticForward>(fwd))
        return [fwd, &obs](double c) { return target_function(WaveSpeed(c), obs, fwd); };
    auto state = std::make_shared<PinnForward>(std::get<PinnForward>(fwd));
    return [state, &obs](double c) {
        const auto colloc = sample_collocation(obs.domain, state->n_f, state->n_0, state->n_b, state->collocation_seed);
        const auto field = train_pinn(WaveSpeed(c), colloc, state->train, state->init_seed);
        state->train.warm_start = field.params;
        const auto u = eval_field(field, obs.xs, obs.t_obs);
        double acc = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) acc += (u[i] - obs.us[i]) * (u[i] - obs.us[i]);
        return -acc / static_cast<double>(u.size());
    };
}

inline Snapshot case_snapshot(const ExperimentConfig& cfg, double c_true) {
    return make_snapshot(WaveSpeed(c_true), cfg.snapshot.t_obs, cfg.snapshot.n_sensors, cfg.snapshot.snr_db,
                         snapshot_seed(cfg.seed_base, c_true), cfg.domain);
}

inline RunSummary run_case(const ExperimentConfig& cfg, double c_true) {
    cfg.validate();
    const auto case_dir = cfg.out_dir / case_label(c_true);
    const Snapshot obs = case_snapshot(cfg, c_true);
    write_snapshot(case_dir / "snapshot.csv", obs);

    RunSummary sum;
    sum.c_true = c_true;
    for (int r = 0; r < cfg.runs; ++r) {
        RunRecord rec;
        rec.run = r;
        rec.seed = run_seed(cfg.seed_base, r);
        const auto t0 = std::chrono::steady_clock::now();
        try {
            BoConfig bo = cfg.bo;
            bo.seed = rec.seed;
            const auto tr = run_bo(make_target(cfg, obs, rec.seed), bo);
            rec.g_star = tr.best_g();
            rec.c_star = tr.best_c();
            rec.evaluations = tr.evaluations;
            rec.queries = static_cast<int>(tr.size());
            for (std::size_t i = 0; i < tr.size(); ++i)
                if (std::abs(tr.incumbent_c[i] - c_true) < 0.005) {
                    rec.hit_query = static_cast<int>(i + 1);
                    break;
                }
            if (!std::isfinite(rec.g_star)) {
                rec.ok = false;
                rec.error = "every target evaluation failed";
            }
            write_trace(case_dir / ("run_" + std::to_string(r)) / "trace.csv", tr, c_true, rec);
        } catch (const std::exception& e) {
            rec.ok = false;
            rec.error = e.what();
        }
        rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        sum.per_run.push_back(std::move(rec));
    }

    std::vector<double> gs, cs;
    int best = -1;
    for (std::size_t i = 0; i < sum.per_run.size(); ++i) {
        const auto& r = sum.per_run[i];
        if (!r.ok) continue;
        gs.push_back(r.g_star);
        cs.push_back(r.c_star);
        if (best < 0 || r.g_star > sum.per_run[static_cast<std::size_t>(best)].g_star) best = static_cast<int>(i);
    }
    if (best < 0) {
        sum.warning = "no run completed";
        sum.best_g = sum.mean_g = sum.best_c = sum.mean_c = std::numeric_limits<double>::quiet_NaN();
        return sum;
    }
    if (gs.size() < sum.per_run.size())
        sum.warning = std::to_string(sum.per_run.size() - gs.size()) + " run(s) failed";
    sum.best_g = sum.per_run[static_cast<std::size_t>(best)].g_star;
    sum.best_c = sum.per_run[static_cast<std::size_t>(best)].c_star;
    sum.mean_g = mean_of(gs);
    sum.std_g = std_of(gs);
    sum.mean_c = mean_of(cs);
    sum.std_c = std_of(cs);
    return sum;
}

// ---------------------------------------------------------------------------
// Reports.

inline const std::vector<std::string>& summary_columns() {
    static const std::vector<std::string> cols = {"case", "c_true", "best_g", "best_c",
                                                  "mean_g", "std_g", "mean_c", "std_c"};
    return cols;
}

inline csv::Table summary_table(const std::vector<RunSummary>& sums) {
    csv::Table t;
    t.header = summary_columns();
    for (std::size_t i = 0; i < sums.size(); ++i) {
        const auto& s = sums[i];
        t.rows.push_back({static_cast<double>(i + 1), s.c_true, s.best_g, s.best_c, s.mean_g, s.std_g, s.mean_c,
                          s.std_c});
    }
    return t;
}

/// Fixed-width text rendering of the summary table.
inline std::string render_table(const std::vector<RunSummary>& sums) {
    std::ostringstream os;
    const auto& cols = summary_columns();
    os << std::left << std::setw(6) << cols[0];
    for (std::size_t k = 1; k < cols.size(); ++k) os << std::right << std::setw(14) << cols[k];
    os << '\n';
    for (std::size_t i = 0; i < sums.size(); ++i) {
        const auto& s = sums[i];
        os << std::left << std::setw(6) << (i + 1) << std::right << std::fixed << std::setprecision(4)
           << std::setw(14) << s.c_true << std::scientific << std::setprecision(4) << std::setw(14) << s.best_g
           << std::fixed << std::setw(14) << s.best_c << std::scientific << std::setw(14) << s.mean_g
           << std::setw(14) << s.std_g << std::fixed << std::setw(14) << s.mean_c << std::setw(14) << s.std_c
           << '\n';
        os.unsetf(std::ios::floatfield);
    }
    return os.str();
}

struct TimingReport {
    struct Row {
        double c_true = 0.0;
        double mean_seconds_per_query = 0.0;
        /// Mean 1-based query index at which the incumbent came within 0.005 of c_true.
        std::optional<double> mean_queries_to_tolerance;
        int runs_reaching_tolerance = 0;
    };
    std::vector<Row> rows;
    int bo_evaluations = 0;  // n_init + N
    // Inclusive uniform grids over [0.1, 1]. The commonly quoted counts omit one endpoint.
    int grid_points_2_decimals = 91;
    int grid_points_3_decimals = 901;
    int quoted_grid_2_decimals = 90;
    int quoted_grid_3_decimals = 900;

    bool empty() const noexcept { return rows.empty(); }
};

/// Points in an inclusive uniform grid over [lo, hi] at step 10^-decimals.
inline int grid_search_points(double lo, double hi, int decimals) {
    return static_cast<int>(std::llround((hi - lo) * std::pow(10.0, decimals))) + 1;
}

inline TimingReport timing_report(const std::vector<RunSummary>& sums, const BoConfig& bo = {}) {
    TimingReport rep;
    if (sums.empty()) return rep;
    rep.bo_evaluations = bo.n_init + bo.n_iters;
    rep.grid_points_2_decimals = grid_search_points(bo.c_lo, bo.c_hi, 2);
    rep.grid_points_3_decimals = grid_search_points(bo.c_lo, bo.c_hi, 3);
    for (const auto& s : sums) {
        TimingReport::Row row;
        row.c_true = s.c_true;
        double secs = 0.0;
        int queries = 0;
        std::vector<double> hits;
        for (const auto& r : s.per_run) {
            if (!r.ok) continue;
            secs += r.wall_time;
            queries += r.queries;
            if (r.hit_query) hits.push_back(*r.hit_query);
        }
        row.mean_seconds_per_query = queries ? secs / queries : 0.0;
        row.runs_reaching_tolerance = static_cast<int>(hits.size());
        if (!hits.empty()) row.mean_queries_to_tolerance = mean_of(hits);
        rep.rows.push_back(row);
    }
    return rep;
}

inline std::string render_timing(const TimingReport& rep) {
    if (rep.empty()) return {};
    std::ostringstream os;
    os << "timing\n";
    for (const auto& r : rep.rows) {
        os << "  c_true=" << r.c_true << "  mean wall time per query: " << std::setprecision(4)
           << r.mean_seconds_per_query << " s  queries to |c*-c_true|<0.005: ";
        if (r.mean_queries_to_tolerance)
            os << *r.mean_queries_to_tolerance << " (" << r.runs_reaching_tolerance << " runs)";
        else
            os << "not reached";
        os << '\n';
    }
    os << "  BO evaluations per run: " << rep.bo_evaluations << '\n'
       << "  grid search, 2 decimals: " << rep.grid_points_2_decimals << " points (quoted: "
       << rep.quoted_grid_2_decimals << ")\n"
       << "  grid search, 3 decimals: " << rep.grid_points_3_decimals << " points (quoted: "
       << rep.quoted_grid_3_decimals << ")\n";
    return os.str();
}

struct RunAllResult {
    std::vector<RunSummary> summaries;
    std::string table;
    TimingReport timing;
};

inline RunAllResult run_all(const ExperimentConfig& cfg) {
    cfg.validate();
    RunAllResult res;
    for (double c : cfg.cases) res.summaries.push_back(run_case(cfg, c));
    res.table = render_table(res.summaries);
    res.timing = timing_report(res.summaries, cfg.bo);

    csv::write(cfg.out_dir / "summary.csv", summary_table(res.summaries));

    ensure_directory(cfg.out_dir);
    std::ofstream txt(cfg.out_dir / "summary.txt");
    if (!txt) throw IoError("cannot write summary.txt in '" + cfg.out_dir.string() + "'");
    txt << res.table;
    if (!res.summaries.empty()) txt << "\naccuracy = 100 (1 - |c* - c_true| / c_true)\n";
    for (const auto& s : res.summaries) {
        txt << "  c_true=" << s.c_true << "  best: " << std::fixed << std::setprecision(2) << s.accuracy(s.best_c)
            << "%  mean: " << s.accuracy(s.mean_c) << "%";
        if (!s.warning.empty()) txt << "  warning: " << s.warning;
        txt << '\n';
        txt.unsetf(std::ios::floatfield);
    }
    if (!res.timing.empty()) txt << '\n' << render_timing(res.timing);
    return res;
}

// ---------------------------------------------------------------------------
// Field export.

/// Writes `path` (x,t,u on an n_x x n_t grid) plus three time-slice files
/// `<stem>_t<frac>.csv` at t = {0.25, 0.5, 0.75} T with the analytic reference.
inline std::vector<std::filesystem::path> export_field(const TrainedField& field, const WaveDomain& domain,
                                                       std::size_t n_x, std::size_t n_t,
                                                       const std::filesystem::path& path) {
    if (n_x < 2 || n_t < 2) throw InvalidInput("export grid needs at least 2 x 2 points");
    std::vector<std::filesystem::path> written;
    const auto xs = sensor_grid(n_x, domain);
    std::vector<double> ts(n_t);
    for (std::size_t j = 0; j < n_t; ++j)
        ts[j] = j + 1 == n_t ? domain.horizon : domain.horizon * static_cast<double>(j) / static_cast<double>(n_t - 1);

    csv::Table grid;
    grid.meta = {{"c", csv::format_double(field.c)}, {"n_x", std::to_string(n_x)}, {"n_t", std::to_string(n_t)}};
    grid.header = {"x", "t", "u"};
    for (double t : ts) {
        const auto u = eval_field(field, xs, t);
        for (std::size_t i = 0; i < n_x; ++i) grid.rows.push_back({xs[i], t, u[i]});
    }
    csv::write(path, grid);
    written.push_back(path);

    const WaveSpeed c(field.c);
    for (double frac : {0.25, 0.5, 0.75}) {
        const double t = frac * domain.horizon;
        csv::Table slice;
        slice.meta = {{"c", csv::format_double(field.c)}, {"t", csv::format_double(t)}};
        slice.header = {"x", "u", "u_exact"};
        const auto u = eval_field(field, xs, t);
        for (std::size_t i = 0; i < n_x; ++i) slice.rows.push_back({xs[i], u[i], analytic_u(xs[i], t, c, domain)});
        std::ostringstream name;
        name << path.stem().string() << "_t" << frac << ".csv";
        const auto p = path.parent_path() / name.str();
        csv::write(p, slice);
        written.push_back(p);
    }
    return written;
}

}  // namespace bopinn
