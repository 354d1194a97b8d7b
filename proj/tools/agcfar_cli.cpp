// agcfar: ARIMA-GARCH volatility modelling with CFAR anomaly localization.
//
// Subcommands: simulate, fit, detect, montecarlo, calibrate. Every command
// accepts --config <json> and --out <dir>; flags override config values.
//
// Exit codes: 0 success, 2 usage/config/parse error, 3 I/O error,
// 4 numerical or fitting failure.

#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "agcfar/agcfar.hpp"

namespace fs = std::filesystem;
using namespace agcfar;
using nlohmann::json;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumeric = 4;

int exit_code_for(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::Io: return kExitIo;
    case ErrorKind::Parse:
    case ErrorKind::InvalidConfig:
    case ErrorKind::InvalidModel:
    case ErrorKind::NonFiniteValue:
    case ErrorKind::InvalidOnset:
    case ErrorKind::MissingDecay: return kExitUsage;
    default: return kExitNumeric;
    }
}

struct CommonFlags {
    std::string config_path;
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    CLI::Option* seed_opt = nullptr;
};

void add_common(CLI::App* cmd, CommonFlags& c, bool with_seed) {
    cmd->add_option("--config", c.config_path, "JSON configuration file");
    cmd->add_option("--out", c.out_dir, "output directory (created if missing)");
    if (with_seed) c.seed_opt = cmd->add_option("--seed", c.seed, "base random seed");
}

json load_config(const CommonFlags& c) { return c.config_path.empty() ? json::object() : io::read_json(c.config_path); }

std::string out_path(const CommonFlags& c, const std::string& name) {
    std::error_code ec;
    fs::create_directories(c.out_dir, ec);
    if (ec) throw Error(ErrorKind::Io, "cannot create output directory '" + c.out_dir + "': " + ec.message());
    return (fs::path(c.out_dir) / name).string();
}

Scenario scenario_from(const json& cfg) {
    Scenario s = default_scenario();
    if (cfg.contains("scenario")) from_json(cfg.at("scenario"), s);
    else if (cfg.contains("arima") || cfg.contains("garch") || cfg.contains("gating") || cfg.contains("n")) from_json(cfg, s);
    return s;
}

// ---- fit flags -----------------------------------------------------------

struct FitFlags {
    int d = 1, max_p = 2, max_q = 2, max_k = 1, max_ell = 1;
    CLI::Option *d_opt{}, *p_opt{}, *q_opt{}, *k_opt{}, *l_opt{};
};

void add_fit_flags(CLI::App* cmd, FitFlags& f) {
    f.d_opt = cmd->add_option("--d", f.d, "differencing order")->check(CLI::Range(0, 3));
    f.p_opt = cmd->add_option("--max-p", f.max_p, "largest AR order searched")->check(CLI::Range(0, 5));
    f.q_opt = cmd->add_option("--max-q", f.max_q, "largest MA order searched")->check(CLI::Range(0, 5));
    f.k_opt = cmd->add_option("--max-k", f.max_k, "largest GARCH order searched")->check(CLI::Range(0, 2));
    f.l_opt = cmd->add_option("--max-ell", f.max_ell, "largest ARCH order searched")->check(CLI::Range(0, 3));
}

FitOptions fit_options(const json& cfg, const FitFlags& f) {
    FitOptions o;
    if (cfg.contains("fit")) from_json(cfg.at("fit"), o);
    if (f.d_opt->count()) o.d = f.d;
    if (f.p_opt->count()) o.max_p = f.max_p;
    if (f.q_opt->count()) o.max_q = f.max_q;
    if (f.k_opt->count()) o.max_k = f.max_k;
    if (f.l_opt->count()) o.max_ell = f.max_ell;
    if (o.d < 0 || o.max_p < 0 || o.max_p > 5 || o.max_q < 0 || o.max_q > 5 || o.max_k < 0 || o.max_k > 2 ||
        o.max_ell < 0 || o.max_ell > 3) {
        throw Error(ErrorKind::InvalidConfig, "fit orders out of range (max_p,max_q <= 5; max_k <= 2; max_ell <= 3)");
    }
    return o;
}

// ---- detector flags ------------------------------------------------------

struct DetectFlags {
    std::string kind = "CA";
    int half_window = 16, guard = 2, rank = 0;
    double pfa = 1e-2;
    std::string statistic = "volatility";
    std::size_t startup_mask = 0;
    bool mask_startup = false;
    CLI::Option *kind_opt{}, *t_opt{}, *g_opt{}, *r_opt{}, *pfa_opt{}, *stat_opt{}, *mask_opt{}, *mask_flag{};
};

void add_detect_flags(CLI::App* cmd, DetectFlags& f) {
    f.kind_opt = cmd->add_option("--kind", f.kind, "CFAR detector: CA or OS")->check(CLI::IsMember({"CA", "OS", "ca", "os"}));
    f.t_opt = cmd->add_option("--half-window", f.half_window, "reference cells per side (T)");
    f.g_opt = cmd->add_option("--guard", f.guard, "guard cells per side (G)");
    f.r_opt = cmd->add_option("--rank", f.rank, "OS rank (default ceil(0.75*2T))");
    f.pfa_opt = cmd->add_option("--pfa", f.pfa, "design false-alarm probability");
    f.stat_opt = cmd->add_option("--statistic", f.statistic, "detection statistic: volatility or squared_residual")
                     ->check(CLI::IsMember({"volatility", "squared_residual"}));
    f.mask_opt = cmd->add_option("--startup-mask", f.startup_mask, "suppress alarms in the first N cells");
    f.mask_flag = cmd->add_flag("--mask-startup", f.mask_startup, "suppress alarms in the first 2(T+G) cells");
}

DetectOptions detect_options(const json& cfg, const DetectFlags& f) {
    DetectOptions o;
    if (cfg.contains("cfar")) from_json(cfg.at("cfar"), o.cfar);
    std::string statistic = "volatility";
    if (cfg.contains("detect")) {
        const auto& d = cfg.at("detect");
        statistic = io::get_or<std::string>(d, "statistic", statistic);
        o.startup_mask = io::get_or<std::size_t>(d, "startup_mask", 0);
    }
    if (f.kind_opt->count()) o.cfar.kind = parse_cfar_kind(f.kind);
    if (f.t_opt->count()) o.cfar.half_window = f.half_window;
    if (f.g_opt->count()) o.cfar.guard = f.guard;
    if (f.r_opt->count()) o.cfar.os_rank = f.rank;
    if (f.pfa_opt->count()) o.cfar.pfa = f.pfa;
    if (f.stat_opt->count()) statistic = f.statistic;
    if (statistic == "volatility") o.statistic = DetectionStatistic::Volatility;
    else if (statistic == "squared_residual") o.statistic = DetectionStatistic::SquaredResidual;
    else throw Error(ErrorKind::InvalidConfig, "unknown statistic '" + statistic + "'");
    if (f.mask_opt->count()) o.startup_mask = f.startup_mask;
    if (f.mask_startup) o.startup_mask = 2 * static_cast<std::size_t>(o.cfar.half_window + o.cfar.guard);
    validate_config(o.cfar);
    return o;
}

json hybrid_json(const HybridModel& h) { return json{{"arima", h.arima}, {"garch", h.garch}}; }

HybridModel load_hybrid(const std::string& path, const TimeSeries& series) {
    const auto j = io::read_json(path);
    try {
        const auto arima = j.at("arima").get<ArimaModel>();
        const auto garch = j.at("garch").get<GarchModel>();
        return apply_hybrid(series, arima, garch);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Parse, "malformed model JSON '" + path + "': " + e.what());
    }
}

// ---- commands ------------------------------------------------------------

int cmd_simulate(const CommonFlags& c, std::optional<std::size_t> n) {
    const auto cfg = load_config(c);
    auto sc = scenario_from(cfg);
    if (n) sc.n = *n;
    const std::uint64_t seed = c.seed_opt->count() ? c.seed : io::get_or<std::uint64_t>(cfg, "seed", sc.seed);
    const auto sig = simulate_scenario(sc, seed);
    io::write_series_csv(out_path(c, "signal.csv"), sig.s);
    io::write_truth_csv(out_path(c, "truth.csv"), sig.truth);
    io::write_series_csv(out_path(c, "x.csv"), sig.x);
    io::write_series_csv(out_path(c, "z.csv"), sig.z);
    io::write_series_csv(out_path(c, "nu.csv"), sig.nu, "nu");
    std::cout << "simulated " << sc.n << " samples (seed " << seed << ") into " << c.out_dir << '\n';
    return 0;
}

int cmd_fit(const CommonFlags& c, const FitFlags& ff, const std::string& signal, const std::string& apply) {
    const auto cfg = load_config(c);
    const auto series = io::read_series_csv(signal);
    HybridModel h;
    if (!apply.empty()) {
        h = load_hybrid(apply, series);
    } else {
        h = fit_hybrid(series, fit_options(cfg, ff));
        io::write_arima_table_csv(out_path(c, "aic_arima.csv"), h.arima_table);
        io::write_garch_table_csv(out_path(c, "aic_garch.csv"), h.garch_table);
    }
    auto doc = hybrid_json(h);
    try {
        doc["heteroskedasticity_score"] = heteroskedasticity_score(h.residuals, 5);
    } catch (const Error&) {
        doc["heteroskedasticity_score"] = nullptr;
    }
    io::write_json(out_path(c, "model.json"), doc);
    io::write_series_csv(out_path(c, "residuals.csv"), h.residuals);
    io::write_series_csv(out_path(c, "volatility.csv"), h.volatility, "nu");
    std::cout << "ARIMA(" << h.arima.p << ',' << h.arima.d << ',' << h.arima.q << ")-GARCH(" << h.garch.k << ','
              << h.garch.ell << ")\n";
    return 0;
}

int cmd_detect(const CommonFlags& c, const FitFlags& ff, const DetectFlags& df, const std::string& signal,
               const std::string& model, bool fit_inline, const std::string& truth_path) {
    const auto cfg = load_config(c);
    const auto series = io::read_series_csv(signal);
    if (model.empty() == !fit_inline) throw Error(ErrorKind::InvalidConfig, "give exactly one of --model or --fit");
    const auto h = fit_inline ? fit_hybrid(series, fit_options(cfg, ff)) : load_hybrid(model, series);
    const auto opts = detect_options(cfg, df);
    const auto trace = detect(series, h, opts);
    io::write_trace_csv(out_path(c, "trace.csv"), trace);
    io::write_intervals_csv(out_path(c, "intervals.csv"), trace);
    if (!truth_path.empty()) {
        const auto truth = io::read_truth_csv(truth_path);
        const auto rep = evaluate(trace, truth);
        io::write_json(out_path(c, "evaluation.json"),
                       json{{"pfa", rep.empirical_pfa},
                            {"pd", rep.empirical_pd},
                            {"episode_pd", rep.episode_pd},
                            {"median_delay", rep.median_delay ? json(*rep.median_delay) : json(nullptr)}});
    }
    std::cout << trace.intervals.size() << " detected interval(s)\n";
    return 0;
}

int cmd_montecarlo(const CommonFlags& c, const FitFlags& ff, const DetectFlags& df, std::optional<std::size_t> runs_flag,
                   unsigned threads) {
    const auto cfg = load_config(c);
    const auto sc = scenario_from(cfg);
    const auto fit = fit_options(cfg, ff);
    const auto det = detect_options(cfg, df);
    const std::size_t runs = runs_flag ? *runs_flag : io::get_or<std::size_t>(cfg, "runs", 100);
    const std::uint64_t seed = c.seed_opt->count() ? c.seed : io::get_or<std::uint64_t>(cfg, "seed", sc.seed);
    const auto res = monte_carlo(sc, runs, seed, fit, det, threads);
    io::write_averaged_csv(out_path(c, "averaged.csv"), res);
    io::write_json(out_path(c, "report.json"), report_json(res, det));
    std::cout << "runs " << res.succeeded << '/' << res.runs << "  pfa " << res.pfa.mean << "  pd " << res.pd.mean
              << "  episode_pd " << res.episode_pd.mean << '\n';
    return 0;
}

int cmd_calibrate(const CommonFlags& c, const DetectFlags& df, std::optional<int> cells_flag) {
    const auto cfg = load_config(c);
    auto det = detect_options(cfg, df);
    const int cells = cells_flag ? *cells_flag : det.cfar.cells();
    if (cells < 1) throw Error(ErrorKind::InvalidConfig, "--cells must be >= 1");
    const int rank = det.cfar.os_rank > 0 ? det.cfar.os_rank
                                          : static_cast<int>(std::ceil(0.75 * static_cast<double>(cells)));
    auto factor = [&](double pfa) {
        return det.cfar.kind == CfarKind::CA ? ca_factor(cells, pfa) : os_factor(cells, rank, pfa);
    };
    const double alpha = factor(det.cfar.pfa);
    std::vector<std::pair<double, double>> grid;
    constexpr int kPoints = 25;
    for (int i = 0; i < kPoints; ++i) {
        const double lp = std::log10(1e-6) + (std::log10(0.5) - std::log10(1e-6)) * i / (kPoints - 1);
        const double pfa = std::pow(10.0, lp);
        grid.emplace_back(pfa, factor(pfa));
    }
    io::write_calibration_csv(out_path(c, "calibration.csv"), grid);
    std::cout << "kind " << to_string(det.cfar.kind) << "  N " << cells;
    if (det.cfar.kind == CfarKind::OS) std::cout << "  rank " << rank;
    std::cout << "  pfa " << io::format_double(det.cfar.pfa) << "  alpha " << io::format_double(alpha) << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"ARIMA-GARCH volatility modelling with CFAR anomaly localization"};
    app.require_subcommand(1);

    CommonFlags sim_c, fit_c, det_c, mc_c, cal_c;
    FitFlags fit_f, det_ff, mc_ff;
    DetectFlags det_df, mc_df, cal_df;

    auto* sim = app.add_subcommand("simulate", "synthesize a scenario signal with ground truth");
    add_common(sim, sim_c, true);
    std::size_t sim_n = 0;
    auto* sim_n_opt = sim->add_option("--n", sim_n, "number of samples");

    auto* fit = app.add_subcommand("fit", "fit the ARIMA-GARCH hybrid model to a signal CSV");
    add_common(fit, fit_c, false);
    add_fit_flags(fit, fit_f);
    std::string fit_signal, fit_apply;
    fit->add_option("--signal", fit_signal, "signal CSV (index,value)")->required();
    fit->add_option("--apply", fit_apply, "re-apply an existing model JSON instead of fitting");

    auto* det = app.add_subcommand("detect", "run CFAR over the fitted volatility track");
    add_common(det, det_c, false);
    add_fit_flags(det, det_ff);
    add_detect_flags(det, det_df);
    std::string det_signal, det_model, det_truth;
    bool det_fit = false;
    det->add_option("--signal", det_signal, "signal CSV (index,value)")->required();
    det->add_option("--model", det_model, "hybrid model JSON from `fit`");
    det->add_flag("--fit", det_fit, "fit the model in-line");
    det->add_option("--truth", det_truth, "ground-truth CSV (index,a); writes evaluation.json");

    auto* mc = app.add_subcommand("montecarlo", "repeat simulate-fit-detect and average the traces");
    add_common(mc, mc_c, true);
    add_fit_flags(mc, mc_ff);
    add_detect_flags(mc, mc_df);
    std::size_t mc_runs = 100;
    unsigned mc_threads = 0;
    auto* mc_runs_opt = mc->add_option("--runs", mc_runs, "number of runs")->check(CLI::PositiveNumber);
    mc->add_option("--threads", mc_threads, "worker threads (0 = hardware concurrency)");

    auto* cal = app.add_subcommand("calibrate", "compute CFAR scaling factors");
    add_common(cal, cal_c, false);
    add_detect_flags(cal, cal_df);
    int cal_cells = 0;
    auto* cal_cells_opt = cal->add_option("--cells", cal_cells, "number of reference cells N (default 2T)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitUsage;
    }

    try {
        if (*sim) return cmd_simulate(sim_c, sim_n_opt->count() ? std::optional(sim_n) : std::nullopt);
        if (*fit) return cmd_fit(fit_c, fit_f, fit_signal, fit_apply);
        if (*det) return cmd_detect(det_c, det_ff, det_df, det_signal, det_model, det_fit, det_truth);
        if (*mc) {
            return cmd_montecarlo(mc_c, mc_ff, mc_df, mc_runs_opt->count() ? std::optional(mc_runs) : std::nullopt,
                                  mc_threads);
        }
        if (*cal) return cmd_calibrate(cal_c, cal_df, cal_cells_opt->count() ? std::optional(cal_cells) : std::nullopt);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code_for(e.kind());
    } catch (const json::exception& e) {
        std::cerr << "error: invalid configuration: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}
