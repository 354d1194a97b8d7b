#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "agcfar/pipeline.hpp"

namespace agcfar::io {

using nlohmann::json;

/// Shortest representation that parses back to the same double.
inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw Error(ErrorKind::Parse, "not a number: '" + std::string(s) + "'");
    }
    return v;
}

inline long long parse_integer(std::string_view s) {
    const double v = parse_double(s);
    if (!std::isfinite(v) || v != std::floor(v)) throw Error(ErrorKind::Parse, "not an integer: '" + std::string(s) + "'");
    return static_cast<long long>(v);
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(std::string_view name) const {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) return i;
        }
        throw Error(ErrorKind::Parse, "missing CSV column '" + std::string(name) + "'");
    }
};

inline std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        if (!cell.empty() && cell.back() == '\r') cell.pop_back();
        out.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline CsvTable parse_csv(std::istream& in) {
    CsvTable t;
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorKind::Parse, "empty CSV input");
    t.header = split_line(line);
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        auto row = split_line(line);
        if (row.size() != t.header.size()) throw Error(ErrorKind::Parse, "CSV row has wrong number of fields: " + line);
        t.rows.push_back(std::move(row));
    }
    return t;
}

inline CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open '" + path + "' for reading");
    return parse_csv(in);
}

inline std::ofstream open_for_write(const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot open '" + path + "' for writing");
    return out;
}

inline void finish(std::ofstream& out, const std::string& path) {
    out.flush();
    if (!out) throw Error(ErrorKind::Io, "write to '" + path + "' failed");
}

/// Reads an `index,<value>` CSV. The first column must hold consecutive
/// integers; the second column becomes the series values.
inline TimeSeries parse_series_csv(std::istream& in) {
    const auto table = parse_csv(in);
    if (table.header.size() < 2 || table.header[0] != "index") {
        throw Error(ErrorKind::Parse, "signal CSV header must start with 'index,'");
    }
    std::vector<double> values;
    values.reserve(table.rows.size());
    long long first = 0;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const long long idx = parse_integer(table.rows[r][0]);
        if (r == 0) first = idx;
        else if (idx != first + static_cast<long long>(r)) throw Error(ErrorKind::Parse, "CSV indices must be consecutive");
        values.push_back(parse_double(table.rows[r][1]));
    }
    return TimeSeries(std::move(values), first);
}

inline TimeSeries read_series_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open '" + path + "' for reading");
    return parse_series_csv(in);
}

inline void write_series_csv(std::ostream& out, const TimeSeries& s, std::string_view value_name = "value") {
    out << "index," << value_name << '\n';
    for (std::size_t t = 0; t < s.size(); ++t) {
        out << (s.start_index() + static_cast<std::int64_t>(t)) << ',' << format_double(s[t]) << '\n';
    }
}

inline void write_series_csv(const std::string& path, const TimeSeries& s, std::string_view value_name = "value") {
    auto out = open_for_write(path);
    write_series_csv(out, s, value_name);
    finish(out, path);
}

inline void write_truth_csv(const std::string& path, std::span<const std::uint8_t> a) {
    auto out = open_for_write(path);
    out << "index,a\n";
    for (std::size_t t = 0; t < a.size(); ++t) out << t << ',' << int(a[t]) << '\n';
    finish(out, path);
}

inline std::vector<std::uint8_t> read_truth_csv(const std::string& path) {
    const auto t = read_csv(path);
    const auto col = t.column("a");
    std::vector<std::uint8_t> a;
    for (const auto& row : t.rows) {
        const auto v = parse_integer(row[col]);
        if (v != 0 && v != 1) throw Error(ErrorKind::Parse, "truth values must be 0 or 1");
        a.push_back(static_cast<std::uint8_t>(v));
    }
    return a;
}

inline void write_trace_csv(std::ostream& out, const DetectionTrace& tr) {
    out << "index,power,threshold,decision\n";
    for (std::size_t t = 0; t < tr.size(); ++t) {
        out << (tr.start_index + static_cast<std::int64_t>(t)) << ',' << format_double(tr.power[t]) << ','
            << format_double(tr.threshold[t]) << ',' << int(tr.decision[t]) << '\n';
    }
}

inline void write_trace_csv(const std::string& path, const DetectionTrace& tr) {
    auto out = open_for_write(path);
    write_trace_csv(out, tr);
    finish(out, path);
}

inline void write_intervals_csv(const std::string& path, const DetectionTrace& tr) {
    auto out = open_for_write(path);
    out << "start,end\n";
    for (const auto& iv : tr.intervals) {
        out << (tr.start_index + static_cast<std::int64_t>(iv.start)) << ','
            << (tr.start_index + static_cast<std::int64_t>(iv.end)) << '\n';
    }
    finish(out, path);
}

inline void write_averaged_csv(const std::string& path, const MonteCarloResult& r) {
    auto out = open_for_write(path);
    out << "index,mean_threshold,detection_frequency\n";
    for (std::size_t t = 0; t < r.mean_threshold.size(); ++t) {
        out << t << ',' << format_double(r.mean_threshold[t]) << ',' << format_double(r.detection_frequency[t]) << '\n';
    }
    finish(out, path);
}

inline void write_arima_table_csv(const std::string& path, const std::vector<ArimaAicCell>& table) {
    auto out = open_for_write(path);
    out << "p,q,ok,loglik,aic\n";
    for (const auto& c : table) {
        out << c.p << ',' << c.q << ',' << int(c.ok) << ',' << format_double(c.ok ? c.loglik : std::nan("")) << ','
            << format_double(c.ok ? c.aic : std::nan("")) << '\n';
    }
    finish(out, path);
}

inline void write_garch_table_csv(const std::string& path, const std::vector<GarchAicCell>& table) {
    auto out = open_for_write(path);
    out << "k,ell,ok,loglik,aic\n";
    for (const auto& c : table) {
        out << c.k << ',' << c.ell << ',' << int(c.ok) << ',' << format_double(c.ok ? c.loglik : std::nan("")) << ','
            << format_double(c.ok ? c.aic : std::nan("")) << '\n';
    }
    finish(out, path);
}

inline void write_calibration_csv(const std::string& path, const std::vector<std::pair<double, double>>& grid) {
    auto out = open_for_write(path);
    out << "pfa,alpha\n";
    for (const auto& [p, a] : grid) out << format_double(p) << ',' << format_double(a) << '\n';
    finish(out, path);
}

// ---- JSON ---------------------------------------------------------------

template <class T>
T get_or(const json& j, const char* key, T fallback) {
    return j.contains(key) ? j.at(key).get<T>() : fallback;
}

} // namespace agcfar::io

namespace agcfar {

// nlohmann ADL hooks. Numbers are written by the library with round-trip
// precision.

inline void to_json(nlohmann::json& j, const ArimaModel& m) {
    j = nlohmann::json{{"p", m.p}, {"d", m.d}, {"q", m.q}, {"mu", m.mu}, {"phi", m.phi}, {"theta", m.theta}, {"sigma2", m.sigma2}};
}

inline void from_json(const nlohmann::json& j, ArimaModel& m) {
    m.phi = io::get_or(j, "phi", std::vector<double>{});
    m.theta = io::get_or(j, "theta", std::vector<double>{});
    m.p = io::get_or(j, "p", static_cast<int>(m.phi.size()));
    m.d = io::get_or(j, "d", 0);
    m.q = io::get_or(j, "q", static_cast<int>(m.theta.size()));
    m.mu = io::get_or(j, "mu", 0.0);
    m.sigma2 = j.at("sigma2").get<double>();
}

inline void to_json(nlohmann::json& j, const GarchModel& m) {
    j = nlohmann::json{{"k", m.k}, {"ell", m.ell}, {"varsigma0", m.varsigma0}, {"varsigma", m.varsigma}, {"eta", m.eta}};
}

inline void from_json(const nlohmann::json& j, GarchModel& m) {
    m.varsigma = io::get_or(j, "varsigma", std::vector<double>{});
    m.eta = io::get_or(j, "eta", std::vector<double>{});
    m.k = io::get_or(j, "k", static_cast<int>(m.varsigma.size()));
    m.ell = io::get_or(j, "ell", static_cast<int>(m.eta.size()));
    m.varsigma0 = j.at("varsigma0").get<double>();
}

inline void to_json(nlohmann::json& j, const CfarConfig& c) {
    j = nlohmann::json{{"kind", to_string(c.kind)}, {"half_window", c.half_window}, {"guard", c.guard},
                       {"pfa", c.pfa},           {"os_rank", c.rank()}};
}

inline CfarKind parse_cfar_kind(const std::string& s) {
    if (s == "CA" || s == "ca") return CfarKind::CA;
    if (s == "OS" || s == "os") return CfarKind::OS;
    throw Error(ErrorKind::InvalidConfig, "unknown CFAR kind '" + s + "' (expected CA or OS)");
}

inline void from_json(const nlohmann::json& j, CfarConfig& c) {
    if (j.contains("kind")) c.kind = parse_cfar_kind(j.at("kind").get<std::string>());
    c.half_window = io::get_or(j, "half_window", c.half_window);
    c.guard = io::get_or(j, "guard", c.guard);
    c.pfa = io::get_or(j, "pfa", c.pfa);
    c.os_rank = io::get_or(j, "os_rank", c.os_rank);
}

inline void to_json(nlohmann::json& j, const GatingProcess& g) {
    if (g.kind == GatingKind::Bernoulli) {
        j = nlohmann::json{{"kind", "bernoulli"}, {"p0", g.p0}};
    } else {
        j = nlohmann::json{{"kind", "markov"}, {"birth_rate", g.birth_rate}, {"death_rate", g.death_rate}};
    }
    if (g.window) j["window"] = {g.window->first, g.window->second};
}

inline void from_json(const nlohmann::json& j, GatingProcess& g) {
    const auto kind = io::get_or<std::string>(j, "kind", "markov");
    if (kind == "bernoulli") {
        g.kind = GatingKind::Bernoulli;
        g.p0 = j.at("p0").get<double>();
    } else if (kind == "markov") {
        g.kind = GatingKind::TwoStateMarkov;
        g.birth_rate = j.at("birth_rate").get<double>();
        g.death_rate = j.at("death_rate").get<double>();
    } else {
        throw Error(ErrorKind::InvalidConfig, "unknown gating kind '" + kind + "'");
    }
    if (j.contains("window")) {
        const auto w = j.at("window").get<std::vector<std::size_t>>();
        if (w.size() != 2) throw Error(ErrorKind::InvalidConfig, "gating window must be [start, end]");
        g.window = std::pair{w[0], w[1]};
    } else {
        g.window.reset();
    }
}

inline const char* to_string(AnomalyKind k) noexcept {
    switch (k) {
    case AnomalyKind::AA: return "AA";
    case AnomalyKind::IA: return "IA";
    case AnomalyKind::LSA: return "LSA";
    case AnomalyKind::TCA: return "TCA";
    }
    return "AA";
}

inline void to_json(nlohmann::json& j, const AnomalySpec& a) {
    j = nlohmann::json{{"kind", to_string(a.kind)}, {"onset", a.onset}, {"omega", a.omega}};
    if (a.delta) j["delta"] = *a.delta;
}

inline void from_json(const nlohmann::json& j, AnomalySpec& a) {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "AA") a.kind = AnomalyKind::AA;
    else if (kind == "IA") a.kind = AnomalyKind::IA;
    else if (kind == "LSA") a.kind = AnomalyKind::LSA;
    else if (kind == "TCA") a.kind = AnomalyKind::TCA;
    else throw Error(ErrorKind::InvalidConfig, "unknown anomaly kind '" + kind + "'");
    a.onset = j.at("onset").get<std::size_t>();
    a.omega = j.at("omega").get<double>();
    if (j.contains("delta")) a.delta = j.at("delta").get<double>();
}

inline void to_json(nlohmann::json& j, const Scenario& s) {
    j = nlohmann::json{{"n", s.n},         {"burn_in", s.burn_in}, {"seed", s.seed},      {"arima", s.arima},
                       {"garch", s.garch}, {"gating", s.gating},   {"anomalies", s.anomalies}};
}

inline void from_json(const nlohmann::json& j, Scenario& s) {
    s.n = io::get_or(j, "n", s.n);
    s.burn_in = io::get_or(j, "burn_in", s.burn_in);
    s.seed = io::get_or(j, "seed", s.seed);
    if (j.contains("arima")) s.arima = j.at("arima").get<ArimaModel>();
    if (j.contains("garch")) s.garch = j.at("garch").get<GarchModel>();
    if (j.contains("gating")) s.gating = j.at("gating").get<GatingProcess>();
    if (j.contains("anomalies")) s.anomalies = j.at("anomalies").get<std::vector<AnomalySpec>>();
}

inline void to_json(nlohmann::json& j, const FitOptions& f) {
    j = nlohmann::json{{"d", f.d}, {"max_p", f.max_p}, {"max_q", f.max_q}, {"max_k", f.max_k}, {"max_ell", f.max_ell}};
}

inline void from_json(const nlohmann::json& j, FitOptions& f) {
    f.d = io::get_or(j, "d", f.d);
    f.max_p = io::get_or(j, "max_p", f.max_p);
    f.max_q = io::get_or(j, "max_q", f.max_q);
    f.max_k = io::get_or(j, "max_k", f.max_k);
    f.max_ell = io::get_or(j, "max_ell", f.max_ell);
}

inline nlohmann::json summary_json(const Summary& s) {
    return nlohmann::json{{"mean", s.mean}, {"std", s.stddev}, {"count", s.count}};
}

/// Monte-Carlo report document.
inline nlohmann::json report_json(const MonteCarloResult& r, const DetectOptions& det) {
    nlohmann::json failures = nlohmann::json::array();
    for (const auto& [seed, msg] : r.failures) failures.push_back({{"seed", seed}, {"error", msg}});
    auto delay = summary_json(r.delay);
    delay["median"] = r.median_delay ? nlohmann::json(*r.median_delay) : nlohmann::json(nullptr);
    return nlohmann::json{
        {"runs", r.runs},
        {"succeeded", r.succeeded},
        {"failed", r.failed},
        {"base_seed", r.base_seed},
        {"failures", failures},
        {"cfar", det.cfar},
        {"statistic", det.statistic == DetectionStatistic::Volatility ? "volatility" : "squared_residual"},
        {"pfa", summary_json(r.pfa)},
        {"pd", summary_json(r.pd)},
        {"episode_pd", summary_json(r.episode_pd)},
        {"delay", delay},
    };
}

} // namespace agcfar

namespace agcfar::io {

inline json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open '" + path + "' for reading");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Parse, "invalid JSON in '" + path + "': " + e.what());
    }
}

inline void write_json(const std::string& path, const json& j) {
    auto out = open_for_write(path);
    out << j.dump(2) << '\n';
    finish(out, path);
}

} // namespace agcfar::io
