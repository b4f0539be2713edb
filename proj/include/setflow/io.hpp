#pragma once

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "config.hpp"
#include "scenarios.hpp"
#include "solver.hpp"
#include "verify.hpp"

namespace setflow {

class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& message) : std::runtime_error(message) {}
};

namespace detail {
inline std::string format_g12(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

inline std::string format_optional(const std::optional<double>& v) {
    return v ? format_g12(*v) : "nan";
}

/// strtod-based cell parser: unlike std::stod it accepts gradual underflow
/// (subnormal magnitudes occur naturally once the state has settled in K).
inline double parse_csv_double(const std::string& cell, const std::string& where) {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(cell.c_str(), &end);
    if (end == cell.c_str() || *end != '\0')
        throw IoError(where + ": cannot parse '" + cell + "' as a number");
    if (errno == ERANGE && std::abs(v) > 1.0)
        throw IoError(where + ": value '" + cell + "' overflows");
    return v;
}
} // namespace detail

inline std::filesystem::path summary_path_for(const std::filesystem::path& csv_path) {
    std::filesystem::path p = csv_path;
    p.replace_extension(".summary");
    return p;
}

/// Write the trajectory as CSV (header + one row per sample, 12 significant
/// digits) and a sibling key=value summary. On failure nothing partial is
/// left in place of the summary.
inline void emit_trajectory_csv(const TrajectoryRecord& traj, const HittingReport& report,
                                double worst_ratio, const std::filesystem::path& csv_path) {
    {
        std::ofstream out(csv_path);
        if (!out)
            throw IoError("cannot open " + csv_path.string() + " for writing");
        out << "time,d_K,d_eps_K,sigma_norm,theta_norm,fp_iters\n";
        for (const auto& s : traj.samples) {
            out << detail::format_g12(s.time) << ',' << detail::format_g12(s.d_k) << ','
                << detail::format_g12(s.d_eps) << ',' << detail::format_g12(s.sigma_norm) << ','
                << detail::format_g12(s.theta_norm) << ',' << s.fp_iters << '\n';
        }
        out.flush();
        if (!out)
            throw IoError("write failed for " + csv_path.string());
    }

    const std::filesystem::path summary = summary_path_for(csv_path);
    std::ostringstream body;
    body << "t_star=" << detail::format_optional(report.t_star) << '\n'
         << "bound=" << detail::format_optional(report.bound) << '\n'
         << "slope_fit=" << detail::format_optional(report.slope_fit) << '\n'
         << "max_violation=" << detail::format_g12(report.max_violation) << '\n'
         << "worst_ratio=" << detail::format_g12(worst_ratio) << '\n';
    std::ofstream out(summary);
    if (!out)
        throw IoError("cannot open " + summary.string() + " for writing");
    out << body.str();
    out.flush();
    if (!out) {
        out.close();
        std::error_code ec;
        std::filesystem::remove(summary, ec);
        throw IoError("write failed for " + summary.string());
    }
}

/// Parse a trajectory CSV back into a record (scalar samples only; fields
/// and snapshots are not stored in the CSV).
inline TrajectoryRecord read_trajectory_csv(const std::filesystem::path& csv_path) {
    std::ifstream in(csv_path);
    if (!in)
        throw IoError("cannot open " + csv_path.string());
    std::string line;
    if (!std::getline(in, line))
        throw IoError(csv_path.string() + ": empty file");
    if (!line.empty() && line.back() == '\r')
        line.pop_back();
    if (line != "time,d_K,d_eps_K,sigma_norm,theta_norm,fp_iters")
        throw IoError(csv_path.string() + ": unexpected header '" + line + "'");

    TrajectoryRecord record;
    long line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        std::ostringstream where;
        where << csv_path.string() << ":" << line_no;
        std::istringstream row(line);
        std::string cell;
        std::vector<double> values;
        while (std::getline(row, cell, ','))
            values.push_back(detail::parse_csv_double(cell, where.str()));
        if (values.size() != 6)
            throw IoError(where.str() + ": expected 6 columns, got " +
                          std::to_string(values.size()));
        TrajectorySample s;
        s.time = values[0];
        s.d_k = values[1];
        s.d_eps = values[2];
        s.sigma_norm = values[3];
        s.theta_norm = values[4];
        s.fp_iters = static_cast<int>(values[5]);
        if (!std::isfinite(s.time) || !std::isfinite(s.d_k) || !std::isfinite(s.theta_norm))
            throw IoError(csv_path.string() + ": non-finite sample");
        record.samples.push_back(s);
    }
    if (record.samples.empty())
        throw IoError(csv_path.string() + ": no samples");
    if (record.samples.size() >= 2) {
        record.dt = record.samples[1].time - record.samples[0].time;
        for (std::size_t n = 1; n < record.samples.size(); ++n) {
            const double gap = record.samples[n].time - record.samples[n - 1].time;
            if (std::abs(gap - record.dt) > 1e-9 * std::max(1.0, std::abs(record.dt)))
                throw IoError(csv_path.string() + ": sample spacing is not constant");
        }
    }
    return record;
}

/// Sweep summary CSV: one row per swept value with every verifier output.
inline void emit_sweep_csv(const SweepResult& sweep, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot open " + path.string() + " for writing");
    out << sweep.axis << ",status,hit,t_star,bound,slope_fit,max_violation,worst_ratio\n";
    for (const auto& row : sweep.rows) {
        out << detail::format_g12(row.value) << ',' << row.status << ',';
        if (row.hitting) {
            out << (row.hitting->hit ? 1 : 0) << ','
                << detail::format_optional(row.hitting->t_star) << ','
                << detail::format_optional(row.hitting->bound) << ','
                << detail::format_optional(row.hitting->slope_fit) << ','
                << detail::format_g12(row.max_violation) << ','
                << detail::format_g12(row.worst_ratio) << '\n';
        } else {
            out << "0,nan,nan,nan,nan,nan\n";
        }
    }
    out.flush();
    if (!out)
        throw IoError("write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// Config documents: flat "key = value" lines, '#' comments.
// ---------------------------------------------------------------------------

inline const std::set<std::string>& config_keys() {
    static const std::set<std::string> keys = {
        "n_cells",     "domain_length", "obstacle.lower", "obstacle.upper",
        "kappa.kind",  "kappa.value",   "f.kind",         "f.value",
        "f.table",     "theta0.kind",   "theta0.value",   "theta0.amplitude",
        "theta0.periods", "rho",        "epsilon",        "alpha",
        "t_final",     "dt",            "fp_tol",         "fp_max_iter",
        "hit_tol",
    };
    return keys;
}

namespace detail {
inline std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos)
        return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

inline double parse_number(const std::string& key, const std::string& text) {
    try {
        std::size_t consumed = 0;
        const double v = std::stod(text, &consumed);
        if (consumed != text.size())
            throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError(key, "cannot parse '" + text + "' as a number");
    }
}

inline std::optional<double> parse_bound(const std::string& key, const std::string& text) {
    if (text == "-inf" || text == "inf" || text == "+inf")
        return std::nullopt;
    return parse_number(key, text);
}

/// "t0:v0,t1:v1,..." pairs for the table-driven source kinds.
inline std::pair<std::vector<double>, std::vector<double>>
parse_time_table(const std::string& key, const std::string& text) {
    std::vector<double> times, values;
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (item.empty())
            continue;
        const auto colon = item.find(':');
        if (colon == std::string::npos)
            throw ConfigError(key, "expected 't:value' pairs, got '" + item + "'");
        times.push_back(parse_number(key, trim(item.substr(0, colon))));
        values.push_back(parse_number(key, trim(item.substr(colon + 1))));
    }
    if (times.empty())
        throw ConfigError(key, "empty table");
    return {std::move(times), std::move(values)};
}

inline std::vector<double> parse_value_list(const std::string& key, const std::string& text) {
    std::vector<double> values;
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty())
            values.push_back(parse_number(key, item));
    }
    if (values.empty())
        throw ConfigError(key, "empty value list");
    return values;
}
} // namespace detail

using ConfigMap = std::map<std::string, std::string>;

inline ConfigMap parse_key_values(const std::string& text) {
    ConfigMap kv;
    std::istringstream in(text);
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            std::ostringstream os;
            os << "line " << line_no;
            throw ConfigError(os.str(), "expected 'key = value', got '" + line + "'");
        }
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError("line " + std::to_string(line_no), "empty key");
        kv[key] = value;
    }
    return kv;
}

/// Apply a "key=value" override; unknown keys are errors, not warnings.
inline void apply_override(ConfigMap& kv, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos)
        throw ConfigError(assignment, "override must have the form key=value");
    const std::string key = detail::trim(assignment.substr(0, eq));
    const std::string value = detail::trim(assignment.substr(eq + 1));
    if (!config_keys().count(key))
        throw ConfigError(key, "unknown config key");
    kv[key] = value;
}

inline SimulationConfig build_config(const ConfigMap& kv) {
    for (const auto& [key, value] : kv)
        if (!config_keys().count(key))
            throw ConfigError(key, "unknown config key");

    const auto require = [&](const std::string& key) -> const std::string& {
        const auto it = kv.find(key);
        if (it == kv.end())
            throw ConfigError(key, "required key is missing");
        return it->second;
    };
    const auto lookup = [&](const std::string& key) -> std::optional<std::string> {
        const auto it = kv.find(key);
        if (it == kv.end())
            return std::nullopt;
        return it->second;
    };
    const auto number_or = [&](const std::string& key, double fallback) {
        const auto text = lookup(key);
        return text ? detail::parse_number(key, *text) : fallback;
    };

    const int n_cells =
        static_cast<int>(std::lround(detail::parse_number("n_cells", require("n_cells"))));
    const double length = detail::parse_number("domain_length", require("domain_length"));

    std::shared_ptr<const SpatialGrid> grid;
    try {
        grid = build_grid(n_cells, length);
    } catch (const std::invalid_argument& e) {
        throw ConfigError("n_cells", e.what());
    }
    SimulationConfig cfg(grid);

    try {
        cfg.obstacle =
            ObstacleSet::interval(detail::parse_bound("obstacle.lower", require("obstacle.lower")),
                                  detail::parse_bound("obstacle.upper", require("obstacle.upper")));
    } catch (const std::invalid_argument& e) {
        throw ConfigError("obstacle.lower", e.what());
    }

    const std::string kappa_kind = require("kappa.kind");
    try {
        if (kappa_kind == "constant")
            cfg.kappa =
                Diffusivity::constant(detail::parse_number("kappa.value", require("kappa.value")));
        else
            cfg.kappa = Diffusivity::named(kappa_kind);
    } catch (const std::invalid_argument& e) {
        throw ConfigError("kappa.kind", e.what());
    }

    cfg.rho = detail::parse_number("rho", require("rho"));
    cfg.reg.epsilon = detail::parse_number("epsilon", require("epsilon"));
    cfg.reg.alpha = number_or("alpha", 0.0);
    cfg.t_final = detail::parse_number("t_final", require("t_final"));
    cfg.dt = detail::parse_number("dt", require("dt"));
    cfg.fp_tol = number_or("fp_tol", 1e-12);
    cfg.fp_max_iter = static_cast<int>(std::lround(number_or("fp_max_iter", 200)));
    if (const auto text = lookup("hit_tol"))
        cfg.hit_tol_override = detail::parse_number("hit_tol", *text);

    const std::string f_kind = require("f.kind");
    try {
        if (f_kind == "zero") {
            cfg.source = SourceTerm::zero();
        } else if (f_kind == "constant") {
            cfg.source =
                SourceTerm::constant(detail::parse_number("f.value", require("f.value")));
        } else if (f_kind == "pwconstant") {
            auto [times, values] = detail::parse_time_table("f.table", require("f.table"));
            cfg.source = SourceTerm::piecewise_constant(std::move(times), std::move(values));
        } else if (f_kind == "pwlinear") {
            auto [times, values] = detail::parse_time_table("f.table", require("f.table"));
            cfg.source = SourceTerm::piecewise_linear(std::move(times), std::move(values));
        } else if (f_kind == "tabulated") {
            cfg.source = SourceTerm::tabulated(
                detail::parse_value_list("f.table", require("f.table")), cfg.dt);
        } else {
            throw ConfigError("f.kind", "unknown source kind '" + f_kind +
                                            "' (zero | constant | pwconstant | pwlinear | "
                                            "tabulated)");
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError("f.table", e.what());
    }

    const std::string theta0_kind = require("theta0.kind");
    if (theta0_kind == "constant") {
        const double value = detail::parse_number("theta0.value", require("theta0.value"));
        cfg.theta0 = GridFunction::sampled(cfg.grid, [value](double) { return value; });
    } else if (theta0_kind == "cosine") {
        const double amplitude = number_or("theta0.amplitude", 1.0);
        const double periods = number_or("theta0.periods", 1.0);
        cfg.theta0 = GridFunction::sampled(cfg.grid, [=](double x) {
            return amplitude * std::cos(2.0 * std::numbers::pi * periods * x / length);
        });
    } else {
        throw ConfigError("theta0.kind",
                          "unknown initial datum kind '" + theta0_kind + "' (constant | cosine)");
    }

    cfg.validate();
    return cfg;
}

inline SimulationConfig parse_config(const std::string& text) {
    return build_config(parse_key_values(text));
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

} // namespace setflow
