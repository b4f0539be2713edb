#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "config.hpp"
#include "solver.hpp"
#include "verify.hpp"

namespace setflow {

/// Vocabulary of per-scenario checks. Each id is evaluated against a run's
/// trajectory and verifier reports.
enum class CheckId {
    HitBound,           // t_star <= d_K(theta0)/(rho - rho*) + slack
    HitTime,            // |t_star - target| <= threshold
    SlopeBound,         // slope_fit <= -(rho - rho*) + threshold*rho
    SlopeMatch,         // |slope_fit - target| <= threshold
    Invariance,         // sup_n d_K(theta_n) <= threshold
    InequalityResidual, // max_violation <= threshold and sigma-norm condition
    EnergyRatio,        // worst energy ratio <= threshold
    Persistence,        // d_K <= threshold for all t past the window start
    MonotoneDescent,    // d_K nonincreasing (up to threshold slack) until it crosses eps
    AnalyticTrace,      // spatial mean of theta(t) tracks t-1 on [0,1] (intro run)
};

inline const char* to_string(CheckId id) {
    switch (id) {
    case CheckId::HitBound: return "hit-bound";
    case CheckId::HitTime: return "hit-time";
    case CheckId::SlopeBound: return "slope-bound";
    case CheckId::SlopeMatch: return "slope-match";
    case CheckId::Invariance: return "invariance";
    case CheckId::InequalityResidual: return "inequality-residual";
    case CheckId::EnergyRatio: return "energy-ratio";
    case CheckId::Persistence: return "persistence";
    case CheckId::MonotoneDescent: return "monotone-descent";
    case CheckId::AnalyticTrace: return "analytic-trace";
    }
    return "?";
}

struct Expectation {
    CheckId id;
    double threshold;
    /// Check-specific reference value: the analytic hitting time or slope
    /// for hit-time/slope-match, the window start for persistence.
    std::optional<double> target;
};

/// A named, reproducible experiment: a config plus the checks its run must
/// satisfy. theta0_profile keeps the closed form of the initial datum so a
/// resolution sweep can re-sample it on a finer grid.
struct Scenario {
    std::string name;
    SimulationConfig cfg;
    std::vector<Expectation> expectations;
    std::function<double(double)> theta0_profile;
};

struct CheckResult {
    CheckId id;
    bool pass;
    double measured;
    double threshold;
    std::string detail;
};

struct RunOutcome {
    TrajectoryRecord traj;
    HittingReport hitting;
    InequalityReport inequality;
    double worst_ratio = 0.0;
    std::vector<CheckResult> checks;
    bool all_pass = true;
};

namespace detail {
inline CheckResult make_result(CheckId id, bool pass, double measured, double threshold,
                               std::string detail) {
    return CheckResult{id, pass, measured, threshold, std::move(detail)};
}
} // namespace detail

inline std::vector<CheckResult> evaluate_checks(const Scenario& scenario,
                                                const TrajectoryRecord& traj,
                                                const HittingReport& hitting,
                                                const InequalityReport& inequality,
                                                double worst_ratio) {
    const SimulationConfig& cfg = scenario.cfg;
    std::vector<CheckResult> results;
    results.reserve(scenario.expectations.size());

    for (const Expectation& e : scenario.expectations) {
        std::ostringstream detail;
        switch (e.id) {
        case CheckId::HitBound: {
            if (!hitting.hit) {
                results.push_back(detail::make_result(e.id, false,
                                                      std::numeric_limits<double>::infinity(),
                                                      e.threshold, "no hit within horizon"));
                break;
            }
            if (!hitting.bound) {
                detail << "bound not applicable (rho <= rho*)";
                results.push_back(
                    detail::make_result(e.id, true, *hitting.t_star, e.threshold, detail.str()));
                break;
            }
            const double limit = *hitting.bound + e.threshold;
            const bool pass = *hitting.t_star <= limit;
            detail << "t_star = " << *hitting.t_star << " vs bound + slack = " << limit;
            results.push_back(detail::make_result(e.id, pass, *hitting.t_star, limit, detail.str()));
            break;
        }
        case CheckId::HitTime: {
            if (!hitting.hit || !e.target) {
                results.push_back(detail::make_result(e.id, false,
                                                      std::numeric_limits<double>::infinity(),
                                                      e.threshold, "no hit within horizon"));
                break;
            }
            const double err = std::abs(*hitting.t_star - *e.target);
            const bool pass = err <= e.threshold * (1.0 + 1e-9);
            detail << "t_star = " << *hitting.t_star << ", target " << *e.target
                   << ", |err| = " << err;
            results.push_back(detail::make_result(e.id, pass, err, e.threshold, detail.str()));
            break;
        }
        case CheckId::SlopeBound: {
            if (!hitting.slope_fit) {
                results.push_back(detail::make_result(e.id, false, 0.0, e.threshold,
                                                      "no pre-hitting window to fit"));
                break;
            }
            const double rho_star =
                cfg.source.rho_star(*cfg.grid, traj.samples.back().time, traj.dt);
            const double limit = -(cfg.rho - rho_star) + e.threshold * cfg.rho;
            const bool pass = *hitting.slope_fit <= limit;
            detail << "slope_fit = " << *hitting.slope_fit << " vs limit " << limit;
            results.push_back(
                detail::make_result(e.id, pass, *hitting.slope_fit, limit, detail.str()));
            break;
        }
        case CheckId::SlopeMatch: {
            if (!hitting.slope_fit || !e.target) {
                results.push_back(detail::make_result(e.id, false, 0.0, e.threshold,
                                                      "no pre-hitting window to fit"));
                break;
            }
            const double err = std::abs(*hitting.slope_fit - *e.target);
            const bool pass = err <= e.threshold;
            detail << "slope_fit = " << *hitting.slope_fit << ", target " << *e.target
                   << ", |err| = " << err;
            results.push_back(detail::make_result(e.id, pass, err, e.threshold, detail.str()));
            break;
        }
        case CheckId::Invariance: {
            double worst = 0.0;
            for (const auto& s : traj.samples)
                worst = std::max(worst, s.d_k);
            const bool pass = worst <= e.threshold;
            detail << "sup d_K = " << worst;
            results.push_back(detail::make_result(e.id, pass, worst, e.threshold, detail.str()));
            break;
        }
        case CheckId::InequalityResidual: {
            const bool pass = inequality.max_violation <= e.threshold && inequality.sigma_norm_ok;
            detail << "max_violation = " << inequality.max_violation;
            if (!inequality.sigma_norm_ok)
                detail << "; sigma norm dropped to " << inequality.worst_sigma_norm
                       << " inside the active set (needs >= " << inequality.sigma_norm_threshold
                       << ")";
            results.push_back(detail::make_result(e.id, pass, inequality.max_violation,
                                                  e.threshold, detail.str()));
            break;
        }
        case CheckId::EnergyRatio: {
            const bool pass = worst_ratio <= e.threshold;
            detail << "worst_ratio = " << worst_ratio;
            results.push_back(
                detail::make_result(e.id, pass, worst_ratio, e.threshold, detail.str()));
            break;
        }
        case CheckId::Persistence: {
            double window_start;
            if (e.target) {
                window_start = *e.target;
            } else if (hitting.hit) {
                window_start = *hitting.t_star + traj.dt;
            } else {
                results.push_back(detail::make_result(e.id, false, 0.0, e.threshold,
                                                      "no hit, nothing persists"));
                break;
            }
            double worst = 0.0;
            bool any = false;
            for (const auto& s : traj.samples) {
                if (s.time > window_start) {
                    worst = std::max(worst, s.d_k);
                    any = true;
                }
            }
            const bool pass = !any || worst <= e.threshold;
            detail << "sup d_K past t = " << window_start << " is " << worst;
            results.push_back(detail::make_result(e.id, pass, worst, e.threshold, detail.str()));
            break;
        }
        case CheckId::MonotoneDescent: {
            double worst_increase = 0.0;
            for (std::size_t n = 0; n + 1 < traj.samples.size(); ++n) {
                if (traj.samples[n].d_k <= cfg.reg.epsilon)
                    break; // inside the layer; the decay law changes regime
                worst_increase =
                    std::max(worst_increase, traj.samples[n + 1].d_k - traj.samples[n].d_k);
            }
            const bool pass = worst_increase <= e.threshold;
            detail << "worst d_K increase before crossing = " << worst_increase;
            results.push_back(
                detail::make_result(e.id, pass, worst_increase, e.threshold, detail.str()));
            break;
        }
        case CheckId::AnalyticTrace: {
            double worst = 0.0;
            bool any = false;
            for (const auto& [t, field] : traj.snapshots) {
                if (t <= 1.0 + 1e-9) {
                    worst = std::max(worst, std::abs(mean_value(field) - (t - 1.0)));
                    any = true;
                }
            }
            const bool pass = any && worst <= e.threshold;
            detail << "max |mean(theta(t)) - (t-1)| on [0,1] = " << worst;
            if (!any)
                detail << " (no snapshots recorded)";
            results.push_back(detail::make_result(e.id, pass, worst, e.threshold, detail.str()));
            break;
        }
        }
    }
    return results;
}

inline RunOutcome run_scenario(const Scenario& scenario) {
    RunOutcome out;
    out.traj = simulate(scenario.cfg);
    out.hitting = detect_hitting(out.traj, scenario.cfg);
    out.inequality = verify_differential_inequality(out.traj, scenario.cfg);
    out.worst_ratio = energy_diagnostic(out.traj, scenario.cfg);
    out.checks = evaluate_checks(scenario, out.traj, out.hitting, out.inequality, out.worst_ratio);
    out.all_pass = std::all_of(out.checks.begin(), out.checks.end(),
                               [](const CheckResult& c) { return c.pass; });
    return out;
}

// ---------------------------------------------------------------------------
// Bundled scenarios
// ---------------------------------------------------------------------------

/// Closed-form regression: on Omega = (0,1) with K = {v >= 0}, kappa = 1,
/// rho = 1 and theta0 = -1, the source f(t) = 1 - |Omega|^{-1/2} for t < 1
/// and f(t) = 1 afterwards drives the exact solution theta(t) = t - 1: the
/// set is reached at t = 1 and the evolution continues inside it.
inline Scenario scenario_intro_analytic() {
    const double length = 1.0;
    std::function<double(double)> profile = [](double) { return -1.0; };
    SimulationConfig cfg(build_grid(64, length));
    cfg.obstacle = ObstacleSet::at_least(0.0);
    cfg.kappa = Diffusivity::constant(1.0);
    const double pre_hit_value = 1.0 - 1.0 / std::sqrt(length);
    cfg.source = SourceTerm::piecewise_constant({0.0, 1.0}, {pre_hit_value, 1.0});
    cfg.theta0 = GridFunction::sampled(cfg.grid, profile);
    cfg.rho = 1.0;
    cfg.reg = {1e-3, 0.0};
    cfg.t_final = 2.0;
    cfg.dt = 1e-4;
    for (int k = 0; k <= 2000; ++k)
        cfg.snapshot_times.push_back(k * 1e-3);
    std::vector<Expectation> expectations = {
        {CheckId::AnalyticTrace, 0.02, std::nullopt},
        {CheckId::HitTime, 0.01, 1.0},
        {CheckId::Persistence, cfg.reg.epsilon + 1e-5, 1.05},
        {CheckId::InequalityResidual, 1e-2 * cfg.rho, std::nullopt},
        {CheckId::EnergyRatio, 1.0 + 1e-9, std::nullopt},
    };
    return Scenario{"intro-analytic", std::move(cfg), std::move(expectations),
                    std::move(profile)};
}

/// Pure feedback: f = 0, kappa = 1, theta0 = -1 on Omega = (0,1) with
/// K = {v >= 0}. The distance decays exactly as 1 - rho t, so the hitting
/// time is 1/rho and the decay slope is -rho. dt sits at the contraction
/// boundary eps/(2 rho): the first sample inside the layer then lands
/// within 2 dt of the exact reaching time.
inline Scenario scenario_pure_feedback(double rho = 2.0) {
    if (!(rho > 0.0))
        throw std::invalid_argument("scenario_pure_feedback requires rho > 0");
    std::function<double(double)> profile = [](double) { return -1.0; };
    SimulationConfig cfg(build_grid(64, 1.0));
    cfg.obstacle = ObstacleSet::at_least(0.0);
    cfg.kappa = Diffusivity::constant(1.0);
    cfg.source = SourceTerm::zero();
    cfg.theta0 = GridFunction::sampled(cfg.grid, profile);
    cfg.rho = rho;
    cfg.reg = {1e-3, 0.0};
    cfg.dt = 0.5 * cfg.reg.epsilon / rho;
    cfg.t_final = 2.0 / rho + 0.5;
    const double dt = cfg.dt;
    std::vector<Expectation> expectations = {
        {CheckId::HitBound, 2.0 * dt, std::nullopt},
        {CheckId::HitTime, 2.0 * dt, 1.0 / rho},
        {CheckId::SlopeMatch, 0.02 * rho, -rho},
        {CheckId::SlopeBound, 0.05, std::nullopt},
        {CheckId::InequalityResidual, 1e-3, std::nullopt},
        {CheckId::EnergyRatio, 1.0 + 1e-9, std::nullopt},
        {CheckId::Persistence, cfg.reg.epsilon + 10.0 * cfg.fp_tol, std::nullopt},
        {CheckId::MonotoneDescent, 1e-10, std::nullopt},
    };
    return Scenario{"pure-feedback", std::move(cfg), std::move(expectations),
                    std::move(profile)};
}

/// Double obstacle: K = {-1 <= v <= 1} and theta0(x) = 3 cos(2 pi x)
/// violates both bounds. Diffusion and feedback act together; the run must
/// still hit within d_K(theta0)/rho and stay inside afterwards.
inline Scenario scenario_double_obstacle() {
    std::function<double(double)> profile = [](double x) {
        return 3.0 * std::cos(2.0 * std::numbers::pi * x);
    };
    SimulationConfig cfg(build_grid(64, 1.0));
    cfg.obstacle = ObstacleSet::bounded(-1.0, 1.0);
    cfg.kappa = Diffusivity::constant(1.0);
    cfg.source = SourceTerm::zero();
    cfg.theta0 = GridFunction::sampled(cfg.grid, profile);
    cfg.rho = 3.0;
    cfg.reg = {1e-3, 0.0};
    cfg.dt = 1e-4;
    cfg.t_final = 0.7;
    const double dt = cfg.dt;
    std::vector<Expectation> expectations = {
        {CheckId::HitBound, 2.0 * dt, std::nullopt},
        {CheckId::MonotoneDescent, 1e-10, std::nullopt},
        {CheckId::Persistence, cfg.reg.epsilon + 10.0 * cfg.fp_tol, std::nullopt},
        {CheckId::SlopeBound, 0.05, std::nullopt},
        {CheckId::InequalityResidual, 1e-2 * cfg.rho, std::nullopt},
        {CheckId::EnergyRatio, 1.0 + 1e-9, std::nullopt},
    };
    return Scenario{"double-obstacle", std::move(cfg), std::move(expectations),
                    std::move(profile)};
}

/// Degenerate diffusivity kappa(r) = |r|/(1+|r|) (inf kappa = 0) with the
/// parabolicity lift alpha. The data are spatially constant, so the
/// diffusion term vanishes identically and the reaching mechanism is
/// isolated from the lift: the hitting time must not depend on alpha.
inline Scenario scenario_degenerate_kappa(double alpha = 0.1) {
    if (!(alpha > 0.0))
        throw std::invalid_argument("scenario_degenerate_kappa requires alpha > 0");
    const double rho = 2.0;
    std::function<double(double)> profile = [](double) { return -1.0; };
    SimulationConfig cfg(build_grid(64, 1.0));
    cfg.obstacle = ObstacleSet::at_least(0.0);
    cfg.kappa = Diffusivity::named("saturating");
    cfg.source = SourceTerm::zero();
    cfg.theta0 = GridFunction::sampled(cfg.grid, profile);
    cfg.rho = rho;
    cfg.reg = {1e-3, alpha};
    cfg.dt = 0.5 * cfg.reg.epsilon / rho;
    cfg.t_final = 2.0 / rho + 0.5;
    const double dt = cfg.dt;
    std::vector<Expectation> expectations = {
        {CheckId::HitBound, 2.0 * dt, std::nullopt},
        {CheckId::HitTime, 2.0 * dt, 1.0 / rho},
        {CheckId::SlopeMatch, 0.02 * rho, -rho},
        {CheckId::SlopeBound, 0.05, std::nullopt},
        {CheckId::InequalityResidual, 1e-2 * rho, std::nullopt},
        {CheckId::EnergyRatio, 1.0 + 1e-9, std::nullopt},
        {CheckId::Persistence, cfg.reg.epsilon + 10.0 * cfg.fp_tol, std::nullopt},
        {CheckId::MonotoneDescent, 1e-10, std::nullopt},
    };
    return Scenario{"degenerate-kappa", std::move(cfg), std::move(expectations),
                    std::move(profile)};
}

inline std::vector<std::string> scenario_names() {
    return {"intro-analytic", "pure-feedback", "double-obstacle", "degenerate-kappa"};
}

inline std::optional<Scenario> scenario_by_name(const std::string& name) {
    if (name == "intro-analytic") return scenario_intro_analytic();
    if (name == "pure-feedback") return scenario_pure_feedback();
    if (name == "double-obstacle") return scenario_double_obstacle();
    if (name == "degenerate-kappa") return scenario_degenerate_kappa();
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Parameter sweeps
// ---------------------------------------------------------------------------

struct SweepRow {
    double value = 0.0;
    std::string status = "ok"; // ok | rejected | error
    std::string message;
    std::optional<HittingReport> hitting;
    double max_violation = 0.0;
    bool sigma_norm_ok = true;
    double worst_ratio = 0.0;
    std::optional<TrajectoryRecord> traj;
    std::optional<SimulationConfig> cfg;
};

struct SweepResult {
    std::string axis;
    std::vector<SweepRow> rows;
};

/// Derive a row config from the base scenario. For the rho and epsilon axes
/// dt is tightened to keep the inner loop contracting; the dt axis applies
/// values raw, so out-of-range rows are recorded as rejected. n_cells rows
/// re-sample the initial datum from the scenario's closed-form profile.
inline SimulationConfig sweep_config(const Scenario& base, const std::string& axis,
                                     double value) {
    SimulationConfig cfg = base.cfg;
    if (axis == "rho") {
        cfg.rho = value;
        cfg.dt = std::min(cfg.dt, 0.5 * cfg.reg.epsilon / value);
    } else if (axis == "epsilon") {
        cfg.reg.epsilon = value;
        cfg.dt = std::min(cfg.dt, 0.5 * value / cfg.rho);
    } else if (axis == "alpha") {
        cfg.reg.alpha = value;
    } else if (axis == "dt") {
        cfg.dt = value;
    } else if (axis == "n_cells") {
        if (!base.theta0_profile)
            throw std::invalid_argument(
                "n_cells sweep needs a scenario with a closed-form initial datum");
        const int n = static_cast<int>(std::lround(value));
        cfg.grid = build_grid(n, base.cfg.grid->domain_length());
        cfg.theta0 = GridFunction::sampled(cfg.grid, base.theta0_profile);
    } else {
        throw std::invalid_argument("unknown sweep axis '" + axis +
                                    "' (rho | epsilon | alpha | dt | n_cells)");
    }
    return cfg;
}

/// One simulate + verify per value. Rows are ordered by parameter value;
/// invalid configs and failed runs are recorded and the sweep continues.
inline SweepResult run_sweep(const Scenario& base, const std::string& axis,
                             std::vector<double> values) {
    if (axis != "rho" && axis != "epsilon" && axis != "alpha" && axis != "dt" &&
        axis != "n_cells")
        throw std::invalid_argument("unknown sweep axis '" + axis +
                                    "' (rho | epsilon | alpha | dt | n_cells)");
    if (values.empty())
        throw std::invalid_argument("sweep needs at least one value");
    std::sort(values.begin(), values.end());

    SweepResult result;
    result.axis = axis;
    for (double value : values) {
        SweepRow row;
        row.value = value;
        try {
            SimulationConfig cfg = sweep_config(base, axis, value);
            cfg.validate();
            TrajectoryRecord traj = simulate(cfg);
            row.hitting = detect_hitting(traj, cfg);
            const InequalityReport ineq = verify_differential_inequality(traj, cfg);
            row.max_violation = ineq.max_violation;
            row.sigma_norm_ok = ineq.sigma_norm_ok;
            row.worst_ratio = energy_diagnostic(traj, cfg);
            row.traj = std::move(traj);
            row.cfg = std::move(cfg);
        } catch (const ConfigError& e) {
            row.status = "rejected";
            row.message = e.what();
        } catch (const std::invalid_argument& e) {
            row.status = "rejected";
            row.message = e.what();
        } catch (const std::exception& e) {
            row.status = "error";
            row.message = e.what();
        }
        result.rows.push_back(std::move(row));
    }
    return result;
}

} // namespace setflow
