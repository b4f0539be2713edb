#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "config.hpp"
#include "solver.hpp"

namespace setflow {

/// Outcome of the hitting analysis of one trajectory.
struct HittingReport {
    bool hit = false;
    std::optional<double> t_star;    // first sample time with d_K <= hit_tol
    std::optional<double> bound;     // d_K(theta0) / (rho - rho*), when rho > rho*
    std::optional<double> slope_fit; // least-squares slope of d_K on the pre-hitting window
    double max_violation = 0.0;      // largest positive residual of the decay inequality
};

/// Outcome of the discrete differential-inequality check.
struct InequalityReport {
    double max_violation = 0.0;
    /// Whether ||sigma|| >= 1 - 10 fp_tol / eps held at every sample with
    /// d_eps > eps/2 (the active set of the decay mechanism).
    bool sigma_norm_ok = true;
    double worst_sigma_norm = std::numeric_limits<double>::infinity();
    double sigma_norm_threshold = 0.0;
};

namespace detail {
/// max(0, max_n r_n) with
///   r_n = (psi_{n+1} - psi_n)/dt + rho ||sigma_{n+1}||^2 - ||f(t_{n+1})||_H,
/// the discrete residual of the decay inequality.
inline double inequality_max_violation(const TrajectoryRecord& traj,
                                       const SimulationConfig& cfg) {
    const auto& s = traj.samples;
    if (s.size() < 2)
        return 0.0;
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n + 1 < s.size(); ++n) {
        const double psi_rate = (s[n + 1].d_eps - s[n].d_eps) / traj.dt;
        const double sig = s[n + 1].sigma_norm;
        const double f_norm = cfg.source.norm_h_at(s[n + 1].time, *cfg.grid);
        worst = std::max(worst, psi_rate + cfg.rho * sig * sig - f_norm);
    }
    return std::max(0.0, worst);
}
} // namespace detail

/// First-crossing detection plus the reaching-time bound and the decay
/// slope. The pre-hitting window for the slope fit is the set of samples
/// with d_K > epsilon: inside the epsilon-layer the decay law changes
/// regime, so those samples are excluded.
inline HittingReport detect_hitting(const TrajectoryRecord& traj,
                                    const SimulationConfig& cfg) {
    if (traj.empty())
        throw std::invalid_argument("detect_hitting: empty trajectory");
    const auto& s = traj.samples;
    HittingReport report;

    const double hit_tol = cfg.hit_tol();
    for (const auto& sample : s) {
        if (sample.d_k <= hit_tol) {
            report.hit = true;
            report.t_star = sample.time;
            break;
        }
    }

    const double rho_star = cfg.source.rho_star(*cfg.grid, s.back().time, traj.dt);
    if (cfg.rho > rho_star)
        report.bound = s.front().d_k / (cfg.rho - rho_star);

    // least squares on (t_n, d_K(theta_n)) over the pre-hitting window
    double sum_t = 0.0, sum_d = 0.0, sum_tt = 0.0, sum_td = 0.0;
    long count = 0;
    for (const auto& sample : s) {
        if (sample.d_k > cfg.reg.epsilon) {
            sum_t += sample.time;
            sum_d += sample.d_k;
            sum_tt += sample.time * sample.time;
            sum_td += sample.time * sample.d_k;
            ++count;
        }
    }
    if (count >= 2) {
        const double m = static_cast<double>(count);
        const double denom = m * sum_tt - sum_t * sum_t;
        if (denom > 0.0)
            report.slope_fit = (m * sum_td - sum_t * sum_d) / denom;
    }

    report.max_violation = detail::inequality_max_violation(traj, cfg);
    return report;
}

/// Checks the step-wise decay inequality residuals and, at every sample in
/// the active set d_eps > eps/2, the unit-norm condition on sigma.
inline InequalityReport verify_differential_inequality(const TrajectoryRecord& traj,
                                                       const SimulationConfig& cfg) {
    InequalityReport report;
    report.sigma_norm_threshold = 1.0 - 10.0 * cfg.fp_tol / cfg.reg.epsilon;
    if (traj.samples.size() < 2)
        return report;
    report.max_violation = detail::inequality_max_violation(traj, cfg);
    const double half_eps = 0.5 * cfg.reg.epsilon;
    for (std::size_t n = 1; n < traj.samples.size(); ++n) {
        const auto& sample = traj.samples[n];
        if (sample.d_eps > half_eps) {
            report.worst_sigma_norm = std::min(report.worst_sigma_norm, sample.sigma_norm);
            if (sample.sigma_norm < report.sigma_norm_threshold)
                report.sigma_norm_ok = false;
        }
    }
    return report;
}

/// Discrete analog of the testing-by-theta energy estimate: per step,
///   1/2 ||theta_{n+1}||^2 <= 1/2 ||theta_n||^2
///     + dt (||f(t_{n+1})|| + rho) ||theta_{n+1}|| + 10 fp_tol ||theta_{n+1}||.
/// Returns the worst left/right ratio; anything above 1 flags a scheme bug.
inline double energy_diagnostic(const TrajectoryRecord& traj, const SimulationConfig& cfg) {
    const auto& s = traj.samples;
    double worst = 0.0;
    for (std::size_t n = 0; n + 1 < s.size(); ++n) {
        const double next_norm = s[n + 1].theta_norm;
        const double lhs = 0.5 * next_norm * next_norm;
        const double f_norm = cfg.source.norm_h_at(s[n + 1].time, *cfg.grid);
        const double rhs = 0.5 * s[n].theta_norm * s[n].theta_norm +
                           traj.dt * (f_norm + cfg.rho) * next_norm +
                           10.0 * cfg.fp_tol * next_norm;
        double ratio;
        if (rhs == 0.0)
            ratio = lhs == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
        else
            ratio = lhs / rhs;
        worst = std::max(worst, ratio);
    }
    return worst;
}

} // namespace setflow
