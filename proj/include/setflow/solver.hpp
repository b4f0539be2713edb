#pragma once

#include <cmath>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <utility>
#include <vector>

#include "config.hpp"
#include "diffusion.hpp"
#include "grid.hpp"
#include "obstacle.hpp"

namespace setflow {

/// One recorded state of a run.
struct TrajectorySample {
    double time = 0.0;
    double d_k = 0.0;        // distance to the constraint set
    double d_eps = 0.0;      // Moreau envelope of the distance
    double sigma_norm = 0.0; // ||Yosida gradient||_H at this state
    double theta_norm = 0.0; // ||theta||_H
    int fp_iters = 0;        // inner solves spent on this step (0 for the initial sample)
};

struct TrajectoryRecord {
    std::vector<TrajectorySample> samples;
    std::optional<GridFunction> final_state;
    std::vector<std::pair<double, GridFunction>> snapshots;
    double dt = 0.0; // sample spacing

    bool empty() const { return samples.empty(); }
};

struct StepResult {
    GridFunction theta;
    GridFunction sigma;
    int iterations;
};

/// Inner fixed-point loop failed to reach fp_tol within fp_max_iter solves.
/// Usually means dt is too large relative to epsilon/rho.
class FixedPointError : public std::runtime_error {
public:
    FixedPointError(double last_residual, int iterations, long step_index = -1)
        : std::runtime_error(format(last_residual, iterations, step_index)),
          last_residual_(last_residual),
          iterations_(iterations),
          step_index_(step_index) {}

    double last_residual() const { return last_residual_; }
    int iterations() const { return iterations_; }
    long step_index() const { return step_index_; }

private:
    static std::string format(double residual, int iterations, long step_index) {
        std::ostringstream os;
        os << "fixed-point iteration did not converge";
        if (step_index >= 0)
            os << " at step " << step_index;
        os << ": residual " << residual << " after " << iterations
           << " iterations (dt too large relative to epsilon/rho?)";
        return os.str();
    }

    double last_residual_;
    int iterations_;
    long step_index_;
};

/// One semi-implicit step from theta_n to theta_{n+1}:
///   (theta_{n+1} - theta_n)/dt + A(kappa_alpha(theta_n)) theta_{n+1}
///     + rho * Dd_eps(theta_{n+1}) = f(t_next),
/// with the diffusion coefficient lagged to theta_n and the implicit Yosida
/// term resolved by fixed-point iteration. The iteration composes the
/// (1/eps)-Lipschitz Yosida gradient with a nonexpansive solve, so it
/// contracts with factor dt*rho/eps (kept <= 0.5 by config validation).
/// Returns theta_{n+1}, the converged sigma = Dd_eps(theta_{n+1}) and the
/// number of solves.
inline StepResult step(const GridFunction& theta_n, double t_next,
                       const SimulationConfig& cfg) {
    DiffusionOperator A =
        assemble_diffusion(face_conductivity(theta_n, cfg.kappa, cfg.reg.alpha), cfg.grid);
    const double inv_dt = 1.0 / cfg.dt;
    const double f_value = cfg.source.value_at(t_next);

    GridFunction base(cfg.grid);
    for (int i = 0; i < base.size(); ++i)
        base[i] = theta_n[i] * inv_dt + f_value;

    GridFunction x = theta_n;
    GridFunction rhs(cfg.grid);
    int iterations = 0;
    while (true) {
        ++iterations;
        const GridFunction sigma = yosida_gradient(x, cfg.obstacle, cfg.reg.epsilon);
        for (int i = 0; i < rhs.size(); ++i)
            rhs[i] = base[i] - cfg.rho * sigma[i];
        GridFunction x_next = solve_shifted_system(A, inv_dt, rhs);
        const double change = diff_norm_h(x_next, x);
        x = std::move(x_next);
        if (change <= cfg.fp_tol)
            break;
        if (iterations >= cfg.fp_max_iter)
            throw FixedPointError(change, iterations);
    }

    GridFunction sigma = yosida_gradient(x, cfg.obstacle, cfg.reg.epsilon);
    return {std::move(x), std::move(sigma), iterations};
}

namespace detail {
inline void push_sample(TrajectoryRecord& record, double time, const GridFunction& theta,
                        const GridFunction& sigma, int iterations,
                        const SimulationConfig& cfg, long step_index) {
    TrajectorySample s;
    s.time = time;
    s.d_k = distance(theta, cfg.obstacle);
    s.d_eps = envelope_from_distance(s.d_k, cfg.reg.epsilon);
    s.sigma_norm = norm_h(sigma);
    s.theta_norm = norm_h(theta);
    s.fp_iters = iterations;
    if (!std::isfinite(s.d_k) || !std::isfinite(s.sigma_norm) || !std::isfinite(s.theta_norm)) {
        std::ostringstream os;
        os << "non-finite state at step " << step_index;
        throw std::runtime_error(os.str());
    }
    record.samples.push_back(s);
}
} // namespace detail

/// Run N = round(t_final/dt) steps from theta0, recording the scalar
/// diagnostics at every sample and full fields at the requested snapshot
/// times. Deterministic given the config.
inline TrajectoryRecord simulate(const SimulationConfig& cfg) {
    cfg.validate();
    const long n_steps = cfg.n_steps();

    std::set<long> snapshot_steps;
    for (double t : cfg.snapshot_times) {
        long k = std::lround(t / cfg.dt);
        if (k < 0) k = 0;
        if (k > n_steps) k = n_steps;
        snapshot_steps.insert(k);
    }

    TrajectoryRecord record;
    record.dt = cfg.dt;
    record.samples.reserve(static_cast<std::size_t>(n_steps) + 1);

    GridFunction theta = cfg.theta0;
    detail::push_sample(record, 0.0, theta,
                        yosida_gradient(theta, cfg.obstacle, cfg.reg.epsilon), 0, cfg, 0);
    if (snapshot_steps.count(0))
        record.snapshots.emplace_back(0.0, theta);

    for (long n = 0; n < n_steps; ++n) {
        const double t_next = static_cast<double>(n + 1) * cfg.dt;
        StepResult result = [&] {
            try {
                return step(theta, t_next, cfg);
            } catch (const FixedPointError& e) {
                throw FixedPointError(e.last_residual(), e.iterations(), n);
            }
        }();
        theta = std::move(result.theta);
        detail::push_sample(record, t_next, theta, result.sigma, result.iterations, cfg, n + 1);
        if (snapshot_steps.count(n + 1))
            record.snapshots.emplace_back(t_next, theta);
    }

    record.final_state = std::move(theta);
    return record;
}

} // namespace setflow
