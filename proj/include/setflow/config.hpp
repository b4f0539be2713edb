#pragma once

#include <cmath>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "diffusion.hpp"
#include "grid.hpp"
#include "obstacle.hpp"
#include "source.hpp"

namespace setflow {

/// Configuration or input-file error; the key names the offending setting.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string key, const std::string& message)
        : std::runtime_error(key + ": " + message), key_(std::move(key)) {}

    const std::string& key() const { return key_; }

private:
    std::string key_;
};

/// Full problem description for one run. Immutable once validated.
struct SimulationConfig {
    std::shared_ptr<const SpatialGrid> grid;
    ObstacleSet obstacle;
    Diffusivity kappa;
    SourceTerm source;
    GridFunction theta0;
    double rho = 1.0;
    RegularizationParams reg;
    double t_final = 1.0;
    double dt = 1e-4;
    double fp_tol = 1e-12;
    int fp_max_iter = 200;
    /// Hitting threshold for the verifiers; defaults to epsilon, the width
    /// of the layer the smoothed dynamics certify.
    std::optional<double> hit_tol_override;
    /// Times at which full fields are stored in the trajectory record.
    std::vector<double> snapshot_times;

    explicit SimulationConfig(std::shared_ptr<const SpatialGrid> g)
        : grid(std::move(g)),
          obstacle(ObstacleSet::at_least(0.0)),
          kappa(Diffusivity::constant(1.0)),
          source(SourceTerm::zero()),
          theta0(grid) {}

    double hit_tol() const { return hit_tol_override.value_or(reg.epsilon); }

    long n_steps() const { return std::lround(t_final / dt); }

    void validate() const {
        if (!grid)
            throw ConfigError("n_cells", "grid is not set");
        if (!std::isfinite(reg.epsilon) || !(reg.epsilon > 0.0 && reg.epsilon < 1.0)) {
            std::ostringstream os;
            os << "RegularizationParams requires 0 < epsilon < 1, got " << reg.epsilon;
            throw ConfigError("epsilon", os.str());
        }
        if (!std::isfinite(reg.alpha) || !(reg.alpha >= 0.0 && reg.alpha < 1.0)) {
            std::ostringstream os;
            os << "RegularizationParams requires 0 <= alpha < 1, got " << reg.alpha;
            throw ConfigError("alpha", os.str());
        }
        if (!std::isfinite(rho) || !(rho > 0.0))
            throw ConfigError("rho", "feedback gain must be positive");
        if (!std::isfinite(dt) || !(dt > 0.0))
            throw ConfigError("dt", "time step must be positive");
        if (!std::isfinite(t_final) || t_final < 0.0)
            throw ConfigError("t_final", "horizon must be nonnegative");
        const double ratio = dt * rho / reg.epsilon;
        if (ratio > 0.5 * (1.0 + 1e-12)) {
            std::ostringstream os;
            os << "dt*rho/epsilon = " << ratio
               << " > 0.5; the inner fixed-point iteration would not contract "
                  "(reduce dt or enlarge epsilon)";
            throw ConfigError("dt", os.str());
        }
        if (kappa.kappa_star() == 0.0 && !(reg.alpha > 0.0))
            throw ConfigError("alpha",
                              "degenerate diffusivity (inf kappa = 0) requires alpha > 0");
        if (!theta0.grid() || !theta0.grid()->compatible_with(*grid))
            throw ConfigError("theta0", "initial datum lives on a different grid");
        if (!theta0.all_finite())
            throw ConfigError("theta0", "initial datum has non-finite entries");
        if (!std::isfinite(fp_tol) || !(fp_tol > 0.0))
            throw ConfigError("fp_tol", "fixed-point tolerance must be positive");
        if (fp_max_iter < 1)
            throw ConfigError("fp_max_iter", "must allow at least one iteration");
        if (hit_tol_override && !(*hit_tol_override > 0.0))
            throw ConfigError("hit_tol", "hitting tolerance must be positive");
    }
};

} // namespace setflow
