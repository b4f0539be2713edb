#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "grid.hpp"

namespace setflow {

/// Spatially constant source f(t). Profiles are immutable: the disturbance
/// level rho_star is always recomputed from the profile, never cached.
class SourceTerm {
public:
    enum class Kind { Zero, Constant, PiecewiseConstant, PiecewiseLinear, Tabulated };

    static SourceTerm zero() { return SourceTerm(Kind::Zero); }

    static SourceTerm constant(double value) {
        require_finite(value);
        SourceTerm f(Kind::Constant);
        f.values_ = {value};
        return f;
    }

    /// Right-continuous step profile: f(t) = values[k] for t in
    /// [times[k], times[k+1]), extended by values.front() before times[0]
    /// and values.back() after times.back(). Right continuity puts a jump
    /// time itself on the new level.
    static SourceTerm piecewise_constant(std::vector<double> times, std::vector<double> values) {
        SourceTerm f(Kind::PiecewiseConstant);
        f.adopt_table(std::move(times), std::move(values));
        return f;
    }

    /// Piecewise-linear interpolation of (times, values), clamped outside.
    static SourceTerm piecewise_linear(std::vector<double> times, std::vector<double> values) {
        SourceTerm f(Kind::PiecewiseLinear);
        f.adopt_table(std::move(times), std::move(values));
        return f;
    }

    /// One value per time step: f(n*dt) = step_values[n-1], clamped to the
    /// table ends.
    static SourceTerm tabulated(std::vector<double> step_values, double dt) {
        if (step_values.empty())
            throw std::invalid_argument("tabulated source needs at least one value");
        if (!(dt > 0.0))
            throw std::invalid_argument("tabulated source needs dt > 0");
        for (double v : step_values) require_finite(v);
        SourceTerm f(Kind::Tabulated);
        f.values_ = std::move(step_values);
        f.table_dt_ = dt;
        return f;
    }

    Kind kind() const { return kind_; }

    double value_at(double t) const {
        switch (kind_) {
        case Kind::Zero:
            return 0.0;
        case Kind::Constant:
            return values_[0];
        case Kind::PiecewiseConstant: {
            // last knot with times[k] <= t
            auto it = std::upper_bound(times_.begin(), times_.end(), t);
            if (it == times_.begin()) return values_.front();
            return values_[static_cast<std::size_t>(it - times_.begin()) - 1];
        }
        case Kind::PiecewiseLinear: {
            if (t <= times_.front()) return values_.front();
            if (t >= times_.back()) return values_.back();
            auto it = std::upper_bound(times_.begin(), times_.end(), t);
            const std::size_t k = static_cast<std::size_t>(it - times_.begin());
            const double t0 = times_[k - 1], t1 = times_[k];
            const double w = (t - t0) / (t1 - t0);
            return (1.0 - w) * values_[k - 1] + w * values_[k];
        }
        case Kind::Tabulated: {
            long k = std::lround(t / table_dt_);
            k = std::clamp(k, 1L, static_cast<long>(values_.size()));
            return values_[static_cast<std::size_t>(k - 1)];
        }
        }
        return 0.0;
    }

    /// ||f(t)||_H for the spatially constant profile: |f(t)| sqrt(|Omega|).
    double norm_h_at(double t, const SpatialGrid& grid) const {
        return std::abs(value_at(t)) * std::sqrt(grid.domain_length());
    }

    /// Discrete disturbance level: max over the step evaluation times
    /// t_1..t_N of ||f(t_n)||_H, an upper reading of the essential sup.
    double rho_star(const SpatialGrid& grid, double t_final, double dt) const {
        if (kind_ == Kind::Zero)
            return 0.0;
        if (!(dt > 0.0))
            return 0.0;
        const long n_steps = std::lround(t_final / dt);
        double worst = 0.0;
        for (long n = 1; n <= n_steps; ++n)
            worst = std::max(worst, std::abs(value_at(static_cast<double>(n) * dt)));
        return worst * std::sqrt(grid.domain_length());
    }

private:
    explicit SourceTerm(Kind kind) : kind_(kind) {}

    static void require_finite(double v) {
        if (!std::isfinite(v))
            throw std::invalid_argument("source values must be finite");
    }

    void adopt_table(std::vector<double> times, std::vector<double> values) {
        if (times.empty() || times.size() != values.size())
            throw std::invalid_argument("source table needs matching nonempty times and values");
        for (std::size_t i = 0; i < times.size(); ++i) {
            require_finite(times[i]);
            require_finite(values[i]);
            if (i > 0 && !(times[i] > times[i - 1]))
                throw std::invalid_argument("source table times must be strictly increasing");
        }
        times_ = std::move(times);
        values_ = std::move(values);
    }

    Kind kind_;
    std::vector<double> times_;
    std::vector<double> values_;
    double table_dt_ = 0.0;
};

} // namespace setflow
