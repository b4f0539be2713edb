#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>

#include "grid.hpp"

namespace setflow {

/// Closed interval constraint I = [lower, upper]; either side may be absent
/// (one-sided obstacle). The induced constraint set in the weighted l2 space
/// is K = { v : v(x) in I for every cell }. A fully unbounded interval is
/// rejected: with K equal to the whole space the distance vanishes
/// identically and every reaching statement is vacuous.
class ObstacleSet {
public:
    static ObstacleSet interval(std::optional<double> lower, std::optional<double> upper) {
        if (!lower && !upper)
            throw std::invalid_argument(
                "trivial constraint set: at least one finite obstacle bound is required");
        if (lower && !std::isfinite(*lower))
            throw std::invalid_argument(
                "obstacle.lower must be finite (omit it for an unbounded side)");
        if (upper && !std::isfinite(*upper))
            throw std::invalid_argument(
                "obstacle.upper must be finite (omit it for an unbounded side)");
        if (lower && upper && *lower > *upper)
            throw std::invalid_argument("empty obstacle interval: lower > upper");
        return ObstacleSet(lower, upper);
    }

    static ObstacleSet bounded(double lower, double upper) { return interval(lower, upper); }
    static ObstacleSet at_least(double lower) { return interval(lower, std::nullopt); }
    static ObstacleSet at_most(double upper) { return interval(std::nullopt, upper); }

    std::optional<double> lower() const { return lower_; }
    std::optional<double> upper() const { return upper_; }

    /// Pointwise projection p_I.
    double clamp(double r) const {
        if (lower_ && r < *lower_) return *lower_;
        if (upper_ && r > *upper_) return *upper_;
        return r;
    }

    /// Pointwise residual q_I = identity - p_I.
    double pointwise_residual(double r) const { return r - clamp(r); }

    bool contains(double r) const { return clamp(r) == r; }

    std::string describe() const {
        std::ostringstream os;
        os << '[';
        if (lower_) os << *lower_; else os << "-inf";
        os << ", ";
        if (upper_) os << *upper_; else os << "inf";
        os << ']';
        return os.str();
    }

private:
    ObstacleSet(std::optional<double> lower, std::optional<double> upper)
        : lower_(lower), upper_(upper) {}

    std::optional<double> lower_;
    std::optional<double> upper_;
};

/// Smoothing parameters: epsilon is the Yosida parameter of the feedback
/// term, alpha the parabolicity lift applied to a degenerate diffusivity.
struct RegularizationParams {
    double epsilon = 1e-3;
    double alpha = 0.0;

    void validate() const {
        if (!std::isfinite(epsilon) || !(epsilon > 0.0 && epsilon < 1.0)) {
            std::ostringstream os;
            os << "RegularizationParams requires 0 < epsilon < 1, got epsilon = " << epsilon;
            throw std::invalid_argument(os.str());
        }
        if (!std::isfinite(alpha) || !(alpha >= 0.0 && alpha < 1.0)) {
            std::ostringstream os;
            os << "RegularizationParams requires 0 <= alpha < 1, got alpha = " << alpha;
            throw std::invalid_argument(os.str());
        }
    }
};

inline GridFunction project(const GridFunction& v, const ObstacleSet& K) {
    GridFunction p(v.grid());
    for (int i = 0; i < v.size(); ++i)
        p[i] = K.clamp(v[i]);
    return p;
}

inline GridFunction residual(const GridFunction& v, const ObstacleSet& K) {
    GridFunction q(v.grid());
    for (int i = 0; i < v.size(); ++i)
        q[i] = K.pointwise_residual(v[i]);
    return q;
}

/// Distance to the constraint set: d_K(v) = ||v - P_K v||_H.
inline double distance(const GridFunction& v, const ObstacleSet& K) {
    return norm_h(residual(v, K));
}

/// Gradient of d_K outside K: (v - P_K v) / d_K(v), a unit-norm field.
/// On K the subdifferential is multivalued and this is a hard error;
/// the solver always goes through yosida_gradient instead.
inline GridFunction distance_gradient(const GridFunction& v, const ObstacleSet& K) {
    GridFunction q = residual(v, K);
    const double d = norm_h(q);
    if (!(d > 0.0))
        throw std::domain_error("distance gradient undefined on K; use yosida_gradient");
    GridFunction g(v.grid());
    for (int i = 0; i < v.size(); ++i)
        g[i] = q[i] / d;
    return g;
}

/// Yosida regularization of the distance subdifferential:
/// sigma = (v - P_K v) / max(eps, d_K(v)). Total, 1/eps-Lipschitz,
/// norm <= 1, and exactly unit norm whenever d_K(v) >= eps.
inline GridFunction yosida_gradient(const GridFunction& v, const ObstacleSet& K, double eps) {
    if (!(eps > 0.0))
        throw std::invalid_argument("yosida_gradient requires eps > 0");
    GridFunction q = residual(v, K);
    const double scale = 1.0 / std::max(eps, norm_h(q));
    for (int i = 0; i < q.size(); ++i)
        q[i] *= scale;
    return q;
}

/// Moreau envelope of d_K as a function of the distance:
/// integral over [0, d] of min(s/eps, 1).
inline double envelope_from_distance(double d, double eps) {
    return d <= eps ? d * d / (2.0 * eps) : d - 0.5 * eps;
}

inline double moreau_envelope(const GridFunction& v, const ObstacleSet& K, double eps) {
    if (!(eps > 0.0))
        throw std::invalid_argument("moreau_envelope requires eps > 0");
    return envelope_from_distance(distance(v, K), eps);
}

/// Brute-force evaluation of the infimal convolution
///   inf_z  d_K(z) + ||z - v||^2 / (2 eps).
/// Any minimizer outside K projects to P_K v, so the infimum is attained on
/// the segment z(t) = v + t (P_K v - v), t in [0, 1]. The segment is scanned
/// on 10^4 points and the best bracket refined by golden section. Test
/// oracle for moreau_envelope; never used by the solver.
inline double moreau_oracle(const GridFunction& v, const ObstacleSet& K, double eps) {
    if (!(eps > 0.0))
        throw std::invalid_argument("moreau_oracle requires eps > 0");
    const GridFunction pv = project(v, K);

    GridFunction z(v.grid());
    const auto objective = [&](double t) {
        for (int i = 0; i < v.size(); ++i)
            z[i] = v[i] + t * (pv[i] - v[i]);
        double fit = 0.0;
        for (int i = 0; i < v.size(); ++i) {
            const double d = z[i] - v[i];
            fit += d * d;
        }
        fit *= v.grid()->cell_width();
        return distance(z, K) + fit / (2.0 * eps);
    };

    constexpr int kScan = 10000;
    double best = objective(0.0);
    int best_j = 0;
    for (int j = 1; j <= kScan; ++j) {
        const double val = objective(static_cast<double>(j) / kScan);
        if (val < best) {
            best = val;
            best_j = j;
        }
    }

    double lo = static_cast<double>(std::max(0, best_j - 1)) / kScan;
    double hi = static_cast<double>(std::min(kScan, best_j + 1)) / kScan;
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - inv_phi * (hi - lo);
    double x2 = lo + inv_phi * (hi - lo);
    double f1 = objective(x1);
    double f2 = objective(x2);
    for (int it = 0; it < 80; ++it) {
        if (f1 < f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = objective(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = objective(x2);
        }
    }
    return std::min(best, std::min(f1, f2));
}

} // namespace setflow
