#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "grid.hpp"

namespace setflow {

/// Solution-dependent conductivity kappa together with its range data
/// kappa_* = inf kappa and kappa^* = sup kappa. Non-constant entries come
/// from a fixed registry restricted to continuous, nonnegative, bounded
/// functions that vanish at most on a set with empty interior (so the
/// primitive G is strictly increasing).
class Diffusivity {
public:
    static Diffusivity constant(double value) {
        if (!std::isfinite(value) || value < 0.0)
            throw std::invalid_argument("kappa.value must be nonnegative and finite");
        Diffusivity k;
        k.name_ = "constant";
        k.value_ = value;
        k.kappa_star_ = value;
        k.kappa_sup_ = value;
        return k;
    }

    static Diffusivity named(const std::string& id);
    static std::vector<std::string> registry_names();

    double operator()(double r) const { return fn_ ? fn_(r) : value_; }

    /// Regularized coefficient kappa_alpha: the lift is applied only in the
    /// degenerate case inf kappa = 0; a uniformly parabolic kappa is kept.
    double regularized(double r, double alpha) const {
        return (*this)(r) + (kappa_star_ == 0.0 ? alpha : 0.0);
    }

    double kappa_star() const { return kappa_star_; }
    double kappa_sup() const { return kappa_sup_; }
    bool is_constant() const { return !fn_; }
    const std::string& name() const { return name_; }
    double constant_value() const { return value_; }

private:
    Diffusivity() = default;

    std::string name_;
    std::function<double(double)> fn_;   // empty for the constant kind
    double value_ = 0.0;
    double kappa_star_ = 0.0;
    double kappa_sup_ = 0.0;
};

namespace detail {
struct KappaEntry {
    std::function<double(double)> fn;
    double kappa_star;
    double kappa_sup;
};

inline const std::map<std::string, KappaEntry>& kappa_registry() {
    static const std::map<std::string, KappaEntry> registry = {
        {"saturating",
         {[](double r) { const double a = std::abs(r); return a / (1.0 + a); }, 0.0, 1.0}},
        {"gaussian", {[](double r) { return std::exp(-r * r); }, 0.0, 1.0}},
    };
    return registry;
}
} // namespace detail

inline Diffusivity Diffusivity::named(const std::string& id) {
    const auto& registry = detail::kappa_registry();
    const auto it = registry.find(id);
    if (it == registry.end()) {
        std::ostringstream os;
        os << "unknown kappa.kind '" << id << "'; known kinds: constant";
        for (const auto& [name, entry] : registry)
            os << ", " << name;
        throw std::invalid_argument(os.str());
    }
    Diffusivity k;
    k.name_ = id;
    k.fn_ = it->second.fn;
    k.kappa_star_ = it->second.kappa_star;
    k.kappa_sup_ = it->second.kappa_sup;
    return k;
}

inline std::vector<std::string> Diffusivity::registry_names() {
    std::vector<std::string> names;
    for (const auto& [name, entry] : detail::kappa_registry())
        names.push_back(name);
    return names;
}

/// Interface conductivities: the value on the face between cells i and i+1
/// is the arithmetic mean of kappa_alpha at the two adjacent cell values.
/// The 1/h^2 scaling happens at assembly, not here.
inline std::vector<double> face_conductivity(const GridFunction& theta,
                                             const Diffusivity& kappa, double alpha) {
    if (!std::isfinite(alpha) || alpha < 0.0)
        throw std::invalid_argument("alpha must be nonnegative");
    const int n = theta.size();
    std::vector<double> faces(static_cast<std::size_t>(n - 1));
    double left = kappa.regularized(theta[0], alpha);
    for (int i = 0; i + 1 < n; ++i) {
        const double right = kappa.regularized(theta[i + 1], alpha);
        faces[static_cast<std::size_t>(i)] = 0.5 * (left + right);
        left = right;
    }
    return faces;
}

/// Conservative finite-volume operator for -d/dx(c(x) d/dx) with zero-flux
/// ends. Stored as the scaled couplings o_i = c_{i+1/2} / h^2; the matrix is
/// symmetric tridiagonal with off-diagonal entries -o_i and diagonal
/// o_{i-1} + o_i, so every row sums to zero and constants lie in the kernel.
class DiffusionOperator {
public:
    DiffusionOperator(std::vector<double> face_conductivities,
                      std::shared_ptr<const SpatialGrid> grid)
        : grid_(std::move(grid)), faces_(std::move(face_conductivities)) {
        const int n = grid_->n_cells();
        if (static_cast<int>(faces_.size()) != n - 1)
            throw std::invalid_argument("expected n_cells - 1 face conductivities");
        for (double c : faces_)
            if (!std::isfinite(c) || c < 0.0)
                throw std::invalid_argument("face conductivities must be nonnegative");
        const double inv_h2 = 1.0 / (grid_->cell_width() * grid_->cell_width());
        couplings_.resize(faces_.size());
        for (std::size_t i = 0; i < faces_.size(); ++i)
            couplings_[i] = faces_[i] * inv_h2;
        diag_.assign(static_cast<std::size_t>(n), 0.0);
        for (int i = 0; i < n; ++i) {
            const double left = i > 0 ? couplings_[static_cast<std::size_t>(i - 1)] : 0.0;
            const double right = i < n - 1 ? couplings_[static_cast<std::size_t>(i)] : 0.0;
            diag_[static_cast<std::size_t>(i)] = left + right;
        }
    }

    int size() const { return grid_->n_cells(); }
    const std::shared_ptr<const SpatialGrid>& grid() const { return grid_; }
    const std::vector<double>& face_conductivities() const { return faces_; }
    /// Off-diagonal magnitudes o_i = c_{i+1/2} / h^2 (the matrix entry is -o_i).
    const std::vector<double>& couplings() const { return couplings_; }
    const std::vector<double>& diagonal() const { return diag_; }

    /// Matrix-vector product in flux form, which keeps the discrete mass
    /// identity sum_i w_i (A theta)_i at rounding level.
    GridFunction apply(const GridFunction& theta) const {
        if (!theta.grid()->compatible_with(*grid_))
            throw std::invalid_argument("grid mismatch in DiffusionOperator::apply");
        const int n = size();
        GridFunction out(theta.grid());
        double flux_left = 0.0; // o_{i-1} (theta_i - theta_{i-1}), zero at the boundary
        for (int i = 0; i < n; ++i) {
            const double flux_right =
                i < n - 1 ? couplings_[static_cast<std::size_t>(i)] * (theta[i + 1] - theta[i])
                          : 0.0;
            out[i] = flux_left - flux_right;
            flux_left = flux_right;
        }
        return out;
    }

private:
    std::shared_ptr<const SpatialGrid> grid_;
    std::vector<double> faces_;
    std::vector<double> couplings_;
    std::vector<double> diag_;
};

inline DiffusionOperator assemble_diffusion(std::vector<double> face_conductivities,
                                            std::shared_ptr<const SpatialGrid> grid) {
    return DiffusionOperator(std::move(face_conductivities), std::move(grid));
}

/// Direct solve of (shift I + A) x = rhs by Thomas elimination. The matrix
/// is strictly diagonally dominant for shift > 0, so no pivoting is needed.
/// The solution is checked against the contract ||(shift I + A)x - rhs||_H
/// <= 1e-10 ||rhs||_H before being returned.
inline GridFunction solve_shifted_system(const DiffusionOperator& A, double shift,
                                         const GridFunction& rhs) {
    if (!std::isfinite(shift) || !(shift > 0.0))
        throw std::invalid_argument("solve_shifted_system requires shift > 0");
    if (!rhs.grid()->compatible_with(*A.grid()))
        throw std::invalid_argument("grid mismatch in solve_shifted_system");

    const int n = A.size();
    const auto& o = A.couplings();
    const auto& diag = A.diagonal();

    std::vector<double> upper(static_cast<std::size_t>(n - 1));
    std::vector<double> work(static_cast<std::size_t>(n));
    double pivot = shift + diag[0];
    upper[0] = -o[0] / pivot;
    work[0] = rhs[0] / pivot;
    for (int i = 1; i < n; ++i) {
        const double sub = -o[static_cast<std::size_t>(i - 1)];
        pivot = shift + diag[static_cast<std::size_t>(i)] -
                sub * upper[static_cast<std::size_t>(i - 1)];
        if (i < n - 1)
            upper[static_cast<std::size_t>(i)] = -o[static_cast<std::size_t>(i)] / pivot;
        work[static_cast<std::size_t>(i)] =
            (rhs[i] - sub * work[static_cast<std::size_t>(i - 1)]) / pivot;
    }

    GridFunction x(rhs.grid());
    x[n - 1] = work[static_cast<std::size_t>(n - 1)];
    for (int i = n - 2; i >= 0; --i)
        x[i] = work[static_cast<std::size_t>(i)] -
               upper[static_cast<std::size_t>(i)] * x[i + 1];

    GridFunction res = A.apply(x);
    for (int i = 0; i < n; ++i)
        res[i] = shift * x[i] + res[i] - rhs[i];
    const double rel = norm_h(res);
    if (rel > 1e-10 * norm_h(rhs)) {
        std::ostringstream os;
        os << "shifted tridiagonal solve missed its residual contract: "
           << rel << " > 1e-10 * ||rhs||";
        throw std::runtime_error(os.str());
    }
    return x;
}

/// Primitive of the regularized conductivity, G_alpha(r) = integral over
/// [0, r] of kappa_alpha. Exact for constant kappa; composite midpoint rule
/// with step <= min(1e-3 |r|, 1e-4) otherwise. Diagnostic only (u = G_alpha(theta)),
/// never inverted by the solver.
inline double g_alpha_eval(double r, const Diffusivity& kappa, double alpha) {
    if (r == 0.0)
        return 0.0;
    if (kappa.is_constant())
        return kappa.regularized(0.0, alpha) * r;
    const double a = std::abs(r);
    const double target = std::min(1e-3 * a, 1e-4);
    const long m = static_cast<long>(std::ceil(a / target));
    const double step = r / static_cast<double>(m);
    double sum = 0.0;
    for (long k = 0; k < m; ++k)
        sum += kappa.regularized((static_cast<double>(k) + 0.5) * step, alpha);
    return sum * step;
}

} // namespace setflow
