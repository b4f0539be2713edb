#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace setflow {

/// Uniform cell-centered 1-D grid on (0, L) with midpoint quadrature.
/// Cell i spans (i*h, (i+1)*h), its unknown sits at x_i = (i + 1/2)*h and
/// carries quadrature weight h = L / n_cells.
class SpatialGrid {
public:
    SpatialGrid(int n_cells, double domain_length)
        : n_cells_(n_cells), length_(domain_length) {
        if (n_cells < 2)
            throw std::invalid_argument("grid too small: n_cells must be >= 2");
        if (!std::isfinite(domain_length) || !(domain_length > 0.0))
            throw std::invalid_argument("domain_length must be positive and finite");
        h_ = domain_length / n_cells;
        weights_.assign(static_cast<std::size_t>(n_cells), h_);
    }

    int n_cells() const { return n_cells_; }
    double domain_length() const { return length_; }
    double cell_width() const { return h_; }
    double cell_center(int i) const { return (i + 0.5) * h_; }
    std::span<const double> weights() const { return weights_; }

    bool compatible_with(const SpatialGrid& other) const {
        return n_cells_ == other.n_cells_ && length_ == other.length_;
    }

private:
    int n_cells_;
    double length_;
    double h_;
    std::vector<double> weights_;
};

inline std::shared_ptr<const SpatialGrid> build_grid(int n_cells, double domain_length) {
    return std::make_shared<const SpatialGrid>(n_cells, domain_length);
}

/// Spatial field: one value per cell of a shared grid.
class GridFunction {
public:
    explicit GridFunction(std::shared_ptr<const SpatialGrid> grid, double fill = 0.0)
        : grid_(std::move(grid)),
          values_(static_cast<std::size_t>(grid_->n_cells()), fill) {}

    static GridFunction from_values(std::shared_ptr<const SpatialGrid> grid,
                                    std::vector<double> values) {
        if (static_cast<int>(values.size()) != grid->n_cells())
            throw std::invalid_argument("field length does not match the grid");
        GridFunction f(std::move(grid));
        f.values_ = std::move(values);
        if (!f.all_finite())
            throw std::invalid_argument("field has non-finite entries");
        return f;
    }

    template <class F>
    static GridFunction sampled(std::shared_ptr<const SpatialGrid> grid, F&& profile) {
        GridFunction f(grid);
        for (int i = 0; i < f.size(); ++i)
            f[i] = profile(grid->cell_center(i));
        if (!f.all_finite())
            throw std::invalid_argument("sampled field has non-finite entries");
        return f;
    }

    int size() const { return static_cast<int>(values_.size()); }
    double& operator[](int i) { return values_[static_cast<std::size_t>(i)]; }
    const double& operator[](int i) const { return values_[static_cast<std::size_t>(i)]; }
    std::span<const double> values() const { return values_; }
    const std::shared_ptr<const SpatialGrid>& grid() const { return grid_; }

    bool all_finite() const {
        for (double v : values_)
            if (!std::isfinite(v)) return false;
        return true;
    }

private:
    std::shared_ptr<const SpatialGrid> grid_;
    std::vector<double> values_;
};

inline void require_same_grid(const GridFunction& u, const GridFunction& v,
                              const char* what) {
    if (u.grid().get() != v.grid().get() && !u.grid()->compatible_with(*v.grid()))
        throw std::invalid_argument(std::string("grid mismatch in ") + what);
}

/// Discrete L2 pairing: sum_i w_i u_i v_i with w_i = h.
inline double inner_product(const GridFunction& u, const GridFunction& v) {
    require_same_grid(u, v, "inner_product");
    double s = 0.0;
    for (int i = 0; i < u.size(); ++i)
        s += u[i] * v[i];
    return s * u.grid()->cell_width();
}

inline double norm_h(const GridFunction& u) {
    return std::sqrt(inner_product(u, u));
}

inline double diff_norm_h(const GridFunction& u, const GridFunction& v) {
    require_same_grid(u, v, "diff_norm_h");
    double s = 0.0;
    for (int i = 0; i < u.size(); ++i) {
        const double d = u[i] - v[i];
        s += d * d;
    }
    return std::sqrt(s * u.grid()->cell_width());
}

/// Spatial mean: |Omega|^{-1} * integral of u.
inline double mean_value(const GridFunction& u) {
    double s = 0.0;
    for (int i = 0; i < u.size(); ++i)
        s += u[i];
    return s / u.size();
}

} // namespace setflow
