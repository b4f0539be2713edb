#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <ostream>
#include <string>
#include <utility>

#include "grid.hpp"
#include "obstacle.hpp"
#include "rng.hpp"

namespace setflow {

struct SelftestOptions {
    std::uint64_t seed = 12345;
    /// Test hook: replaces moreau_envelope in the oracle-agreement check.
    /// A corrupted formula here must make the selftest fail (negative control).
    std::function<double(const GridFunction&, const ObstacleSet&, double)> envelope_override;
};

namespace detail {

inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

inline void report_line(std::ostream& out, bool ok, const char* name, const std::string& info) {
    std::string padded = name;
    if (padded.size() < 26)
        padded.resize(26, ' ');
    out << (ok ? "[ ok ] " : "[FAIL] ") << padded << ' ' << info << '\n';
}

/// Per-check stream derivation: every check mixes the battery seed with its
/// own salt, so cases do not depend on check ordering and a printed seed
/// replays the whole battery.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    return seed * 0x9e3779b97f4a7c15ULL + salt;
}

/// Seeded generator of random grids, obstacle sets, fields and Yosida
/// parameters.
class CaseGen {
public:
    explicit CaseGen(std::uint64_t seed) : rng_(seed) {}

    std::shared_ptr<const SpatialGrid> grid() {
        return build_grid(rng_.uniform_int(8, 96), rng_.uniform(0.5, 3.0));
    }

    ObstacleSet obstacle() {
        const int kind = rng_.uniform_int(0, 2);
        double a = rng_.uniform(-1.5, 1.5);
        double b = rng_.uniform(-1.5, 1.5);
        if (a > b)
            std::swap(a, b);
        switch (kind) {
        case 0: return ObstacleSet::bounded(a, b);
        case 1: return ObstacleSet::at_least(a);
        default: return ObstacleSet::at_most(b);
        }
    }

    GridFunction field(const std::shared_ptr<const SpatialGrid>& g, double span = 3.0) {
        GridFunction f(g);
        for (int i = 0; i < f.size(); ++i)
            f[i] = rng_.uniform(-span, span);
        return f;
    }

    double eps() { return rng_.log_uniform(1e-3, 0.5); }

    Rng& rng() { return rng_; }

private:
    Rng rng_;
};

inline bool check_projection_idempotence(std::ostream& out, std::uint64_t seed) {
    CaseGen gen(mix_seed(seed, 1));
    const int cases = 200;
    for (int c = 0; c < cases; ++c) {
        const auto g = gen.grid();
        const ObstacleSet K = gen.obstacle();
        const GridFunction v = gen.field(g);
        const GridFunction p = project(v, K);
        const GridFunction pp = project(p, K);
        for (int i = 0; i < v.size(); ++i) {
            if (pp[i] != p[i] || !K.contains(p[i])) {
                report_line(out, false, "projection-idempotence",
                            "case=" + std::to_string(c) + " seed=" + std::to_string(seed) +
                                ": projection is not idempotent at cell " + std::to_string(i));
                return false;
            }
        }
    }
    report_line(out, true, "projection-idempotence",
                "cases=" + std::to_string(cases) + " bitwise (seed=" + std::to_string(seed) + ")");
    return true;
}

inline bool check_projection_nonexpansive(std::ostream& out, std::uint64_t seed) {
    CaseGen gen(mix_seed(seed, 2));
    const int cases = 1000;
    double worst = 0.0;
    for (int c = 0; c < cases; ++c) {
        const auto g = gen.grid();
        const ObstacleSet K = gen.obstacle();
        const GridFunction u = gen.field(g);
        const GridFunction v = gen.field(g);
        const double lhs = diff_norm_h(project(u, K), project(v, K));
        const double rhs = diff_norm_h(u, v);
        worst = std::max(worst, lhs - rhs);
        if (lhs > rhs) {
            report_line(out, false, "projection-nonexpansive",
                        "case=" + std::to_string(c) + " seed=" + std::to_string(seed) +
                            ": ||Pu - Pv|| = " + fmt(lhs) + " > ||u - v|| = " + fmt(rhs));
            return false;
        }
    }
    report_line(out, true, "projection-nonexpansive",
                "cases=" + std::to_string(cases) + " worst excess=" + fmt(worst) +
                    " (seed=" + std::to_string(seed) + ")");
    return true;
}

inline bool check_envelope_bounds(std::ostream& out, std::uint64_t seed) {
    CaseGen gen(mix_seed(seed, 3));
    const int cases = 500;
    for (int c = 0; c < cases; ++c) {
        const auto g = gen.grid();
        const ObstacleSet K = gen.obstacle();
        const GridFunction v = gen.field(g);
        const double eps = gen.eps();
        const double d = distance(v, K);
        const double psi = moreau_envelope(v, K, eps);
        const bool in_band = psi >= 0.0 && psi <= d && psi >= d - 0.5 * eps;
        const bool linear_branch_exact = d < eps || psi == d - 0.5 * eps;
        if (!in_band || !linear_branch_exact) {
            report_line(out, false, "envelope-bounds",
                        "case=" + std::to_string(c) + " seed=" + std::to_string(seed) +
                            ": d=" + fmt(d) + " eps=" + fmt(eps) + " envelope=" + fmt(psi));
            return false;
        }
    }
    report_line(out, true, "envelope-bounds",
                "cases=" + std::to_string(cases) + " 0 <= env <= d, env >= d - eps/2 (seed=" +
                    std::to_string(seed) + ")");
    return true;
}

inline bool check_oracle_agreement(
    std::ostream& out, std::uint64_t seed,
    const std::function<double(const GridFunction&, const ObstacleSet&, double)>& envelope) {
    CaseGen gen(mix_seed(seed, 4));
    const int cases = 100;
    double worst = 0.0;
    for (int c = 0; c < cases; ++c) {
        const auto g = gen.grid();
        const ObstacleSet K = gen.obstacle();
        const GridFunction v = gen.field(g);
        const double eps = gen.eps();
        const double d = distance(v, K);
        const double closed_form = envelope ? envelope(v, K, eps) : moreau_envelope(v, K, eps);
        const double oracle = moreau_oracle(v, K, eps);
        const double err = std::abs(closed_form - oracle);
        const double tol = 1e-6 * (1.0 + d);
        worst = std::max(worst, err / tol);
        if (err > tol) {
            report_line(out, false, "oracle-agreement",
                        "case=" + std::to_string(c) + " seed=" + std::to_string(seed) +
                            ": |envelope - oracle| = " + fmt(err) + " > tol " + fmt(tol));
            return false;
        }
    }
    report_line(out, true, "oracle-agreement",
                "cases=" + std::to_string(cases) + " worst err/tol=" + fmt(worst) +
                    " (seed=" + std::to_string(seed) + ")");
    return true;
}

inline bool check_yosida_lipschitz(std::ostream& out, std::uint64_t seed) {
    CaseGen gen(mix_seed(seed, 5));
    const int cases = 1000;
    double worst = 0.0;
    for (int c = 0; c < cases; ++c) {
        const auto g = gen.grid();
        const ObstacleSet K = gen.obstacle();
        const double eps = gen.eps();
        GridFunction u = gen.field(g);
        GridFunction v = gen.field(g);
        if (c % 4 == 0) {
            // quadratic-regime pair: every component strictly outside on the
            // same side and both distances below eps, so the gradient is
            // (v - P_K v)/eps and the 1/eps bound is attained up to rounding
            const double spread = 0.2 * eps / std::sqrt(g->domain_length());
            const bool below = K.lower().has_value();
            const double bound = below ? *K.lower() : *K.upper();
            const double sign = below ? -1.0 : 1.0;
            for (int i = 0; i < u.size(); ++i) {
                u[i] = bound + sign * gen.rng().uniform(0.0, spread);
                v[i] = bound + sign * gen.rng().uniform(0.0, spread);
            }
        }
        const double gap = diff_norm_h(u, v);
        if (gap == 0.0)
            continue;
        const double ratio =
            diff_norm_h(yosida_gradient(u, K, eps), yosida_gradient(v, K, eps)) / gap;
        worst = std::max(worst, ratio * eps);
        if (ratio > (1.0 / eps) * (1.0 + 1e-9)) {
            report_line(out, false, "yosida-lipschitz",
                        "case=" + std::to_string(c) + " seed=" + std::to_string(seed) +
                            ": ratio " + fmt(ratio) + " exceeds 1/eps = " + fmt(1.0 / eps));
            return false;
        }
    }
    report_line(out, true, "yosida-lipschitz",
                "cases=" + std::to_string(cases) + " worst ratio*eps=" + fmt(worst) +
                    " (seed=" + std::to_string(seed) + ")");
    return true;
}

inline bool check_gradient_fd(std::ostream& out, std::uint64_t seed) {
    CaseGen gen(mix_seed(seed, 6));
    const int cases = 100;
    double worst = 0.0;
    for (int c = 0; c < cases; ++c) {
        const auto g = gen.grid();
        const ObstacleSet K = gen.obstacle();
        const double eps = gen.eps();

        // Redraw states that sit on a nonsmooth seam: the envelope branch
        // switch d = eps, or a cell value within h of an obstacle bound
        // (there the second derivative jumps and a central difference stops
        // probing the formula).
        GridFunction v(g);
        bool usable = false;
        for (int attempt = 0; attempt < 100 && !usable; ++attempt) {
            v = gen.field(g);
            const double d = distance(v, K);
            usable = std::abs(d - eps) > 1e-4 * std::max(1.0, d);
            if (usable) {
                for (int i = 0; i < v.size() && usable; ++i) {
                    if (K.lower() && std::abs(v[i] - *K.lower()) < 1e-4) usable = false;
                    if (K.upper() && std::abs(v[i] - *K.upper()) < 1e-4) usable = false;
                }
            }
        }
        if (!usable)
            continue;

        GridFunction w = gen.field(g, 1.0);
        const double wn = norm_h(w);
        if (wn == 0.0)
            continue;
        for (int i = 0; i < w.size(); ++i)
            w[i] /= wn;

        const double h = 1e-6;
        GridFunction plus(g), minus(g);
        for (int i = 0; i < v.size(); ++i) {
            plus[i] = v[i] + h * w[i];
            minus[i] = v[i] - h * w[i];
        }
        const double fd =
            (moreau_envelope(plus, K, eps) - moreau_envelope(minus, K, eps)) / (2.0 * h);
        const double ip = inner_product(yosida_gradient(v, K, eps), w);
        const double err = std::abs(fd - ip);
        const double tol = 1e-5 * (1.0 + std::abs(ip));
        worst = std::max(worst, err / tol);
        if (err > tol) {
            report_line(out, false, "gradient-fd",
                        "case=" + std::to_string(c) + " seed=" + std::to_string(seed) +
                            ": |fd - <sigma,w>| = " + fmt(err) + " > tol " + fmt(tol));
            return false;
        }
    }
    report_line(out, true, "gradient-fd",
                "cases=" + std::to_string(cases) + " worst err/tol=" + fmt(worst) +
                    " (seed=" + std::to_string(seed) + ")");
    return true;
}

inline bool check_threshold_characterization(std::ostream& out, std::uint64_t seed) {
    CaseGen gen(mix_seed(seed, 7));
    const int cases = 500;
    for (int c = 0; c < cases; ++c) {
        const auto g = gen.grid();
        const ObstacleSet K = gen.obstacle();
        const GridFunction v = gen.field(g);
        const double eps = gen.eps();
        const double d = distance(v, K);
        if (std::abs(d - eps) < 1e-9 * std::max(1.0, d))
            continue;
        const double sig = norm_h(yosida_gradient(v, K, eps));
        const double psi = moreau_envelope(v, K, eps);
        bool ok;
        if (d > eps)
            ok = std::abs(sig - 1.0) <= 1e-12 && psi > 0.5 * eps;
        else
            ok = sig <= 1.0 && std::abs(sig - d / eps) <= 1e-12 && psi <= 0.5 * eps;
        if (!ok) {
            report_line(out, false, "threshold-characterization",
                        "case=" + std::to_string(c) + " seed=" + std::to_string(seed) + ": d=" +
                            fmt(d) + " eps=" + fmt(eps) + " ||sigma||=" + fmt(sig) +
                            " env=" + fmt(psi));
            return false;
        }
    }
    report_line(out, true, "threshold-characterization",
                "cases=" + std::to_string(cases) +
                    " ||sigma||=1 iff d>eps iff env>eps/2 (seed=" + std::to_string(seed) + ")");
    return true;
}

inline bool check_monotone_graph(std::ostream& out, std::uint64_t seed) {
    CaseGen gen(mix_seed(seed, 8));
    const int cases = 500;
    double worst = 0.0;
    for (int c = 0; c < cases; ++c) {
        const auto g = gen.grid();
        const ObstacleSet K = gen.obstacle();
        const GridFunction u = gen.field(g);
        const GridFunction v = gen.field(g);
        const double eps = gen.eps();
        const GridFunction su = yosida_gradient(u, K, eps);
        const GridFunction sv = yosida_gradient(v, K, eps);
        double pairing = 0.0;
        for (int i = 0; i < u.size(); ++i)
            pairing += (su[i] - sv[i]) * (u[i] - v[i]);
        pairing *= g->cell_width();
        const double gap = diff_norm_h(u, v);
        const double slack = 1e-12 * (1.0 + gap * gap / eps);
        worst = std::min(worst, pairing);
        if (pairing < -slack) {
            report_line(out, false, "monotone-graph",
                        "case=" + std::to_string(c) + " seed=" + std::to_string(seed) +
                            ": <sigma(u)-sigma(v), u-v> = " + fmt(pairing));
            return false;
        }
    }
    report_line(out, true, "monotone-graph",
                "cases=" + std::to_string(cases) + " min pairing=" + fmt(worst) +
                    " (seed=" + std::to_string(seed) + ")");
    return true;
}

inline bool check_sign_structure(std::ostream& out, std::uint64_t seed) {
    CaseGen gen(mix_seed(seed, 9));
    const int cases = 200;
    for (int c = 0; c < cases; ++c) {
        const auto g = gen.grid();
        const ObstacleSet K = gen.obstacle();
        const GridFunction v = gen.field(g);
        const double eps = gen.eps();
        const GridFunction sigma = yosida_gradient(v, K, eps);
        for (int i = 0; i < v.size(); ++i) {
            const double q = K.pointwise_residual(v[i]);
            const bool ok = (q == 0.0 && sigma[i] == 0.0) || (q > 0.0 && sigma[i] > 0.0) ||
                            (q < 0.0 && sigma[i] < 0.0);
            if (!ok) {
                report_line(out, false, "sign-structure",
                            "case=" + std::to_string(c) + " seed=" + std::to_string(seed) +
                                ": component " + std::to_string(i) +
                                " does not share the sign of q_I");
                return false;
            }
        }
    }
    report_line(out, true, "sign-structure",
                "cases=" + std::to_string(cases) + " sigma shares the sign of q_I (seed=" +
                    std::to_string(seed) + ")");
    return true;
}

} // namespace detail

/// Runs the convex-set invariant battery on seeded random inputs, printing
/// one line per check. Returns true iff every check passed; any failure
/// echoes the case index and seed needed to replay it.
inline bool run_selftest(std::ostream& out, const SelftestOptions& opts = {}) {
    const std::uint64_t seed = opts.seed;
    bool ok = true;
    ok &= detail::check_projection_idempotence(out, seed);
    ok &= detail::check_projection_nonexpansive(out, seed);
    ok &= detail::check_envelope_bounds(out, seed);
    ok &= detail::check_oracle_agreement(out, seed, opts.envelope_override);
    ok &= detail::check_yosida_lipschitz(out, seed);
    ok &= detail::check_gradient_fd(out, seed);
    ok &= detail::check_threshold_characterization(out, seed);
    ok &= detail::check_monotone_graph(out, seed);
    ok &= detail::check_sign_structure(out, seed);
    out << (ok ? "selftest: all checks passed\n" : "selftest: FAILURES above\n");
    return ok;
}

} // namespace setflow
