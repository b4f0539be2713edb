// Acceptance suite: runs every criterion at its stated tolerance and prints
// one pass/fail line per criterion. Exit code 0 iff all criteria pass.

#include <cmath>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "setflow/rng.hpp"
#include "setflow/scenarios.hpp"
#include "setflow/selftest.hpp"
#include "setflow/solver.hpp"
#include "setflow/verify.hpp"

using namespace setflow;

namespace {

bool g_all_pass = true;

void report(int index, bool pass, const std::string& title, const std::string& detail) {
    std::printf("[%s] criterion %d: %s (%s)\n", pass ? "PASS" : "FAIL", index, title.c_str(),
                detail.c_str());
    g_all_pass = g_all_pass && pass;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

struct NamedOutcome {
    std::string name;
    Scenario scenario;
    RunOutcome outcome;
};

double scenario_rho_star(const NamedOutcome& run) {
    return run.scenario.cfg.source.rho_star(*run.scenario.cfg.grid,
                                            run.outcome.traj.samples.back().time,
                                            run.outcome.traj.dt);
}

// 1. The closed-form regression: mean trace, hitting time, persistence.
void criterion_1(const NamedOutcome& intro) {
    double trace_err = -1.0, hit_err = -1.0, post_sup = -1.0;
    bool pass = true;
    for (const auto& c : intro.outcome.checks) {
        if (c.id == CheckId::AnalyticTrace) {
            trace_err = c.measured;
            pass = pass && c.pass;
        } else if (c.id == CheckId::HitTime) {
            hit_err = c.measured;
            pass = pass && c.pass;
        } else if (c.id == CheckId::Persistence) {
            post_sup = c.measured;
            pass = pass && c.pass;
        }
    }
    std::ostringstream detail;
    detail << "max |mean - (t-1)| = " << fmt(trace_err) << " <= 0.02; |t_star - 1| = "
           << fmt(hit_err) << " <= 0.01; sup d_K on [1.05,2] = " << fmt(post_sup)
           << " <= eps + 1e-5";
    report(1, pass, "intro analytic regression", detail.str());
}

// 2. Hitting-time bound on the bundled scenarios and the rho sweep.
void criterion_2(const std::vector<NamedOutcome>& runs, const SweepResult& rho_sweep) {
    bool pass = true;
    std::ostringstream detail;
    for (const auto& run : runs) {
        const auto& h = run.outcome.hitting;
        if (!h.bound) {
            detail << run.name << ": bound n/a; ";
            continue;
        }
        const bool ok = h.hit && *h.t_star <= *h.bound + 2.0 * run.outcome.traj.dt;
        pass = pass && ok;
        detail << run.name << ": t*=" << fmt(h.hit ? *h.t_star : -1.0) << " vs "
               << fmt(*h.bound) << "; ";
    }
    double worst_rel = 0.0;
    for (const auto& row : rho_sweep.rows) {
        const bool row_ok = row.status == "ok" && row.hitting->hit && row.hitting->bound &&
                            *row.hitting->t_star <= *row.hitting->bound + 2.0 * row.cfg->dt;
        pass = pass && row_ok;
        if (row_ok) {
            const double rel = std::abs(*row.hitting->t_star * row.value - 1.0);
            worst_rel = std::max(worst_rel, rel);
        }
    }
    pass = pass && worst_rel <= 0.02;
    detail << "rho sweep {1,2,4,8}: worst |t* - 1/rho| / (1/rho) = " << fmt(worst_rel)
           << " <= 0.02";
    report(2, pass, "hitting-time bound", detail.str());
}

// 3. Decay-rate inequality: slope bound everywhere, exact value on pure feedback.
void criterion_3(const std::vector<NamedOutcome>& runs) {
    bool pass = true;
    std::ostringstream detail;
    for (const auto& run : runs) {
        const auto& h = run.outcome.hitting;
        if (!h.slope_fit) {
            pass = false;
            detail << run.name << ": no slope; ";
            continue;
        }
        const double rho = run.scenario.cfg.rho;
        const double limit = -(rho - scenario_rho_star(run)) + 0.05 * rho;
        const bool ok = *h.slope_fit <= limit;
        pass = pass && ok;
        detail << run.name << ": slope " << fmt(*h.slope_fit) << " <= " << fmt(limit) << "; ";
        if (run.name == "pure-feedback") {
            const bool exact = std::abs(*h.slope_fit + rho) <= 0.02 * rho;
            pass = pass && exact;
            detail << "pure-feedback |slope + rho| = " << fmt(std::abs(*h.slope_fit + rho))
                   << " <= " << fmt(0.02 * rho) << "; ";
        }
    }
    report(3, pass, "decay-rate inequality", detail.str());
}

// 4. Discrete differential inequality and the sigma-norm condition.
void criterion_4(const std::vector<NamedOutcome>& runs) {
    bool pass = true;
    std::ostringstream detail;
    for (const auto& run : runs) {
        const auto& ineq = run.outcome.inequality;
        const double tol = 1e-2 * run.scenario.cfg.rho;
        const bool ok = ineq.max_violation <= tol && ineq.sigma_norm_ok;
        pass = pass && ok;
        detail << run.name << ": max_violation " << fmt(ineq.max_violation) << " <= " << fmt(tol)
               << (ineq.sigma_norm_ok ? "" : ", sigma-norm VIOLATED") << "; ";
    }
    report(4, pass, "discrete differential inequality", detail.str());
}

// 5. Invariance of K over random initial data inside it.
void criterion_5() {
    Rng rng(424242);
    bool pass = true;
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        SimulationConfig cfg(build_grid(64, 1.0));
        const bool two_sided = trial % 2 == 0;
        cfg.obstacle = two_sided ? ObstacleSet::bounded(-1.0, 1.0) : ObstacleSet::at_least(0.0);
        if (trial % 4 < 2) {
            cfg.kappa = Diffusivity::constant(1.0);
            cfg.reg = {1e-3, 0.0};
        } else {
            cfg.kappa = Diffusivity::named("saturating");
            cfg.reg = {1e-3, 0.05};
        }
        cfg.source = SourceTerm::zero();
        cfg.rho = 2.0;
        cfg.dt = 2.5e-4;
        cfg.t_final = 0.25;
        GridFunction theta0(cfg.grid);
        for (int i = 0; i < theta0.size(); ++i)
            theta0[i] = two_sided ? rng.uniform(-1.0, 1.0) : rng.uniform(0.0, 2.0);
        cfg.theta0 = theta0;

        const TrajectoryRecord traj = simulate(cfg);
        double sup = 0.0;
        for (const auto& s : traj.samples)
            sup = std::max(sup, s.d_k);
        worst = std::max(worst, sup);
        pass = pass && sup <= cfg.reg.epsilon + 10.0 * cfg.fp_tol;
    }
    std::ostringstream detail;
    detail << "20 random starts in K: worst sup d_K = " << fmt(worst)
           << " <= eps + 10 fp_tol = " << fmt(1e-3 + 1e-11);
    report(5, pass, "invariance of K", detail.str());
}

// 6. Moreau-Yosida formula verification against the brute-force oracle,
// finite differences and the Lipschitz bound.
void criterion_6() {
    std::ostringstream sink;
    const bool oracle = detail::check_oracle_agreement(sink, 90001, {});
    const bool fd = detail::check_gradient_fd(sink, 90002);
    const bool lipschitz = detail::check_yosida_lipschitz(sink, 90003);
    std::ostringstream detail_text;
    detail_text << "oracle agreement on 100 triples: " << (oracle ? "ok" : "FAIL")
                << "; gradient vs finite differences on 100 points: " << (fd ? "ok" : "FAIL")
                << "; Lipschitz ratio <= 1/eps on 1000 pairs: " << (lipschitz ? "ok" : "FAIL");
    report(6, oracle && fd && lipschitz, "Moreau-Yosida formula verification",
           detail_text.str());
}

// 7. Energy diagnostic on every bundled scenario.
void criterion_7(const std::vector<NamedOutcome>& runs) {
    bool pass = true;
    double worst = 0.0;
    for (const auto& run : runs) {
        worst = std::max(worst, run.outcome.worst_ratio);
        pass = pass && run.outcome.worst_ratio <= 1.0 + 1e-9;
    }
    std::ostringstream detail;
    detail << "worst energy ratio over bundled scenarios = " << fmt(worst) << " <= 1 + 1e-9";
    report(7, pass, "energy diagnostic", detail.str());
}

// 8. Stability of the hitting time under halving (eps, alpha).
void criterion_8() {
    const double rho = 2.0;
    std::vector<double> eps_levels = {1e-3, 5e-4, 2.5e-4};
    std::vector<double> t_stars;
    for (double eps : eps_levels) {
        SimulationConfig cfg(build_grid(64, 1.0));
        cfg.obstacle = ObstacleSet::at_least(0.0);
        cfg.kappa = Diffusivity::constant(1.0);
        cfg.source = SourceTerm::zero();
        cfg.theta0 = GridFunction(cfg.grid, -1.0);
        cfg.rho = rho;
        cfg.reg = {eps, eps};
        cfg.dt = 0.5 * eps / rho;
        cfg.t_final = 1.5;
        const TrajectoryRecord traj = simulate(cfg);
        const HittingReport h = detect_hitting(traj, cfg);
        t_stars.push_back(h.hit ? *h.t_star : -1.0);
    }
    bool pass = true;
    double worst_rel = 0.0;
    std::ostringstream detail;
    detail << "t* = {";
    for (double t : t_stars)
        detail << fmt(t) << " ";
    detail << "}; ";
    for (std::size_t k = 0; k + 1 < t_stars.size(); ++k) {
        const double allowed = 4.0 * eps_levels[k] / rho;
        const double drift = std::abs(t_stars[k + 1] - t_stars[k]);
        pass = pass && t_stars[k] >= 0.0 && t_stars[k + 1] >= 0.0 && drift <= allowed;
        worst_rel = std::max(worst_rel, drift / allowed);
        detail << "halving " << k + 1 << ": drift " << fmt(drift) << " <= " << fmt(allowed)
               << "; ";
    }
    report(8, pass, "epsilon refinement", detail.str());
}

// 9. Degenerate diffusivity across the alpha ladder.
void criterion_9() {
    Rng rng(777);
    bool pass = true;
    std::vector<double> t_stars;
    double ladder_dt = 0.0;
    std::ostringstream detail;
    for (double alpha : {0.1, 0.01, 0.001}) {
        const Scenario s = scenario_degenerate_kappa(alpha);
        ladder_dt = s.cfg.dt;
        const RunOutcome out = run_scenario(s);
        const auto& h = out.hitting;
        const double rho = s.cfg.rho;
        bool ok = h.hit && h.bound && *h.t_star <= *h.bound + 2.0 * s.cfg.dt; // criterion 2
        ok = ok && h.slope_fit && *h.slope_fit <= -rho + 0.05 * rho;          // criterion 3
        ok = ok && out.inequality.max_violation <= 1e-2 * rho &&
             out.inequality.sigma_norm_ok;                                    // criterion 4
        ok = ok && out.worst_ratio <= 1.0 + 1e-9;

        // criterion 5 analog with the degenerate kappa and this lift
        for (int trial = 0; trial < 5; ++trial) {
            SimulationConfig cfg = s.cfg;
            GridFunction theta0(cfg.grid);
            for (int i = 0; i < theta0.size(); ++i)
                theta0[i] = rng.uniform(0.0, 2.0);
            cfg.theta0 = theta0;
            cfg.t_final = 0.2;
            const TrajectoryRecord traj = simulate(cfg);
            for (const auto& sample : traj.samples)
                ok = ok && sample.d_k <= cfg.reg.epsilon + 10.0 * cfg.fp_tol;
        }

        pass = pass && ok;
        t_stars.push_back(h.hit ? *h.t_star : -1.0);
        detail << "alpha=" << fmt(alpha) << ": t*=" << fmt(t_stars.back())
               << (ok ? "" : " FAIL") << "; ";
    }
    double drift = 0.0;
    for (double t : t_stars)
        for (double u : t_stars)
            drift = std::max(drift, std::abs(t - u));
    pass = pass && drift <= 2.0 * ladder_dt;
    detail << "t* drift across alpha = " << fmt(drift) << " <= 2 dt = " << fmt(2.0 * ladder_dt);
    report(9, pass, "degenerate diffusivity", detail.str());
}

} // namespace

int main() {
    std::vector<NamedOutcome> runs;
    for (const auto& name : scenario_names()) {
        Scenario s = *scenario_by_name(name);
        RunOutcome outcome = run_scenario(s);
        runs.push_back({name, std::move(s), std::move(outcome)});
    }
    const NamedOutcome* intro = nullptr;
    for (const auto& run : runs)
        if (run.name == "intro-analytic")
            intro = &run;

    const SweepResult rho_sweep =
        run_sweep(scenario_pure_feedback(2.0), "rho", {1, 2, 4, 8});

    criterion_1(*intro);
    criterion_2(runs, rho_sweep);
    criterion_3(runs);
    criterion_4(runs);
    criterion_5();
    criterion_6();
    criterion_7(runs);
    criterion_8();
    criterion_9();

    std::printf("%s\n", g_all_pass ? "acceptance: all criteria passed"
                                   : "acceptance: FAILURES above");
    return g_all_pass ? 0 : 1;
}
