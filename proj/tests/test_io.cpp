#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

#include "setflow/io.hpp"
#include "setflow/scenarios.hpp"

using namespace setflow;
namespace fs = std::filesystem;

namespace {

const char* kMinimalPureFeedback = R"(
# minimal pure-feedback document
n_cells = 64
domain_length = 1.0
obstacle.lower = 0
obstacle.upper = inf
kappa.kind = constant
kappa.value = 1.0
f.kind = zero
theta0.kind = constant
theta0.value = -1.0
rho = 2.0
epsilon = 1e-3
t_final = 1.5
dt = 2.5e-4
)";

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

fs::path temp_dir() {
    const fs::path dir = fs::temp_directory_path() / "setflow_test_io";
    fs::create_directories(dir);
    return dir;
}

TrajectoryRecord tiny_record() {
    TrajectoryRecord traj;
    traj.dt = 0.25;
    traj.samples = {
        {0.0, 1.0, 0.9995, 1.0, 1.0, 0},
        {0.25, 0.5, 0.4995, 1.0, 0.5, 2},
        {0.5, 0.0005, 1.25e-7, 0.5, 0.0005, 3},
    };
    return traj;
}

} // namespace

TEST_CASE("parse minimal config document") {
    const SimulationConfig cfg = parse_config(kMinimalPureFeedback);
    CHECK(cfg.grid->n_cells() == 64);
    CHECK(cfg.grid->domain_length() == 1.0);
    CHECK(cfg.obstacle.lower() == 0.0);
    CHECK_FALSE(cfg.obstacle.upper().has_value());
    CHECK(cfg.kappa.is_constant());
    CHECK(cfg.rho == 2.0);
    CHECK(cfg.reg.epsilon == 1e-3);
    CHECK(cfg.reg.alpha == 0.0);
    CHECK(cfg.dt == 2.5e-4);
    CHECK(cfg.hit_tol() == 1e-3); // defaults to epsilon
    CHECK(cfg.fp_tol == 1e-12);
    CHECK(cfg.fp_max_iter == 200);
    CHECK(cfg.theta0[0] == -1.0);
    CHECK(cfg.source.kind() == SourceTerm::Kind::Zero);
}

TEST_CASE("config errors name the offending key") {
    SECTION("epsilon = 0") {
        std::string text = kMinimalPureFeedback;
        text.replace(text.find("epsilon = 1e-3"), 14, "epsilon = 0   ");
        try {
            parse_config(text);
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            CHECK(e.key() == "epsilon");
            CHECK(std::string(e.what()).find("RegularizationParams") != std::string::npos);
        }
    }

    SECTION("fully unbounded obstacle") {
        std::string text = kMinimalPureFeedback;
        text.replace(text.find("obstacle.lower = 0"), 18, "obstacle.lower=-inf");
        CHECK_THROWS_WITH(parse_config(text),
                          Catch::Matchers::ContainsSubstring("trivial constraint set"));
    }

    SECTION("unknown key") {
        std::string text = kMinimalPureFeedback;
        text += "\nviscosity = 3\n";
        try {
            parse_config(text);
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            CHECK(e.key() == "viscosity");
            CHECK(std::string(e.what()).find("unknown config key") != std::string::npos);
        }
    }

    SECTION("contraction violation prints the inequality") {
        std::string text = kMinimalPureFeedback;
        text.replace(text.find("dt = 2.5e-4"), 11, "dt = 5e-3  ");
        CHECK_THROWS_WITH(parse_config(text),
                          Catch::Matchers::ContainsSubstring("> 0.5"));
    }

    SECTION("missing required key") {
        std::string text = kMinimalPureFeedback;
        text.replace(text.find("rho = 2.0"), 9, "         ");
        try {
            parse_config(text);
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            CHECK(e.key() == "rho");
        }
    }

    SECTION("malformed number") {
        std::string text = kMinimalPureFeedback;
        text.replace(text.find("rho = 2.0"), 9, "rho = two");
        CHECK_THROWS_AS(parse_config(text), ConfigError);
    }

    SECTION("line without assignment") {
        CHECK_THROWS_AS(parse_key_values("just words\n"), ConfigError);
    }
}

TEST_CASE("overrides") {
    ConfigMap kv = parse_key_values(kMinimalPureFeedback);
    apply_override(kv, "rho=4.0");
    apply_override(kv, "dt=1.25e-4"); // keep dt*rho/epsilon at 0.5
    const SimulationConfig cfg = build_config(kv);
    CHECK(cfg.rho == 4.0);
    CHECK(cfg.dt == 1.25e-4);

    CHECK_THROWS_AS(apply_override(kv, "nonsense=1"), ConfigError);
    CHECK_THROWS_AS(apply_override(kv, "no-equals-sign"), ConfigError);
}

TEST_CASE("optional solver knobs parse and validate") {
    std::string text = kMinimalPureFeedback;
    text += "hit_tol = 5e-3\nfp_tol = 1e-10\nfp_max_iter = 50\n";
    const SimulationConfig cfg = parse_config(text);
    CHECK(cfg.hit_tol() == 5e-3);
    CHECK(cfg.fp_tol == 1e-10);
    CHECK(cfg.fp_max_iter == 50);

    std::string bad = kMinimalPureFeedback;
    bad += "hit_tol = 0\n";
    try {
        parse_config(bad);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.key() == "hit_tol");
    }
}

TEST_CASE("source kinds from config text") {
    std::string text = kMinimalPureFeedback;
    SECTION("piecewise constant is right-continuous") {
        text.replace(text.find("f.kind = zero"), 13, "f.kind = pwconstant\nf.table = 0:0,1:1");
        const SimulationConfig cfg = parse_config(text);
        CHECK(cfg.source.value_at(0.999) == 0.0);
        CHECK(cfg.source.value_at(1.0) == 1.0);
        CHECK(cfg.source.value_at(1.5) == 1.0);
    }
    SECTION("piecewise linear interpolates and clamps") {
        text.replace(text.find("f.kind = zero"), 13, "f.kind = pwlinear\nf.table = 0:0,2:4");
        const SimulationConfig cfg = parse_config(text);
        CHECK(cfg.source.value_at(1.0) == Catch::Approx(2.0));
        CHECK(cfg.source.value_at(5.0) == 4.0);
    }
    SECTION("constant requires f.value") {
        text.replace(text.find("f.kind = zero"), 13, "f.kind = constant");
        CHECK_THROWS_AS(parse_config(text), ConfigError);
    }
    SECTION("cosine initial datum") {
        std::string t2 = kMinimalPureFeedback;
        t2.replace(t2.find("theta0.kind = constant"), 22, "theta0.kind = cosine  ");
        t2.replace(t2.find("theta0.value = -1.0"), 19, "theta0.amplitude=3 ");
        const SimulationConfig cfg = parse_config(t2);
        CHECK(cfg.theta0[0] == Catch::Approx(3.0 * std::cos(2.0 * std::numbers::pi *
                                                            cfg.grid->cell_center(0))));
    }
}

TEST_CASE("source term behavior") {
    auto grid = build_grid(16, 1.0);
    SECTION("tabulated picks the per-step value") {
        const SourceTerm f = SourceTerm::tabulated({1.0, 2.0, 3.0}, 0.5);
        CHECK(f.value_at(0.5) == 1.0);
        CHECK(f.value_at(1.0) == 2.0);
        CHECK(f.value_at(1.5) == 3.0);
        CHECK(f.value_at(9.0) == 3.0); // clamped
    }
    SECTION("rho_star is the discrete sup over step times") {
        const SourceTerm f = SourceTerm::piecewise_constant({0.0, 1.0}, {0.0, 1.0});
        CHECK(f.rho_star(*grid, 2.0, 0.5) == Catch::Approx(1.0));
        CHECK(f.rho_star(*grid, 0.5, 0.5) == 0.0); // jump not yet sampled
        CHECK(SourceTerm::zero().rho_star(*grid, 1.0, 0.1) == 0.0);
        // |Omega| scaling
        auto wide = build_grid(16, 4.0);
        CHECK(f.rho_star(*wide, 2.0, 0.5) == Catch::Approx(2.0));
    }
    SECTION("table validation") {
        CHECK_THROWS_AS(SourceTerm::piecewise_constant({0.0, 0.0}, {1.0, 2.0}),
                        std::invalid_argument);
        CHECK_THROWS_AS(SourceTerm::piecewise_constant({}, {}), std::invalid_argument);
        CHECK_THROWS_AS(SourceTerm::tabulated({}, 0.1), std::invalid_argument);
    }
}

TEST_CASE("trajectory CSV contract") {
    const fs::path dir = temp_dir();
    const fs::path csv = dir / "traj.csv";
    const TrajectoryRecord traj = tiny_record();
    HittingReport report;
    report.hit = true;
    report.t_star = 0.5;
    report.bound = 0.5;
    report.slope_fit = -2.0;
    report.max_violation = 0.0;

    emit_trajectory_csv(traj, report, 0.97, csv);

    SECTION("header plus one row per sample") {
        const std::string text = read_file(csv);
        CHECK(text.rfind("time,d_K,d_eps_K,sigma_norm,theta_norm,fp_iters\n", 0) == 0);
        CHECK(std::count(text.begin(), text.end(), '\n') == 4);
    }

    SECTION("summary carries the five keys") {
        const std::string text = read_file(summary_path_for(csv));
        CHECK(text.find("t_star=0.5\n") != std::string::npos);
        CHECK(text.find("bound=0.5\n") != std::string::npos);
        CHECK(text.find("slope_fit=-2\n") != std::string::npos);
        CHECK(text.find("max_violation=0\n") != std::string::npos);
        CHECK(text.find("worst_ratio=0.97\n") != std::string::npos);
    }

    SECTION("re-emission is byte-identical") {
        const std::string first = read_file(csv);
        emit_trajectory_csv(traj, report, 0.97, csv);
        CHECK(read_file(csv) == first);
    }

    SECTION("round trip through the reader") {
        const TrajectoryRecord back = read_trajectory_csv(csv);
        REQUIRE(back.samples.size() == traj.samples.size());
        CHECK(back.dt == Catch::Approx(traj.dt));
        for (std::size_t n = 0; n < traj.samples.size(); ++n) {
            CHECK(back.samples[n].time == Catch::Approx(traj.samples[n].time).epsilon(1e-11));
            CHECK(back.samples[n].d_k == Catch::Approx(traj.samples[n].d_k).epsilon(1e-11));
            CHECK(back.samples[n].fp_iters == traj.samples[n].fp_iters);
        }
    }

    SECTION("absent report fields print as nan") {
        HittingReport empty;
        emit_trajectory_csv(traj, empty, 1.0, csv);
        const std::string text = read_file(summary_path_for(csv));
        CHECK(text.find("t_star=nan") != std::string::npos);
        CHECK(text.find("bound=nan") != std::string::npos);
    }

    fs::remove_all(dir);
}

TEST_CASE("unwritable paths raise IoError") {
    const TrajectoryRecord traj = tiny_record();
    CHECK_THROWS_AS(
        emit_trajectory_csv(traj, HittingReport{}, 1.0, "/nonexistent_dir_xyz/out.csv"),
        IoError);
}

TEST_CASE("CSV reader rejects malformed input") {
    const fs::path dir = temp_dir();
    const fs::path bad = dir / "bad.csv";

    {
        std::ofstream out(bad);
        out << "time,wrong,header\n";
    }
    CHECK_THROWS_WITH(read_trajectory_csv(bad),
                      Catch::Matchers::ContainsSubstring("unexpected header"));

    {
        std::ofstream out(bad);
        out << "time,d_K,d_eps_K,sigma_norm,theta_norm,fp_iters\n"
            << "0,1,0.9995,1,1,0\n"
            << "0.25,0.5,0.4995,1,0.5,2\n"
            << "0.7,0.1,0.0995,1,0.1,2\n"; // uneven spacing
    }
    CHECK_THROWS_WITH(read_trajectory_csv(bad),
                      Catch::Matchers::ContainsSubstring("not constant"));

    CHECK_THROWS_AS(read_trajectory_csv(dir / "missing.csv"), IoError);
    fs::remove_all(dir);
}

TEST_CASE("sweep CSV emission is deterministic") {
    const fs::path dir = temp_dir();
    const fs::path a = dir / "sweep_a.csv";
    const fs::path b = dir / "sweep_b.csv";
    Scenario base = scenario_pure_feedback(2.0);
    base.cfg.t_final = 0.6;
    const SweepResult sweep = run_sweep(base, "rho", {2, 4});
    emit_sweep_csv(sweep, a);
    const SweepResult again = run_sweep(base, "rho", {2, 4});
    emit_sweep_csv(again, b);
    CHECK(read_file(a) == read_file(b));
    const std::string text = read_file(a);
    CHECK(text.rfind("rho,status,hit,t_star,bound,slope_fit,max_violation,worst_ratio\n", 0) ==
          0);
    fs::remove_all(dir);
}

TEST_CASE("12-significant-digit formatting") {
    CHECK(detail::format_g12(0.1) == "0.1");
    CHECK(detail::format_g12(1.0 / 3.0) == "0.333333333333");
    CHECK(detail::format_g12(12345.678901234) == "12345.6789012");
}
