#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "loracap/airtime.hpp"
#include "loracap/model.hpp"
#include "loracap/sweep.hpp"

using namespace loracap;

namespace {

ScenarioConfig preset() { return validate_scenario(reference_preset()); }

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("model-only sweep walks an ordered log grid with validity flags") {
    const ScenarioConfig sc = preset();
    const TimingTable t = build_timing_table(sc);
    SweepSpec spec;
    spec.lambda_min = 1e-3;
    spec.lambda_max = 1e1;
    spec.points = 13;
    spec.engines = SweepEngines::model_only;
    const SweepResult res = run_sweep(spec, sc, t);
    REQUIRE(res.rows.size() == 13);
    CHECK(res.lambda_star == doctest::Approx(0.06842742835842).epsilon(1e-11));
    CHECK(res.rows.front().lambda == doctest::Approx(1e-3).epsilon(1e-15));
    CHECK(res.rows.back().lambda == doctest::Approx(1e1).epsilon(1e-15));
    double prev_lambda = 0.0, prev_per = -1.0;
    for (const SweepRow& r : res.rows) {
        CHECK(r.lambda > prev_lambda);
        CHECK(r.model_per >= prev_per - 1e-12);
        prev_lambda = r.lambda;
        prev_per = r.model_per;
        CHECK(r.valid == (r.lambda <= res.lambda_star));
        CHECK(!r.has_sim);
    }
    // Spot-check one row against a direct model evaluation.
    const ModelResult m = evaluate_model(sc, t, res.rows[6].lambda);
    CHECK(res.rows[6].model_per == doctest::Approx(m.per).epsilon(1e-15));
}

TEST_CASE("both-engine rows carry simulator estimates") {
    const ScenarioConfig sc = preset();
    const TimingTable t = build_timing_table(sc);
    SweepSpec spec;
    spec.lambda_min = 0.02;
    spec.lambda_max = 0.08;
    spec.points = 3;
    spec.engines = SweepEngines::both;
    spec.sim.seed = 7;
    spec.sim.replications = 2;
    spec.sim.duration = 4000.0;
    spec.sim.warmup = 400.0;
    const SweepResult res = run_sweep(spec, sc, t);
    for (const SweepRow& r : res.rows) {
        REQUIRE(r.has_sim);
        CHECK(r.sim_per >= 0.0);
        CHECK(r.sim_per <= 1.0);
        CHECK(r.sim_per1 >= 0.0);
        CHECK(r.sim_per_ci >= 0.0);
    }
}

TEST_CASE("rejects nonsense grids") {
    const ScenarioConfig sc = preset();
    const TimingTable t = build_timing_table(sc);
    SweepSpec spec;
    spec.lambda_min = 0.0;
    CHECK_THROWS_AS(run_sweep(spec, sc, t), std::invalid_argument);
    spec.lambda_min = 1.0;
    spec.lambda_max = 0.5;
    CHECK_THROWS_AS(run_sweep(spec, sc, t), std::invalid_argument);
    spec.lambda_max = 2.0;
    spec.points = 1;
    CHECK_THROWS_AS(run_sweep(spec, sc, t), std::invalid_argument);
}

TEST_CASE("auto duration respects the simulated-time budget cap") {
    const ScenarioConfig sc = preset();
    const TimingTable t = build_timing_table(sc);
    SweepSpec spec;
    spec.lambda_min = 0.05;
    spec.lambda_max = 0.1;
    spec.points = 2;
    spec.engines = SweepEngines::both;
    spec.sim.duration = 0.0;  // auto
    spec.sim.warmup = 100.0;
    spec.sim.replications = 2;
    spec.target_attempts = 500;
    const SweepResult res = run_sweep(spec, sc, t);
    CHECK(res.rows[0].has_sim);

    spec.max_sim_time_s = 50.0;  // cap below the warmup: nothing measurable
    CHECK_THROWS_AS(run_sweep(spec, sc, t), std::invalid_argument);
}

TEST_CASE("csv writes the fixed header plus one line per row") {
    SweepRow r;
    r.lambda = 0.123456789012345;
    r.model_per = 1.2345678901234e-4;
    r.model_per1 = 0.5;
    r.valid = true;
    std::ostringstream out;
    write_csv({r}, out);
    const std::string text = out.str();
    CHECK(text ==
          "lambda,model_per,model_per1,valid,sim_per,sim_per_ci,sim_per1,"
          "sim_per1_ci\n0.123456789012,0.000123456789012,0.5,1,,,,\n");

    std::istringstream in(text);
    const std::vector<SweepRow> back = read_csv(in);
    REQUIRE(back.size() == 1);
    CHECK(back[0].lambda == doctest::Approx(r.lambda).epsilon(1e-11));
    CHECK(back[0].model_per == doctest::Approx(r.model_per).epsilon(1e-11));
    CHECK(back[0].valid);
    CHECK(!back[0].has_sim);

    CHECK_THROWS_AS(write_csv({}, out), std::invalid_argument);
}

TEST_CASE("csv round trip preserves twelve significant digits") {
    SweepRow a;
    a.lambda = 0.068427428358;
    a.model_per = 0.025292698608;
    a.model_per1 = 0.016405760499;
    a.valid = true;
    a.has_sim = true;
    a.sim_per = 0.024728217380;
    a.sim_per_ci = 0.009048877055;
    a.sim_per1 = 0.019271204917;
    a.sim_per1_ci = 0.004168667749;
    std::ostringstream out;
    write_csv({a, a}, out);
    std::istringstream in(out.str());
    const std::vector<SweepRow> back = read_csv(in);
    REQUIRE(back.size() == 2);
    for (const SweepRow& b : back) {
        CHECK(b.lambda == doctest::Approx(a.lambda).epsilon(1e-11));
        CHECK(b.sim_per == doctest::Approx(a.sim_per).epsilon(1e-11));
        CHECK(b.sim_per_ci == doctest::Approx(a.sim_per_ci).epsilon(1e-11));
        CHECK(b.sim_per1 == doctest::Approx(a.sim_per1).epsilon(1e-11));
        CHECK(b.sim_per1_ci == doctest::Approx(a.sim_per1_ci).epsilon(1e-11));
    }

    std::istringstream bad("nonsense header\n1,2,3,4\n");
    CHECK_THROWS_AS(read_csv(bad), std::invalid_argument);
}

TEST_CASE("monte carlo oracle agrees with the closed form") {
    // Smoke-level battery; the acceptance harness runs 10^6 samples.
    for (std::size_t i = 0; i < px_battery().size(); ++i) {
        const auto [r, t, w] = px_battery()[i];
        const auto [mc, se] = px_monte_carlo_oracle(r, t, w, 100000, 1234 + i);
        CHECK(std::abs(mc - p_x_retry(r, t, w)) <= 4.0 * se);
        CHECK(se > 0.0);
    }
}

TEST_CASE("monte carlo oracle basics") {
    CHECK_THROWS_AS(px_monte_carlo_oracle(0.1, 1.0, 2.0, 9999, 1),
                    std::invalid_argument);
    CHECK_THROWS_AS(px_monte_carlo_oracle(0.1, 0.0, 2.0, 10000, 1),
                    std::invalid_argument);

    // Determinism under a fixed seed.
    const auto a = px_monte_carlo_oracle(0.5, 1.0, 2.0, 20000, 99);
    const auto b = px_monte_carlo_oracle(0.5, 1.0, 2.0, 20000, 99);
    CHECK(a.first == b.first);

    // Standard error shrinks like 1/sqrt(samples).
    const auto small = px_monte_carlo_oracle(0.5, 1.0, 2.0, 10000, 5);
    const auto large = px_monte_carlo_oracle(0.5, 1.0, 2.0, 160000, 5);
    CHECK(small.second / large.second > 2.5);
    CHECK(small.second / large.second < 6.0);

    // Degenerate-exponential regime: matches the uniform-offset limit.
    const auto thin = px_monte_carlo_oracle(0.0, 0.1, 2.0, 200000, 17);
    CHECK(std::abs(thin.first - p_x_retry(1e-9, 0.1, 2.0)) <= 4.0 * thin.second);
}

TEST_CASE("the battery spans six decades of r*t") {
    const auto pts = px_battery();
    REQUIRE(pts.size() == 10);
    double lo = 1e300, hi = 0.0;
    for (const auto& p : pts) {
        lo = std::min(lo, p[0] * p[1]);
        hi = std::max(hi, p[0] * p[1]);
    }
    CHECK(lo <= 1e-6);
    CHECK(hi >= 5.0);
}

TEST_CASE("sweeps are bitwise reproducible, files included") {
    const ScenarioConfig sc = preset();
    const TimingTable t = build_timing_table(sc);
    SweepSpec spec;
    spec.lambda_min = 0.01;
    spec.lambda_max = 0.1;
    spec.points = 4;
    spec.engines = SweepEngines::both;
    spec.sim.seed = 3;
    spec.sim.replications = 2;
    spec.sim.duration = 2000.0;
    spec.sim.warmup = 200.0;
    spec.output_path = "sweep_repro_a.csv";
    run_sweep(spec, sc, t);
    spec.output_path = "sweep_repro_b.csv";
    spec.jobs = 4;  // concurrency must not leak into the numbers
    run_sweep(spec, sc, t);
    CHECK(slurp("sweep_repro_a.csv") == slurp("sweep_repro_b.csv"));
    std::remove("sweep_repro_a.csv");
    std::remove("sweep_repro_b.csv");
}

TEST_CASE("cli entry point") {
    {
        const char* argv[] = {"loracap", "model", "--lambda", "0.05"};
        CHECK(cli_main(4, argv) == 0);
    }
    {
        const char* argv[] = {"loracap", "model", "--lambda", "0.05",
                              "--no-such-flag"};
        CHECK(cli_main(5, argv) != 0);
    }
    {
        const char* argv[] = {"loracap", "frobnicate"};
        CHECK(cli_main(2, argv) != 0);
    }
    {
        const char* argv[] = {"loracap", "sweep",    "--model-only",
                              "--points", "5",       "--out",
                              "cli_sweep_test.csv"};
        CHECK(cli_main(7, argv) == 0);
        std::ifstream f("cli_sweep_test.csv");
        REQUIRE(f.good());
        std::string line;
        int lines = 0;
        while (std::getline(f, line)) ++lines;
        CHECK(lines == 6);  // header + five rows
        std::remove("cli_sweep_test.csv");
    }
    {
        const char* argv[] = {"loracap", "airtime", "--format", "csv"};
        CHECK(cli_main(4, argv) == 0);
    }
    {
        // Single-point oracle check straight from the command line.
        const char* argv[] = {"loracap", "validate-px", "--r", "0.5", "--t",
                              "1.0",     "--samples",   "20000"};
        CHECK(cli_main(8, argv) == 0);
    }
}
