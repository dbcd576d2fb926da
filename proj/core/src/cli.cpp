#include <array>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "loracap/airtime.hpp"
#include "loracap/model.hpp"
#include "loracap/scenario.hpp"
#include "loracap/simulator.hpp"
#include "loracap/sweep.hpp"

namespace loracap {

std::vector<std::array<double, 3>> px_battery() {
    // (r, t, w) spanning r*t from 1e-6 to 5, covering the uniform-limit
    // switch and all three geometry branches (t <= w/2, w/2 < t <= w, t > w).
    return {{
        {2e-6, 0.5, 2.0},
        {5e-5, 1.0, 2.0},
        {1e-3, 0.1, 2.0},
        {0.01, 0.5, 2.0},
        {0.1, 1.0, 2.0},
        {0.5, 1.0, 2.0},
        {0.5, 1.5, 2.0},
        {1.0, 2.793472, 2.0},
        {2.0, 1.0, 2.0},
        {5.0, 1.0, 2.0},
    }};
}

namespace {

struct ScenarioArgs {
    std::string preset = "reference";
    std::string file;
};

void add_scenario_options(CLI::App* cmd, ScenarioArgs& a) {
    cmd->add_option("--preset", a.preset, "Named preset (reference)")
        ->capture_default_str();
    cmd->add_option("--scenario", a.file, "Scenario config file (JSON)");
}

ScenarioConfig resolve_scenario(const ScenarioArgs& a) {
    if (!a.file.empty()) return load_scenario_file(a.file);
    if (a.preset == "reference") return validate_scenario(reference_preset());
    throw std::invalid_argument("preset: unknown preset '" + a.preset + "'");
}

void print_airtime(const ScenarioConfig& sc, const TimingTable& t,
                   const std::string& format) {
    if (format == "csv") {
        std::printf("rate,spreading_factor,bandwidth_hz,t_data_s,t_ack_s\n");
        for (std::size_t i = 0; i < t.t_data.size(); ++i)
            std::printf("%zu,%d,%.12g,%.12g,%.12g\n", i,
                        sc.radio.spreading_factor[i], sc.radio.bandwidth_hz[i],
                        t.t_data[i], t.t_ack[i]);
        return;
    }
    std::printf("%-5s %-3s %-10s %-12s %-12s\n", "rate", "sf", "bw_hz",
                "t_data_ms", "t_ack_ms");
    for (std::size_t i = 0; i < t.t_data.size(); ++i)
        std::printf("%-5zu %-3d %-10.0f %-12.3f %-12.3f\n", i,
                    sc.radio.spreading_factor[i], sc.radio.bandwidth_hz[i],
                    t.t_data[i] * 1e3, t.t_ack[i] * 1e3);
    std::printf("t1 = %.3f s, t2 = %.3f s, t_wait_mean = %.3f s\n", t.t1, t.t2,
                t.t_wait_mean);
}

void print_model(const ModelResult& m, double lambda, const std::string& format) {
    const bool valid = lambda <= m.lambda_star;
    if (format == "kv") {
        std::printf("lambda=%.12g\n", lambda);
        std::printf("per=%.12g\n", m.per);
        std::printf("per1=%.12g\n", m.per1);
        std::printf("lambda_star=%.12g\n", m.lambda_star);
        std::printf("valid=%d\n", valid ? 1 : 0);
        std::printf("p_s1=%.12g\np_s_re=%.12g\np_n=%.12g\np_1=%.12g\np_s=%.12g\n",
                    m.p_s1, m.p_s_re, m.p_n, m.p_1, m.p_s);
        for (std::size_t i = 0; i < m.per_rate.size(); ++i) {
            const PerRateModel& pr = m.per_rate[i];
            std::printf("rate%zu.r=%.12g\nrate%zu.p_data=%.12g\nrate%zu.p_ack=%.12g\n"
                        "rate%zu.p_x=%.12g\nrate%zu.p_data_re=%.12g\n",
                        i, pr.r, i, pr.p_data, i, pr.p_ack, i, pr.p_x, i,
                        pr.p_data_re);
        }
        return;
    }
    std::printf("lambda       %.6g frames/s\n", lambda);
    std::printf("lambda_star  %.6g frames/s (%s validity region)\n", m.lambda_star,
                valid ? "within" : "outside");
    std::printf("PER          %.6g\n", m.per);
    std::printf("PER1         %.6g\n", m.per1);
    std::printf("P_S1 %.6g  P_SRe %.6g  P_N %.6g  P_1 %.6g\n", m.p_s1, m.p_s_re,
                m.p_n, m.p_1);
    std::printf("%-4s %-10s %-10s %-10s %-10s %-10s %-10s %-10s\n", "rate", "r",
                "p_data", "p_ack1", "p_ack2", "p_ack", "p_x", "p_data_re");
    for (std::size_t i = 0; i < m.per_rate.size(); ++i) {
        const PerRateModel& pr = m.per_rate[i];
        std::printf("%-4zu %-10.4g %-10.6g %-10.6g %-10.6g %-10.6g %-10.6g %-10.6g\n",
                    i, pr.r, pr.p_data, pr.p_ack1, pr.p_ack2, pr.p_ack, pr.p_x,
                    pr.p_data_re);
    }
}

void print_sim(double lambda, const SimConfig& sim, const SimStats& s) {
    std::printf(
        "lambda,replications,attempts,attempts_ok,per,per_ci,per1,per1_ci,"
        "generated,delivered,dropped,superseded,in_flight,audit_violations\n");
    std::printf("%.12g,%d,%lld,%lld,%.12g,%.12g,%.12g,%.12g,%lld,%lld,%lld,%lld,"
                "%lld,%lld\n",
                lambda, sim.replications, s.attempts, s.attempts_ok, s.per,
                s.per_ci, s.per1, s.per1_ci, s.frames_generated,
                s.frames_delivered, s.frames_dropped, s.frames_superseded,
                s.frames_in_flight, s.audit_violations);
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
    CLI::App app{"LoRaWAN class-A capacity analysis: analytic PER model and "
                 "seeded discrete-event simulator"};
    app.require_subcommand(1);

    const auto format_check = CLI::IsMember({"text", "csv"});
    const auto model_format_check = CLI::IsMember({"text", "kv"});
    const auto engines_check = CLI::IsMember({"model", "sim", "both"});

    ScenarioArgs airtime_sc;
    std::string airtime_format = "text";
    CLI::App* airtime_cmd =
        app.add_subcommand("airtime", "Print the per-rate timing table");
    add_scenario_options(airtime_cmd, airtime_sc);
    airtime_cmd->add_option("--format", airtime_format, "text or csv")
        ->check(format_check)
        ->capture_default_str();

    ScenarioArgs model_sc;
    double model_lambda = 0.0;
    std::string model_format = "text";
    CLI::App* model_cmd =
        app.add_subcommand("model", "Evaluate the analytic model at one load");
    add_scenario_options(model_cmd, model_sc);
    model_cmd->add_option("--lambda", model_lambda, "Offered load, frames/s")
        ->required()
        ->check(CLI::NonNegativeNumber);
    model_cmd->add_option("--format", model_format, "text or kv")
        ->check(model_format_check)
        ->capture_default_str();

    ScenarioArgs sim_sc;
    double sim_lambda = 0.0;
    SimConfig sim_cfg;
    sim_cfg.duration = 1e4;
    CLI::App* sim_cmd =
        app.add_subcommand("simulate", "Run the discrete-event simulator");
    add_scenario_options(sim_cmd, sim_sc);
    sim_cmd->add_option("--lambda", sim_lambda, "Offered load, frames/s")
        ->required()
        ->check(CLI::NonNegativeNumber);
    sim_cmd->add_option("--duration", sim_cfg.duration, "Simulated seconds")
        ->capture_default_str();
    sim_cmd->add_option("--warmup", sim_cfg.warmup,
                        "Seconds excluded from statistics")
        ->capture_default_str();
    sim_cmd->add_option("--seed", sim_cfg.seed, "Master RNG seed")
        ->capture_default_str();
    sim_cmd->add_option("--replications", sim_cfg.replications,
                        "Independent replications")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    sim_cmd->add_option("--trace", sim_cfg.trace_path,
                        "Write a per-event trace (first replication)");
    sim_cmd->add_flag("--rate-decrement", sim_cfg.rate_decrement_on_failures,
                      "Lower the data rate after every 2 consecutive failures");
    sim_cmd->add_flag("--audit", sim_cfg.audit,
                      "Post-run overlap audit of every successful attempt");

    ScenarioArgs sweep_sc;
    SweepSpec sweep_spec;
    sweep_spec.sim.replications = 3;
    sweep_spec.sim.warmup = 2000.0;
    sweep_spec.sim.duration = 0.0;  // auto-scale
    sweep_spec.output_path = "sweep.csv";
    std::string sweep_engines = "both";
    bool model_only = false;
    CLI::App* sweep_cmd = app.add_subcommand(
        "sweep", "PER versus load over a log grid, model and simulator");
    add_scenario_options(sweep_cmd, sweep_sc);
    sweep_cmd->add_option("--lambda-min", sweep_spec.lambda_min, "Grid start")
        ->capture_default_str();
    sweep_cmd->add_option("--lambda-max", sweep_spec.lambda_max, "Grid end")
        ->capture_default_str();
    sweep_cmd->add_option("--points", sweep_spec.points, "Grid points")
        ->capture_default_str();
    sweep_cmd->add_option("--engines", sweep_engines, "model, sim or both")
        ->check(engines_check)
        ->capture_default_str();
    sweep_cmd->add_flag("--model-only", model_only,
                        "Shorthand for --engines model");
    sweep_cmd->add_option("--out", sweep_spec.output_path, "CSV output path")
        ->capture_default_str();
    sweep_cmd->add_option("--seed", sweep_spec.sim.seed, "Master RNG seed")
        ->capture_default_str();
    sweep_cmd->add_option("--replications", sweep_spec.sim.replications,
                          "Replications per point")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    sweep_cmd->add_option("--duration", sweep_spec.sim.duration,
                          "Simulated seconds per replication (0 = auto)")
        ->capture_default_str();
    sweep_cmd->add_option("--warmup", sweep_spec.sim.warmup,
                          "Seconds excluded from statistics")
        ->capture_default_str();
    sweep_cmd->add_option("--target-attempts", sweep_spec.target_attempts,
                          "Auto-scaling target per replication")
        ->capture_default_str();
    sweep_cmd->add_option("--max-sim-time", sweep_spec.max_sim_time_s,
                          "Budget cap on simulated seconds per replication")
        ->capture_default_str();
    sweep_cmd->add_option("--jobs", sweep_spec.jobs, "Concurrent grid points")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();

    double px_r = -1.0, px_t = 0.0, px_w = 2.0;
    long px_samples = 1000000;
    std::uint64_t px_seed = 7;
    CLI::App* px_cmd = app.add_subcommand(
        "validate-px",
        "Check the retry-collision closed form against its Monte-Carlo oracle");
    px_cmd->add_option("--r", px_r, "Channel load (omit to run the battery)");
    px_cmd->add_option("--t", px_t, "Frame duration");
    px_cmd->add_option("--w", px_w, "Backoff window width")->capture_default_str();
    px_cmd->add_option("--samples", px_samples, "Monte-Carlo samples")
        ->capture_default_str();
    px_cmd->add_option("--seed", px_seed, "RNG seed")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (airtime_cmd->parsed()) {
            const ScenarioConfig sc = resolve_scenario(airtime_sc);
            print_airtime(sc, build_timing_table(sc), airtime_format);
        } else if (model_cmd->parsed()) {
            const ScenarioConfig sc = resolve_scenario(model_sc);
            const TimingTable t = build_timing_table(sc);
            print_model(evaluate_model(sc, t, model_lambda), model_lambda,
                        model_format);
        } else if (sim_cmd->parsed()) {
            const ScenarioConfig sc = resolve_scenario(sim_sc);
            const TimingTable t = build_timing_table(sc);
            print_sim(sim_lambda, sim_cfg,
                      run_simulation(sc, t, sim_lambda, sim_cfg));
        } else if (sweep_cmd->parsed()) {
            if (model_only) sweep_engines = "model";
            sweep_spec.engines = sweep_engines == "model"
                                     ? SweepEngines::model_only
                                     : sweep_engines == "sim"
                                           ? SweepEngines::sim_only
                                           : SweepEngines::both;
            const ScenarioConfig sc = resolve_scenario(sweep_sc);
            const TimingTable t = build_timing_table(sc);
            const SweepResult res = run_sweep(sweep_spec, sc, t);
            std::printf("lambda_star = %.12g frames/s\n", res.lambda_star);
            std::printf("wrote %zu rows to %s\n", res.rows.size(),
                        sweep_spec.output_path.c_str());
        } else if (px_cmd->parsed()) {
            std::vector<std::array<double, 3>> points;
            if (px_r >= 0.0) {
                if (px_t <= 0.0)
                    throw std::invalid_argument("--t: must be > 0 with --r");
                points.push_back({px_r, px_t, px_w});
            } else {
                points = px_battery();
            }
            std::printf("%-10s %-10s %-6s %-14s %-14s %-10s %-8s\n", "r", "t", "w",
                        "closed_form", "monte_carlo", "std_err", "sigmas");
            bool all_ok = true;
            for (std::size_t i = 0; i < points.size(); ++i) {
                const auto [r, t, w] = points[i];
                const double closed = p_x_retry(r, t, w);
                const auto [mc, se] =
                    px_monte_carlo_oracle(r, t, w, px_samples,
                                          derive_seed(px_seed, i));
                const double sigmas = se > 0.0 ? std::abs(closed - mc) / se : 0.0;
                const bool ok = std::abs(closed - mc) <= 4.0 * se;
                all_ok = all_ok && ok;
                std::printf("%-10.3g %-10.6g %-6.3g %-14.9f %-14.9f %-10.3g %-8.2f%s\n",
                            r, t, w, closed, mc, se, sigmas, ok ? "" : "  FAIL");
            }
            return all_ok ? 0 : 1;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}

}  // namespace loracap
