#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "loracap/scenario.hpp"
#include "loracap/simulator.hpp"

namespace loracap {

enum class SweepEngines { model_only, sim_only, both };

struct SweepSpec {
    double lambda_min = 1e-3;        // default grid brackets the avalanche decade
    double lambda_max = 1e1;
    int points = 25;
    SweepEngines engines = SweepEngines::both;
    SimConfig sim;                   // sim.duration == 0 -> auto-scale per point
    std::string output_path;
    double target_attempts = 1e4;    // per replication, drives auto-scaling
    double max_sim_time_s = 2e6;     // deterministic budget cap per replication
    int jobs = 1;                    // concurrent points; rows stay in grid order
};

struct SweepRow {
    double lambda = 0.0;
    double model_per = 0.0;
    double model_per1 = 0.0;
    bool valid = false;              // lambda <= lambda_star
    bool has_sim = false;
    double sim_per = 0.0;
    double sim_per_ci = 0.0;
    double sim_per1 = 0.0;
    double sim_per1_ci = 0.0;
};

struct SweepResult {
    double lambda_star = 0.0;        // reported once, ahead of the rows
    std::vector<SweepRow> rows;
};

// One row per log-spaced grid point, ordered by lambda. Model columns always
// filled; sim columns when requested. Per-point RNG streams derive from
// (sim.seed, point index), so results do not depend on jobs.
SweepResult run_sweep(const SweepSpec& spec, const ScenarioConfig& scenario,
                      const TimingTable& timing);

// Monte-Carlo estimate of the retry-collision probability from its integral
// definition: x ~ truncated-Exp(r) on [0,t], y ~ U[0,w], z ~ x + U[0,w],
// counts overlap of [y, y+t] and [z, z+t]. Returns (estimate, standard error).
// Oracle for p_x_retry; requires samples >= 1e4.
std::pair<double, double> px_monte_carlo_oracle(double r, double t, double w,
                                                long samples,
                                                std::uint64_t seed);

// Header plus one row per SweepRow, columns
// lambda,model_per,model_per1,valid,sim_per,sim_per_ci,sim_per1,sim_per1_ci,
// 12 significant digits, absent engine columns left empty.
void write_csv(const std::vector<SweepRow>& rows, std::ostream& out);
void write_csv(const std::vector<SweepRow>& rows, const std::string& path);
std::vector<SweepRow> read_csv(std::istream& in);

// Default (r, t, w) point set behind `validate-px`: spans r*t over six orders
// of magnitude and exercises every branch of the closed form.
std::vector<std::array<double, 3>> px_battery();

// Entry point behind the `loracap` binary: subcommands airtime, model,
// simulate, sweep, validate-px.
int cli_main(int argc, const char* const* argv);

}  // namespace loracap
