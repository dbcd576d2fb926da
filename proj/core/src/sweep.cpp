#include "loracap/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <sstream>
#include <stdexcept>

#include "loracap/model.hpp"

namespace loracap {

namespace {

std::vector<double> log_grid(double lo, double hi, int points) {
    std::vector<double> g(points);
    const double la = std::log(lo);
    const double lb = std::log(hi);
    for (int i = 0; i < points; ++i)
        g[i] = std::exp(la + (lb - la) * i / (points - 1));
    g.front() = lo;
    g.back() = hi;
    return g;
}

}  // namespace

SweepResult run_sweep(const SweepSpec& spec, const ScenarioConfig& scenario,
                      const TimingTable& timing) {
    if (!(spec.lambda_min > 0.0))
        throw std::invalid_argument("lambda_min: must be > 0");
    if (!(spec.lambda_max > spec.lambda_min))
        throw std::invalid_argument("lambda_max: must exceed lambda_min");
    if (spec.points < 2) throw std::invalid_argument("points: must be >= 2");
    if (spec.target_attempts < 1)
        throw std::invalid_argument("target_attempts: must be >= 1");

    const std::vector<double> grid =
        log_grid(spec.lambda_min, spec.lambda_max, spec.points);
    const double ls = lambda_star(scenario, timing);
    const bool want_sim = spec.engines != SweepEngines::model_only;

    auto eval_point = [&](int i) {
        SweepRow row;
        row.lambda = grid[i];
        const ModelResult m = evaluate_model(scenario, timing, grid[i]);
        row.model_per = m.per;
        row.model_per1 = m.per1;
        row.valid = grid[i] <= ls;
        if (want_sim) {
            SimConfig sc = spec.sim;
            sc.seed = derive_seed(spec.sim.seed, static_cast<std::uint64_t>(i));
            if (sc.duration <= 0.0) {
                // Enough simulated time for target_attempts per replication,
                // within the deterministic budget cap.
                sc.duration = std::min(sc.warmup + spec.target_attempts / grid[i],
                                       spec.max_sim_time_s);
                if (sc.duration <= sc.warmup)
                    throw std::invalid_argument(
                        "max_sim_time_s: budget cap leaves no room after warmup");
            }
            const SimStats s = run_simulation(scenario, timing, grid[i], sc);
            row.has_sim = s.per_defined;
            if (s.per_defined) {
                row.sim_per = s.per;
                row.sim_per_ci = s.per_ci;
                row.sim_per1 = s.per1;
                row.sim_per1_ci = s.per1_ci;
            }
        }
        return row;
    };

    SweepResult out;
    out.lambda_star = ls;
    out.rows.resize(spec.points);
    if (spec.jobs <= 1) {
        for (int i = 0; i < spec.points; ++i) out.rows[i] = eval_point(i);
    } else {
        // Points are independent; per-point seeds keep the result identical
        // to the serial order regardless of scheduling.
        for (int base = 0; base < spec.points; base += spec.jobs) {
            const int end = std::min(base + spec.jobs, spec.points);
            std::vector<std::future<SweepRow>> wave;
            for (int i = base; i < end; ++i)
                wave.push_back(
                    std::async(std::launch::async, [&eval_point, i] { return eval_point(i); }));
            for (int i = base; i < end; ++i) out.rows[i] = wave[i - base].get();
        }
    }
    if (!spec.output_path.empty()) write_csv(out.rows, spec.output_path);
    return out;
}

std::pair<double, double> px_monte_carlo_oracle(double r, double t, double w,
                                                long samples,
                                                std::uint64_t seed) {
    if (samples < 10000)
        throw std::invalid_argument("samples: need >= 10^4");
    if (t <= 0.0 || w <= 0.0 || r < 0.0)
        throw std::invalid_argument("px oracle: need t > 0, w > 0, r >= 0");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::uniform_real_distribution<double> uw(0.0, w);
    const double etr = -std::expm1(-r * t);  // 1 - e^{-rt}
    long hits = 0;
    for (long i = 0; i < samples; ++i) {
        double x;
        if (r * t < 1e-12)
            x = u01(rng) * t;  // truncated exponential degenerates to uniform
        else
            x = -std::log1p(-u01(rng) * etr) / r;
        const double y = uw(rng);
        const double z = x + uw(rng);
        if (std::abs(z - y) < t) ++hits;  // [y,y+t] and [z,z+t] overlap
    }
    const double p = double(hits) / double(samples);
    const double se = std::sqrt(p * (1.0 - p) / double(samples));
    return {p, se};
}

namespace {

constexpr const char* kCsvHeader =
    "lambda,model_per,model_per1,valid,sim_per,sim_per_ci,sim_per1,sim_per1_ci";

void put(std::ostream& out, double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    out << buf;
}

}  // namespace

void write_csv(const std::vector<SweepRow>& rows, std::ostream& out) {
    if (rows.empty()) throw std::invalid_argument("write_csv: no rows");
    out << kCsvHeader << '\n';
    for (const SweepRow& r : rows) {
        put(out, r.lambda);
        out << ',';
        put(out, r.model_per);
        out << ',';
        put(out, r.model_per1);
        out << ',' << (r.valid ? 1 : 0);
        if (r.has_sim) {
            out << ',';
            put(out, r.sim_per);
            out << ',';
            put(out, r.sim_per_ci);
            out << ',';
            put(out, r.sim_per1);
            out << ',';
            put(out, r.sim_per1_ci);
        } else {
            out << ",,,,";
        }
        out << '\n';
    }
}

void write_csv(const std::vector<SweepRow>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_csv: cannot open " + path);
    write_csv(rows, out);
    if (!out) throw std::runtime_error("write_csv: write failed for " + path);
}

std::vector<SweepRow> read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kCsvHeader)
        throw std::invalid_argument("read_csv: bad header");
    std::vector<SweepRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::string cur;
        std::istringstream ls(line);
        while (std::getline(ls, cur, ',')) f.push_back(cur);
        while (f.size() < 8) f.push_back("");
        if (f.size() != 8)
            throw std::invalid_argument("read_csv: bad row: " + line);
        SweepRow r;
        r.lambda = std::stod(f[0]);
        r.model_per = std::stod(f[1]);
        r.model_per1 = std::stod(f[2]);
        r.valid = std::stoi(f[3]) != 0;
        r.has_sim = !f[4].empty();
        if (r.has_sim) {
            r.sim_per = std::stod(f[4]);
            r.sim_per_ci = std::stod(f[5]);
            r.sim_per1 = std::stod(f[6]);
            r.sim_per1_ci = std::stod(f[7]);
        }
        rows.push_back(r);
    }
    return rows;
}

}  // namespace loracap
