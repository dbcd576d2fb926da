#pragma once

#include <utility>
#include <vector>

#include "loracap/scenario.hpp"

namespace loracap {

// Per-rate factors of the analytic chain. All entries are probabilities
// except r (per-channel per-rate load, frames/s).
struct PerRateModel {
    double r = 0.0;
    double p_data = 1.0;      // data frame survives its first-attempt window
    double p_ack1 = 1.0;
    double p_ack2 = 1.0;
    double p_ack = 1.0;       // p_ack1 + p_ack2 - p_ack1*p_ack2
    double p_x = 0.0;         // repeat-collision probability for retries
    double p_data_re = 1.0;   // 1 - 2*p_x/F

    bool operator==(const PerRateModel&) const = default;
};

struct ModelResult {
    std::vector<PerRateModel> per_rate;
    double p_s1 = 1.0;        // first-attempt success, rate-averaged
    double p_s_re = 1.0;      // retry success, rate-averaged
    double p_n = 1.0;         // no newer frame preempts a retry
    double p_1 = 1.0;         // a random attempt is a first attempt
    double p_s = 1.0;         // per-attempt success
    double per = 0.0;         // 1 - p_s
    double per1 = 0.0;        // 1 - p_s1
    double lambda_star = 0.0; // validity threshold, frames/s

    bool operator==(const ModelResult&) const = default;
};

// lambda * p_i / f.
double channel_rate_load(double lambda, double p_i, int f);

// Unique fixed point P in (0,1] of P = exp(-(2*t_data + P*t_ack)*r), residual
// below 1e-12. Damped Picard from P=1 with a bisection fallback; throws
// std::runtime_error if the iteration cap is hit.
double solve_p_data(double r, double t_data, double t_ack);

// exp(-(min(t1, t_data) + t_ack) * r).
double p_ack1(double r, double t_data, double t_ack, double t1);

// exp(-t_ack0 * lambda * (1 - p_i/f) * sum_j p_data_all[j] * p_all[j]).
double p_ack2(double lambda, double p_i, int f,
              const std::vector<double>& p_data_all,
              const RateDistribution& p_all, double t_ack0);

// a1 + a2 - a1*a2.
double p_ack_combined(double a1, double a2);

// Rate-averaged first-attempt success probability with its per-rate
// breakdown (r, p_data, p_ack1, p_ack2, p_ack filled; retry fields default).
std::pair<double, std::vector<PerRateModel>>
p_success_first(const ScenarioConfig& config, const TimingTable& timing,
                double lambda);

// Probability that a retransmission collides with the retransmission of the
// frame it originally collided with, given both back off uniformly over a
// window of width w and the original offset x is truncated-Exp(r) on [0, t].
// Exact piecewise evaluation; switches to the uniform-offset limit
// (t/w^2)(2w - 4t/3) and its long-frame counterparts for r*t < 1e-4 where the
// exponential moments cancel catastrophically. Throws std::runtime_error if
// the evaluation lands outside [-1e-9, 1+1e-9]; otherwise clamps to [0,1].
double p_x_retry(double r, double t, double w);

// 1 - 2*p_x/f. Throws std::domain_error if the result falls outside [0,1]
// (possible for small f with long frames); clamps only within 1e-12 slack.
double p_data_retry(double p_x, int f);

// Retry success probability: the first-attempt chain with p_data replaced by
// p_data_retry per rate, ACK factors unchanged.
double p_success_retry(const ScenarioConfig& config, const TimingTable& timing,
                       double lambda);

// Probability that no newer frame arrives at the mote during one full
// attempt cycle: sum_i p_i * exp(-(lambda/N)(t_data_i + t2 + t_ack0 + t_wait)).
double p_new_frame(const ScenarioConfig& config, const TimingTable& timing,
                   double lambda);

// (1 + (1 - p_s1) * sum_{r=0}^{rl} (1 - p_s_re)^r * p_n^(r+1))^-1, in (0,1].
double p_first_attempt(double p_s1, double p_s_re, double p_n, int rl);

// Load threshold beyond which retries pile up faster than they resolve:
// f / (sum_i p_i (t_data_i + t2 + t_ack0 + t_wait) * rl). Requires rl >= 1.
double lambda_star(const ScenarioConfig& config, const TimingTable& timing);

// Full composition: per-rate chain, attempt mixing, per = 1 - p_s,
// per1 = 1 - p_s1, lambda_star. Model validity holds for lambda <= lambda_star.
ModelResult evaluate_model(const ScenarioConfig& config,
                           const TimingTable& timing, double lambda);

}  // namespace loracap
