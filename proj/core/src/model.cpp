#include "loracap/model.hpp"

#include <cmath>
#include <stdexcept>

namespace loracap {

double channel_rate_load(double lambda, double p_i, int f) {
    if (lambda < 0.0) throw std::invalid_argument("lambda: must be >= 0");
    if (f < 1) throw std::invalid_argument("f: must be >= 1");
    return lambda * p_i / f;
}

double solve_p_data(double r, double t_data, double t_ack) {
    if (r < 0.0) throw std::invalid_argument("r: must be >= 0");
    if (t_data <= 0.0 || t_ack <= 0.0)
        throw std::invalid_argument("durations: must be > 0");
    if (r == 0.0) return 1.0;

    const auto g = [&](double p) { return std::exp(-(2.0 * t_data + p * t_ack) * r); };
    const double tol = 1e-13;  // residual target 1e-12 with margin
    double p = 1.0;
    // Damped Picard; the map is a contraction for physical parameters.
    for (int it = 0; it < 10000; ++it) {
        const double next = g(p);
        if (std::abs(next - p) < tol) return next;
        p = 0.5 * (p + next);
    }
    // Oscillation or slow convergence: bisection on p - g(p) always terminates.
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid - g(mid) > 0.0) hi = mid; else lo = mid;
        if (hi - lo < tol) {
            const double res = g(hi);
            if (std::abs(res - g(res)) < 1e-12) return res;
            break;
        }
    }
    throw std::runtime_error("solve_p_data: no convergence (pathological inputs)");
}

double p_ack1(double r, double t_data, double t_ack, double t1) {
    if (r < 0.0) throw std::invalid_argument("r: must be >= 0");
    return std::exp(-(std::min(t1, t_data) + t_ack) * r);
}

double p_ack2(double lambda, double p_i, int f,
              const std::vector<double>& p_data_all,
              const RateDistribution& p_all, double t_ack0) {
    if (p_data_all.size() != p_all.size())
        throw std::invalid_argument("p_data_all: length mismatch with p_all");
    double received = 0.0;
    for (std::size_t j = 0; j < p_data_all.size(); ++j)
        received += p_data_all[j] * p_all[j];
    return std::exp(-t_ack0 * lambda * (1.0 - p_i / f) * received);
}

double p_ack_combined(double a1, double a2) {
    return a1 + a2 - a1 * a2;
}

namespace {

struct Moments {
    double m0, m1, m2;
};

// n_k = r * integral of u^k e^{-ru} over [0, d]. Series below r*d = 1, else
// closed form; either way no subtraction of near-equal terms, so the moments
// stay accurate down to the uniform-limit switch.
void local_moments(double r, double d, double& n0, double& n1, double& n2) {
    const double x = r * d;
    n0 = -std::expm1(-x);
    if (x <= 1.0) {
        double s1 = 0.0, s2 = 0.0, term = 1.0;  // term = (-x)^k / k!
        for (int k = 0; k < 30 && std::abs(term) > 1e-20; ++k) {
            s1 += term / (k + 2);
            s2 += term / (k + 3);
            term *= -x / (k + 1);
        }
        n1 = d * x * s1;
        n2 = d * d * x * s2;
    } else {
        const double e = std::exp(-x);
        n1 = (1.0 - e * (1.0 + x)) / r;
        n2 = (2.0 - e * (2.0 + x * (2.0 + x))) / (r * r);
    }
}

// Integrals of x^k against the Exp(r) density truncated to [0, t], taken over
// the sub-interval [a, b]. Shifted to the left endpoint: every term in the
// recombination below is nonnegative.
Moments truncated_exp_moments(double r, double t, double a, double b) {
    const double den = -std::expm1(-r * t);
    const double ea = std::exp(-r * a);
    double n0, n1, n2;
    local_moments(r, b - a, n0, n1, n2);
    const double m0 = ea * n0 / den;
    const double m1 = ea * (a * n0 + n1) / den;
    const double m2 = ea * (a * a * n0 + 2.0 * a * n1 + n2) / den;
    return {m0, m1, m2};
}

// Same integrals with x uniform on [0, t]: the r -> 0 limit.
double px_uniform_offset(double t, double w) {
    if (t <= w / 2.0)
        return (t / (w * w)) * (2.0 * w - 4.0 * t / 3.0);
    if (t <= w) {
        const double edge = w - t;
        const double b_part =
            ((2.0 * w * t - t * t) * edge - edge * edge * edge / 3.0) / (w * w);
        const double q = 2.0 * t - w;
        const double c_part =
            (w * w * q / 2.0 + w * q * q / 2.0 - q * q * q / 6.0) / (w * w);
        return (b_part + c_part) / t;
    }
    // q spans the full [0, w]; the region with q >= w collides surely.
    const double c_part = 5.0 * w / 6.0;
    return ((t - w) + c_part) / t;
}

}  // namespace

double p_x_retry(double r, double t, double w) {
    if (t <= 0.0) throw std::invalid_argument("t: must be > 0");
    if (w <= 0.0) throw std::invalid_argument("w: must be > 0");
    if (r < 0.0) throw std::invalid_argument("r: must be >= 0");

    // Conditional collision probability given the original offset x, q = t - x:
    //   1                           for q >= w
    //   (2wt - t^2 - x^2) / w^2     for x <= w - t
    //   (w^2/2 + wq - q^2/2) / w^2  otherwise
    // averaged over x ~ truncated-Exp(r) on [0, t] via the moment integrals.
    double v;
    if (r * t < 1e-4) {
        // The exponential moments cancel catastrophically here; the uniform
        // limit is exact to far below the tolerance of any consumer.
        v = px_uniform_offset(t, w);
    } else {
        const double c0 = w * w / 2.0 + w * t - t * t / 2.0;
        const double c1 = t - w;
        if (t > w) {
            const Moments sure = truncated_exp_moments(r, t, 0.0, t - w);
            const Moments mid = truncated_exp_moments(r, t, t - w, t);
            v = sure.m0 + (c0 * mid.m0 + c1 * mid.m1 - mid.m2 / 2.0) / (w * w);
        } else if (t <= w / 2.0) {
            const Moments all = truncated_exp_moments(r, t, 0.0, t);
            v = (2.0 * w * t - t * t - all.m2) / (w * w);
        } else {
            const Moments low = truncated_exp_moments(r, t, 0.0, w - t);
            const Moments mid = truncated_exp_moments(r, t, w - t, t);
            v = ((2.0 * w * t - t * t) * low.m0 - low.m2) / (w * w) +
                (c0 * mid.m0 + c1 * mid.m1 - mid.m2 / 2.0) / (w * w);
        }
    }
    if (v < -1e-9 || v > 1.0 + 1e-9)
        throw std::runtime_error("p_x_retry: numeric instability, value " +
                                 std::to_string(v));
    return std::min(std::max(v, 0.0), 1.0);
}

double p_data_retry(double p_x, int f) {
    if (p_x < 0.0 || p_x > 1.0)
        throw std::invalid_argument("p_x: must lie in [0,1]");
    if (f < 1) throw std::invalid_argument("f: must be >= 1");
    const double v = 1.0 - 2.0 * p_x / f;
    if (v < -1e-12 || v > 1.0 + 1e-12)
        throw std::domain_error("p_data_retry: 1 - 2*p_x/f = " +
                                std::to_string(v) + " lies outside [0,1]");
    return std::min(std::max(v, 0.0), 1.0);
}

std::pair<double, std::vector<PerRateModel>>
p_success_first(const ScenarioConfig& config, const TimingTable& timing,
                double lambda) {
    const int n = static_cast<int>(config.rates.size());
    std::vector<PerRateModel> per_rate(n);
    std::vector<double> p_data_all(n);
    for (int i = 0; i < n; ++i) {
        PerRateModel& m = per_rate[i];
        m.r = channel_rate_load(lambda, config.rates[i], config.n_channels);
        m.p_data = solve_p_data(m.r, timing.t_data[i], timing.t_ack[i]);
        p_data_all[i] = m.p_data;
    }
    double p_s1 = 0.0;
    for (int i = 0; i < n; ++i) {
        PerRateModel& m = per_rate[i];
        m.p_ack1 = p_ack1(m.r, timing.t_data[i], timing.t_ack[i], timing.t1);
        m.p_ack2 = p_ack2(lambda, config.rates[i], config.n_channels, p_data_all,
                          config.rates, timing.t_ack[0]);
        m.p_ack = p_ack_combined(m.p_ack1, m.p_ack2);
        p_s1 += config.rates[i] * m.p_data * m.p_ack;
    }
    return {p_s1, std::move(per_rate)};
}

double p_success_retry(const ScenarioConfig& config, const TimingTable& timing,
                       double lambda) {
    auto [p_s1, per_rate] = p_success_first(config, timing, lambda);
    (void)p_s1;
    double p_s_re = 0.0;
    for (std::size_t i = 0; i < per_rate.size(); ++i) {
        const double px = p_x_retry(per_rate[i].r, timing.t_data[i],
                                    config.retry_window_w);
        p_s_re += config.rates[i] * p_data_retry(px, config.n_channels) *
                  per_rate[i].p_ack;
    }
    return p_s_re;
}

double p_new_frame(const ScenarioConfig& config, const TimingTable& timing,
                   double lambda) {
    if (config.n_motes < 1) throw std::invalid_argument("n_motes: must be >= 1");
    const double per_mote = lambda / config.n_motes;
    double p_n = 0.0;
    for (std::size_t i = 0; i < config.rates.size(); ++i) {
        const double cycle =
            timing.t_data[i] + timing.t2 + timing.t_ack[0] + timing.t_wait_mean;
        p_n += config.rates[i] * std::exp(-per_mote * cycle);
    }
    return p_n;
}

double p_first_attempt(double p_s1, double p_s_re, double p_n, int rl) {
    if (rl < 0) throw std::invalid_argument("rl: must be >= 0");
    double sum = 0.0;
    double term = p_n;  // (1 - p_s_re)^r * p_n^{r+1} at r = 0
    for (int r = 0; r <= rl; ++r) {
        sum += term;
        term *= (1.0 - p_s_re) * p_n;
    }
    return 1.0 / (1.0 + (1.0 - p_s1) * sum);
}

double lambda_star(const ScenarioConfig& config, const TimingTable& timing) {
    if (config.retry_limit < 1)
        throw std::invalid_argument("retry_limit: must be >= 1 for lambda_star");
    double bracket = 0.0;
    for (std::size_t i = 0; i < config.rates.size(); ++i)
        bracket += config.rates[i] * (timing.t_data[i] + timing.t2 +
                                      timing.t_ack[0] + timing.t_wait_mean);
    return config.n_channels / (bracket * config.retry_limit);
}

ModelResult evaluate_model(const ScenarioConfig& config,
                           const TimingTable& timing, double lambda) {
    ModelResult out;
    auto [p_s1, per_rate] = p_success_first(config, timing, lambda);
    out.p_s1 = p_s1;
    out.p_s_re = 0.0;
    for (std::size_t i = 0; i < per_rate.size(); ++i) {
        PerRateModel& m = per_rate[i];
        m.p_x = p_x_retry(m.r, timing.t_data[i], config.retry_window_w);
        m.p_data_re = p_data_retry(m.p_x, config.n_channels);
        out.p_s_re += config.rates[i] * m.p_data_re * m.p_ack;
    }
    out.per_rate = std::move(per_rate);
    out.p_n = p_new_frame(config, timing, lambda);
    out.p_1 = p_first_attempt(out.p_s1, out.p_s_re, out.p_n, config.retry_limit);
    out.p_s = out.p_1 * out.p_s1 + (1.0 - out.p_1) * out.p_s_re;
    out.per = 1.0 - out.p_s;
    out.per1 = 1.0 - out.p_s1;
    out.lambda_star = lambda_star(config, timing);
    return out;
}

}  // namespace loracap
