#include "loracap/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace loracap {

bool collision_rule(const Transmission& a, const Transmission& b) {
    return a.channel == b.channel && a.rate == b.rate &&
           std::max(a.start, b.start) < std::min(a.end, b.end);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t k) {
    // splitmix64 of the (k+1)-th state after base
    std::uint64_t z = base + (k + 1) * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

PerEstimate estimate_per(const std::vector<SimStats>& reps) {
    if (reps.size() < 2)
        throw std::invalid_argument("estimate_per: need >= 2 replications");
    std::vector<double> per, per1;
    for (const SimStats& s : reps) {
        if (!s.per_defined) continue;  // no decided attempts in this replication
        per.push_back(1.0 - double(s.attempts_ok) / double(s.attempts));
        per1.push_back(1.0 - double(s.first_attempts_ok) / double(s.first_attempts));
    }
    if (per.empty())
        throw std::invalid_argument("estimate_per: no replication decided any attempt");
    const auto mean_hw = [](const std::vector<double>& xs) {
        const double n = double(xs.size());
        const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
        if (xs.size() < 2) return std::pair<double, double>{mean, 0.0};
        double ss = 0.0;
        for (double x : xs) ss += (x - mean) * (x - mean);
        const double sd = std::sqrt(ss / (n - 1.0));
        return std::pair<double, double>{mean, 1.96 * sd / std::sqrt(n)};
    };
    PerEstimate e;
    std::tie(e.per, e.per_hw) = mean_hw(per);
    std::tie(e.per1, e.per1_hw) = mean_hw(per1);
    return e;
}

bool Simulation::EventOrder::operator()(const Event& a, const Event& b) const {
    // Min-heap on (time, kind, seq). The kind order is load-bearing in one
    // place: ack2_end and window_close land at exactly the same instant
    // (data end + t2 + t_ack0), and the ACK must win.
    if (a.time != b.time) return a.time > b.time;
    if (a.kind != b.kind) return static_cast<int>(a.kind) > static_cast<int>(b.kind);
    return a.seq > b.seq;
}

Simulation::Simulation(const ScenarioConfig& scenario, const TimingTable& timing,
                       double lambda, const SimConfig& sim, std::uint64_t seed,
                       std::ostream* trace)
    : scenario_(scenario),
      timing_(timing),
      lambda_(lambda),
      cfg_(sim),
      trace_(trace),
      rng_(seed) {
    const int n_rates = static_cast<int>(scenario.rates.size());
    if (static_cast<int>(timing.t_data.size()) != n_rates ||
        static_cast<int>(timing.t_ack.size()) != n_rates)
        throw std::invalid_argument("timing: table does not match the rate count");

    // Largest-remainder apportionment of n_motes over the rate distribution.
    std::vector<int> count(n_rates);
    std::vector<std::pair<double, int>> frac(n_rates);
    int assigned = 0;
    for (int i = 0; i < n_rates; ++i) {
        const double exact = scenario.n_motes * scenario.rates[i];
        count[i] = static_cast<int>(std::floor(exact));
        assigned += count[i];
        frac[i] = {-(exact - count[i]), i};  // descending fraction, ascending index
    }
    std::sort(frac.begin(), frac.end());
    for (int k = 0; k < scenario.n_motes - assigned; ++k)
        count[frac[k % n_rates].second] += 1;

    motes_.resize(scenario.n_motes);
    next_arrival_.assign(scenario.n_motes, 0.0);
    current_data_tx_.assign(scenario.n_motes, -1);
    int id = 0;
    for (int i = 0; i < n_rates; ++i)
        for (int k = 0; k < count[i]; ++k) {
            motes_[id].id = id;
            motes_[id].rate = i;
            ++id;
        }

    active_.resize(static_cast<std::size_t>(scenario.n_channels + 1) * n_rates);
}

void Simulation::schedule(Event ev) {
    ev.seq = next_seq_++;
    queue_.push(ev);
}

void Simulation::trace(double t, int mote, const char* event, int channel,
                       int rate) {
    if (!trace_) return;
    char buf[96];
    std::snprintf(buf, sizeof buf, "%.9f,%d,%s,%d,%d\n", t, mote, event, channel,
                  rate);
    *trace_ << buf;
}

int Simulation::add_transmission(Transmission tx) {
    const int n_rates = static_cast<int>(scenario_.rates.size());
    auto& lst = active_[static_cast<std::size_t>(tx.channel) * n_rates + tx.rate];
    for (auto it = lst.begin(); it != lst.end();) {
        Transmission& other = txs_[*it];
        if (other.end <= tx.start) {
            it = lst.erase(it);  // can no longer collide with any future start
            continue;
        }
        if (!cfg_.disable_collisions && collision_rule(other, tx)) {
            other.doomed = true;
            tx.doomed = true;  // mutual, no capture
        }
        ++it;
    }
    const int idx = static_cast<int>(txs_.size());
    txs_.push_back(tx);
    attempt_ok_.push_back(0);
    lst.push_back(idx);
    return idx;
}

bool Simulation::gateway_busy_rx(int channel, double t) const {
    // Mid-reception of any data frame on the channel, at any rate; collided
    // frames keep the demodulator busy all the same.
    const int n_rates = static_cast<int>(scenario_.rates.size());
    for (int r = 0; r < n_rates; ++r) {
        for (int idx : active_[static_cast<std::size_t>(channel) * n_rates + r]) {
            const Transmission& tx = txs_[idx];
            if (tx.kind == TxKind::data && tx.start < t && t < tx.end) return true;
        }
    }
    return false;
}

void Simulation::schedule_arrival(int mote) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double dt = -std::log1p(-u(rng_)) * scenario_.n_motes / lambda_;
    next_arrival_[mote] = now_ + dt;
    schedule({now_ + dt, Ev::arrival, 0, mote, -1, 0, -1});
    if (motes_[mote].phase == Phase::idle)
        motes_[mote].next_event_time = next_arrival_[mote];
}

void Simulation::start_attempt(MoteState& st, long frame_id, int attempt,
                               bool counted, int frame_rate,
                               int consecutive_failures) {
    st.busy = true;
    st.frame_id = frame_id;
    st.attempt = attempt;
    st.counted = counted;
    st.frame_rate = frame_rate;
    st.consecutive_failures = consecutive_failures;
    st.phase = Phase::transmitting;

    std::uniform_int_distribution<int> pick(0, scenario_.n_channels - 1);
    const int channel = pick(rng_);
    const double dur = timing_.t_data[frame_rate];
    Transmission tx{TxKind::data, channel, frame_rate, now_, now_ + dur,
                    st.id,        false,   frame_id,   attempt};
    const int idx = add_transmission(tx);
    current_data_tx_[st.id] = idx;
    schedule({now_ + dur, Ev::tx_end, 0, st.id, frame_id, attempt, idx});
    st.next_event_time = now_ + dur;
    trace(now_, st.id, "tx_start", channel, frame_rate);
}

void Simulation::start_pending(MoteState& st) {
    const long fid = st.pending_id;
    const bool counted = st.pending_counted;
    st.has_pending = false;
    st.pending_id = -1;
    st.pending_counted = false;
    start_attempt(st, fid, 1, counted, st.rate, 0);
}

void Simulation::finish_attempt(MoteState& st, bool ok) {
    if (st.counted) {
        stats_.attempts += 1;
        if (ok) stats_.attempts_ok += 1;
        if (st.attempt == 1) {
            stats_.first_attempts += 1;
            if (ok) stats_.first_attempts_ok += 1;
        }
    }
    if (!ok) {
        st.consecutive_failures += 1;
        if (cfg_.rate_decrement_on_failures && st.consecutive_failures % 2 == 0)
            st.frame_rate = std::max(st.frame_rate - 1, 0);
    }
}

void Simulation::deliver(MoteState& st, const Event& ev) {
    finish_attempt(st, true);
    if (st.counted) stats_.frames_delivered += 1;
    attempt_ok_[current_data_tx_[st.id]] = 1;
    trace(now_, st.id, "deliver", -1, st.frame_rate);
    st.busy = false;
    (void)ev;
    if (st.has_pending) {
        start_pending(st);
    } else {
        st.phase = Phase::idle;
        st.next_event_time = next_arrival_[st.id];
    }
}

void Simulation::gw_ack_start(const Event& ev) {
    // Copies, not a reference: add_transmission below may grow txs_.
    const int data_channel = txs_[ev.tx].channel;
    const int data_rate = txs_[ev.tx].rate;
    if (ev.kind == Ev::ack1_start) {
        if (gateway_busy_rx(data_channel, now_)) {
            trace(now_, ev.mote, "ack1_cancel", data_channel, data_rate);
            return;
        }
        const int ack_rate =
            std::max(data_rate - scenario_.radio.ack1_rate_offset, 0);
        // t_ack is indexed by the data rate; the offset is baked in already.
        const double dur = timing_.t_ack[data_rate];
        Transmission ack{TxKind::ack1, data_channel, ack_rate, now_, now_ + dur,
                         ev.mote,      false,        ev.frame_id, ev.attempt};
        const int idx = add_transmission(ack);
        schedule({now_ + dur, Ev::ack1_end, 0, ev.mote, ev.frame_id, ev.attempt, idx});
        trace(now_, ev.mote, "ack1_start", data_channel, ack_rate);
    } else {
        // ACK2 rides the dedicated downlink channel at the lowest rate; the
        // gateway never receives there, so there is nothing to cancel.
        const int downlink = scenario_.n_channels;
        const double dur = timing_.t_ack[0];
        Transmission ack{TxKind::ack2, downlink, 0,   now_,      now_ + dur,
                         ev.mote,      false,    ev.frame_id, ev.attempt};
        const int idx = add_transmission(ack);
        schedule({now_ + dur, Ev::ack2_end, 0, ev.mote, ev.frame_id, ev.attempt, idx});
        trace(now_, ev.mote, "ack2_start", downlink, 0);
    }
}

void Simulation::mote_step(MoteState& st, const Event& ev) {
    const bool ident_match =
        st.busy && st.frame_id == ev.frame_id && st.attempt == ev.attempt;
    switch (ev.kind) {
        case Ev::arrival: {
            const long fid = next_frame_id_++;
            const bool counted = now_ >= cfg_.warmup;
            if (counted) stats_.frames_generated += 1;
            trace(now_, st.id, "arrival", -1, st.rate);
            schedule_arrival(st.id);
            if (st.phase == Phase::idle) {
                start_attempt(st, fid, 1, counted, st.rate, 0);
            } else {
                // No queue: the newest frame replaces any frame already waiting.
                if (st.has_pending && st.pending_counted)
                    stats_.frames_superseded += 1;
                st.has_pending = true;
                st.pending_id = fid;
                st.pending_counted = counted;
            }
            break;
        }
        case Ev::tx_end: {
            if (!ident_match || st.phase != Phase::transmitting)
                throw std::logic_error("mote_step: tx_end outside transmitting");
            st.phase = Phase::awaiting_ack1;
            const Transmission& data = txs_[ev.tx];
            trace(now_, st.id, "tx_end", data.channel, data.rate);
            // Mote-side windows exist regardless of what the gateway does.
            schedule({now_ + timing_.t1 + timing_.t_ack[data.rate],
                      Ev::ack1_window_end, 0, st.id, ev.frame_id, ev.attempt, -1});
            const double close = now_ + timing_.t2 + timing_.t_ack[0];
            schedule({close, Ev::window_close, 0, st.id, ev.frame_id, ev.attempt, -1});
            st.next_event_time = close;
            if (!data.doomed) {
                schedule({now_ + timing_.t1, Ev::ack1_start, 0, st.id, ev.frame_id,
                          ev.attempt, ev.tx});
                schedule({now_ + timing_.t2, Ev::ack2_start, 0, st.id, ev.frame_id,
                          ev.attempt, ev.tx});
            }
            break;
        }
        case Ev::ack1_window_end:
            if (ident_match && st.phase == Phase::awaiting_ack1)
                st.phase = Phase::awaiting_ack2;
            break;  // stale after delivery: ignore
        case Ev::ack1_end:
        case Ev::ack2_end: {
            if (!ident_match) break;  // already delivered and moved on
            if (st.phase != Phase::awaiting_ack1 && st.phase != Phase::awaiting_ack2)
                throw std::logic_error("mote_step: ack outside an awaiting phase");
            trace(now_, st.id, ev.kind == Ev::ack1_end ? "ack1_end" : "ack2_end",
                  txs_[ev.tx].channel, txs_[ev.tx].rate);
            deliver(st, ev);
            break;
        }
        case Ev::window_close: {
            if (!ident_match) break;  // delivered earlier this attempt
            if (st.phase != Phase::awaiting_ack1 && st.phase != Phase::awaiting_ack2)
                throw std::logic_error("mote_step: window_close outside awaiting");
            finish_attempt(st, false);
            trace(now_, st.id, "fail", -1, st.frame_rate);
            if (st.has_pending) {
                if (st.counted) stats_.frames_superseded += 1;
                trace(now_, st.id, "supersede", -1, -1);
                start_pending(st);
            } else if (st.attempt <= scenario_.retry_limit) {
                st.phase = Phase::backoff;
                std::uniform_real_distribution<double> u(0.0, scenario_.retry_window_w);
                const double until = now_ + 1.0 + u(rng_);
                schedule({until, Ev::backoff_end, 0, st.id, ev.frame_id, ev.attempt, -1});
                st.next_event_time = until;
                trace(now_, st.id, "backoff", -1, -1);
            } else {
                if (st.counted) stats_.frames_dropped += 1;
                trace(now_, st.id, "drop", -1, -1);
                st.busy = false;
                st.phase = Phase::idle;
                st.next_event_time = next_arrival_[st.id];
            }
            break;
        }
        case Ev::backoff_end: {
            if (!ident_match || st.phase != Phase::backoff)
                throw std::logic_error("mote_step: backoff_end outside backoff");
            if (st.has_pending) {
                if (st.counted) stats_.frames_superseded += 1;
                trace(now_, st.id, "supersede", -1, -1);
                start_pending(st);
            } else {
                start_attempt(st, st.frame_id, st.attempt + 1, st.counted,
                              st.frame_rate, st.consecutive_failures);
            }
            break;
        }
        case Ev::ack1_start:
        case Ev::ack2_start:
            throw std::logic_error("mote_step: gateway event routed to a mote");
    }
}

SimStats Simulation::run() {
    if (lambda_ > 0.0)
        for (int m = 0; m < scenario_.n_motes; ++m) schedule_arrival(m);

    while (!queue_.empty()) {
        const Event ev = queue_.top();
        if (ev.time > cfg_.duration) break;
        queue_.pop();
        now_ = ev.time;
        switch (ev.kind) {
            case Ev::ack1_start:
            case Ev::ack2_start:
                gw_ack_start(ev);
                break;
            case Ev::ack1_end:
            case Ev::ack2_end:
                if (!txs_[ev.tx].doomed) mote_step(motes_[ev.mote], ev);
                break;
            default:
                mote_step(motes_[ev.mote], ev);
        }
    }
    now_ = cfg_.duration;

    for (const MoteState& st : motes_) {
        if (st.busy && st.counted) stats_.frames_in_flight += 1;
        if (st.has_pending && st.pending_counted) stats_.frames_in_flight += 1;
    }
    if (stats_.frames_generated !=
        stats_.frames_delivered + stats_.frames_dropped +
            stats_.frames_superseded + stats_.frames_in_flight)
        throw std::logic_error("simulation: frame conservation violated");

    if (stats_.attempts > 0) {
        stats_.per_defined = true;
        stats_.per = 1.0 - double(stats_.attempts_ok) / double(stats_.attempts);
        stats_.per1 =
            1.0 - double(stats_.first_attempts_ok) / double(stats_.first_attempts);
    }
    if (cfg_.audit) run_audit(stats_);
    return stats_;
}

void Simulation::run_audit(SimStats& stats) const {
    // Recompute overlaps from the raw transmission log, independently of the
    // dooming done during the run, and flag successes that overlapped.
    const int n_rates = static_cast<int>(scenario_.rates.size());
    const std::size_t keys =
        static_cast<std::size_t>(scenario_.n_channels + 1) * n_rates;
    std::vector<std::vector<int>> by_key(keys);
    for (int i = 0; i < static_cast<int>(txs_.size()); ++i)
        by_key[static_cast<std::size_t>(txs_[i].channel) * n_rates + txs_[i].rate]
            .push_back(i);  // appended in start order

    std::vector<char> overlapped(txs_.size(), 0);
    std::vector<int> window;
    for (const auto& bucket : by_key) {
        window.clear();
        for (int cur : bucket) {
            std::erase_if(window,
                          [&](int i) { return txs_[i].end <= txs_[cur].start; });
            for (int i : window) {
                overlapped[i] = 1;
                overlapped[cur] = 1;
            }
            window.push_back(cur);
        }
    }
    for (std::size_t i = 0; i < txs_.size(); ++i)
        if (attempt_ok_[i] && overlapped[i]) stats.audit_violations += 1;
}

SimStats run_simulation(const ScenarioConfig& scenario, const TimingTable& timing,
                        double lambda, const SimConfig& sim) {
    if (sim.warmup < 0.0 || sim.duration <= sim.warmup)
        throw std::invalid_argument("sim: need duration > warmup >= 0");
    if (sim.replications < 1)
        throw std::invalid_argument("sim: replications must be >= 1");
    if (lambda < 0.0) throw std::invalid_argument("lambda: must be >= 0");

    std::vector<SimStats> reps;
    reps.reserve(sim.replications);
    for (int k = 0; k < sim.replications; ++k) {
        std::ofstream trace_file;
        std::ostream* trace = nullptr;
        if (k == 0 && !sim.trace_path.empty()) {
            trace_file.open(sim.trace_path);
            if (!trace_file)
                throw std::runtime_error("sim: cannot open trace file " +
                                         sim.trace_path);
            trace = &trace_file;
        }
        Simulation s(scenario, timing, lambda, sim, derive_seed(sim.seed, k), trace);
        reps.push_back(s.run());
    }

    SimStats total;
    for (const SimStats& s : reps) {
        total.frames_generated += s.frames_generated;
        total.frames_delivered += s.frames_delivered;
        total.frames_dropped += s.frames_dropped;
        total.frames_superseded += s.frames_superseded;
        total.frames_in_flight += s.frames_in_flight;
        total.attempts += s.attempts;
        total.attempts_ok += s.attempts_ok;
        total.first_attempts += s.first_attempts;
        total.first_attempts_ok += s.first_attempts_ok;
        total.audit_violations += s.audit_violations;
    }
    const long defined =
        std::count_if(reps.begin(), reps.end(),
                      [](const SimStats& s) { return s.per_defined; });
    if (defined >= 2 && sim.replications >= 2) {
        const PerEstimate e = estimate_per(reps);
        total.per = e.per;
        total.per_ci = e.per_hw;
        total.per1 = e.per1;
        total.per1_ci = e.per1_hw;
        total.per_defined = true;
    } else if (total.attempts > 0) {
        total.per = 1.0 - double(total.attempts_ok) / double(total.attempts);
        total.per1 =
            1.0 - double(total.first_attempts_ok) / double(total.first_attempts);
        total.per_defined = true;
    }
    return total;
}

}  // namespace loracap
