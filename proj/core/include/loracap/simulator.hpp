#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <queue>
#include <random>
#include <string>
#include <vector>

#include "loracap/scenario.hpp"

namespace loracap {

enum class TxKind { data, ack1, ack2 };

struct Transmission {
    TxKind kind = TxKind::data;
    int channel = 0;          // downlink carries index F (one past the mains)
    int rate = 0;
    double start = 0.0;
    double end = 0.0;
    int mote = -1;
    bool doomed = false;      // collision mark, mutual, no capture
    long frame_id = -1;
    int attempt = 0;
};

// Same channel, same data rate, positive-measure time overlap.
bool collision_rule(const Transmission& a, const Transmission& b);

enum class Phase { idle, transmitting, awaiting_ack1, awaiting_ack2, backoff };

struct MoteState {
    int id = 0;
    int rate = 0;                    // assigned data rate index
    Phase phase = Phase::idle;
    double next_event_time = 0.0;

    bool busy = false;               // a frame is in service
    long frame_id = -1;
    int attempt = 0;                 // 1..RL+1
    bool counted = false;            // frame arrived after warmup
    int frame_rate = 0;              // equals rate unless decremented
    int consecutive_failures = 0;

    bool has_pending = false;        // most recent frame, waiting its turn
    long pending_id = -1;
    bool pending_counted = false;
};

struct SimStats {
    long long frames_generated = 0;
    long long frames_delivered = 0;
    long long frames_dropped = 0;    // retry limit exhausted
    long long frames_superseded = 0;
    long long frames_in_flight = 0;  // unresolved at end of run

    long long attempts = 0;
    long long attempts_ok = 0;
    long long first_attempts = 0;
    long long first_attempts_ok = 0;

    long long audit_violations = 0;  // successful attempts with an overlap

    // Point estimates; NaN and per_defined=false when no attempt was decided.
    // CI half-widths come from replication variance (estimate_per).
    double per = std::numeric_limits<double>::quiet_NaN();
    double per_ci = 0.0;
    double per1 = std::numeric_limits<double>::quiet_NaN();
    double per1_ci = 0.0;
    bool per_defined = false;
};

struct SimConfig {
    double duration = 0.0;           // seconds, > warmup
    double warmup = 0.0;
    std::uint64_t seed = 1;
    int replications = 1;
    bool rate_decrement_on_failures = false;  // off by default, diverges from model

    bool disable_collisions = false; // test hook: no transmission ever doomed
    bool audit = false;              // post-run overlap audit of the full trace
    std::string trace_path;          // per-event trace (first replication only)
};

// 95% normal-approximation estimate across replications.
struct PerEstimate {
    double per = 0.0;
    double per_hw = 0.0;
    double per1 = 0.0;
    double per1_hw = 0.0;
};

// Mean and CI half-width over >= 2 replications; throws std::invalid_argument
// otherwise. Replications with no decided attempts are skipped.
PerEstimate estimate_per(const std::vector<SimStats>& reps);

// Deterministic stream split: the k-th derived seed from a base seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t k);

// Runs sim.replications independent replications (seeds derived from
// sim.seed), sums the counters and fills the estimators. Deterministic given
// (seed, inputs). Throws std::invalid_argument on a bad SimConfig.
SimStats run_simulation(const ScenarioConfig& scenario,
                        const TimingTable& timing, double lambda,
                        const SimConfig& sim);

enum class Ev {
    tx_end,
    ack1_start,       // gateway decides whether to transmit ACK1
    ack1_end,
    ack1_window_end,  // mote-side RX1 window bookkeeping
    ack2_start,
    ack2_end,
    window_close,     // attempt verdict if no ACK arrived
    backoff_end,
    arrival,
};

struct Event {
    double time = 0.0;
    Ev kind = Ev::arrival;
    std::uint64_t seq = 0;   // insertion order, final tie-breaker
    int mote = -1;
    long frame_id = -1;      // attempt identity; stale events are ignored
    int attempt = 0;
    int tx = -1;             // transmission index for ack end events
};

// One replication: event loop over one mote population. Exposed so tests can
// drive mote_step and inspect the transmission log directly; run_simulation
// is the usual entry point.
class Simulation {
public:
    Simulation(const ScenarioConfig& scenario, const TimingTable& timing,
               double lambda, const SimConfig& sim, std::uint64_t seed,
               std::ostream* trace = nullptr);

    SimStats run();

    // State machine: applies one event to one mote and schedules follow-ups.
    // Throws std::logic_error on a transition the protocol cannot produce.
    void mote_step(MoteState& st, const Event& ev);

    const std::vector<MoteState>& motes() const { return motes_; }
    MoteState& mote(int id) { return motes_.at(id); }
    const std::vector<Transmission>& transmissions() const { return txs_; }
    double now() const { return now_; }

private:
    struct EventOrder {
        bool operator()(const Event& a, const Event& b) const;
    };

    void schedule(Event ev);
    void schedule_arrival(int mote);
    void start_attempt(MoteState& st, long frame_id, int attempt, bool counted,
                       int frame_rate, int consecutive_failures);
    void start_pending(MoteState& st);
    int add_transmission(Transmission tx);
    bool gateway_busy_rx(int channel, double t) const;
    void gw_ack_start(const Event& ev);
    void deliver(MoteState& st, const Event& ev);
    void finish_attempt(MoteState& st, bool ok);
    void run_audit(SimStats& stats) const;
    void trace(double t, int mote, const char* event, int channel, int rate);

    const ScenarioConfig& scenario_;
    const TimingTable& timing_;
    double lambda_;
    const SimConfig& cfg_;
    std::ostream* trace_ = nullptr;

    std::mt19937_64 rng_;
    std::priority_queue<Event, std::vector<Event>, EventOrder> queue_;
    std::uint64_t next_seq_ = 0;
    long next_frame_id_ = 0;
    double now_ = 0.0;

    std::vector<MoteState> motes_;
    std::vector<double> next_arrival_;     // per mote
    std::vector<int> current_data_tx_;     // per mote, index into txs_
    std::vector<Transmission> txs_;
    // Per (channel, rate) indices of transmissions that may still collide
    // with a future start; pruned lazily.
    std::vector<std::vector<int>> active_;
    std::vector<char> attempt_ok_;   // parallel to txs_, data entries only

    SimStats stats_;
};

}  // namespace loracap
