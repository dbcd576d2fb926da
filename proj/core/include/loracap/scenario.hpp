#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace loracap {

// Probability that a mote uses data rate i, indexed by rate.
struct RateDistribution {
    std::vector<double> probabilities;

    std::size_t size() const { return probabilities.size(); }
    double operator[](std::size_t i) const { return probabilities[i]; }

    bool operator==(const RateDistribution&) const = default;
};

enum class LdroPolicy { automatic, on, off };

// PHY mapping per data rate plus framing overheads. The defaults here are the
// EU868-style mapping used by the bundled preset; all fields are configurable.
struct RadioParams {
    std::vector<int> spreading_factor;   // per rate index, 7..12
    std::vector<double> bandwidth_hz;    // per rate index, > 0
    int coding_rate_index = 1;           // CR 4/(4+index), 1..4
    int preamble_symbols = 8;
    bool explicit_header = true;
    bool uplink_crc = true;              // downlink ACKs never carry CRC
    LdroPolicy ldro = LdroPolicy::automatic;
    int data_overhead_bytes = 13;        // MAC header + MIC + port
    int ack_phy_payload_bytes = 12;      // ACKs carry no frame payload
    int ack1_rate_offset = 0;            // ACK1 rate = max(data rate - offset, 0)

    bool operator==(const RadioParams&) const = default;
};

// Full network description. T2 is always derived as t1 + 1 s.
struct ScenarioConfig {
    int n_motes = 1;                 // N
    int n_channels = 1;              // F main channels (+1 downlink)
    RateDistribution rates;
    double retry_window_w = 2.0;     // W, seconds
    int retry_limit = 7;             // RL
    double t1 = 1.0;                 // seconds
    int frm_payload_bytes = 0;
    RadioParams radio;

    double t2() const { return t1 + 1.0; }

    bool operator==(const ScenarioConfig&) const = default;
};

// Per-rate durations in seconds plus the fixed protocol delays.
// t_ack[i] is the ACK1 duration for data rate i; t_ack[0] doubles as the
// ACK2 duration (ACK2 always uses the lowest rate).
struct TimingTable {
    std::vector<double> t_data;
    std::vector<double> t_ack;
    double t1 = 0.0;
    double t2 = 0.0;
    double t_wait_mean = 0.0;        // 1 + W/2

    bool operator==(const TimingTable&) const = default;
};

// Returns config unchanged iff every invariant holds; throws
// std::invalid_argument naming the offending field otherwise.
ScenarioConfig validate_scenario(const ScenarioConfig& config);

// The bundled reference scenario: N=1000 motes, F=3 channels, six data rates
// with p = [0.28, 0.2, 0.14, 0.1, 0.08, 0.2], W=2 s, RL=7, T1=1 s, 51-byte
// frame payload, DR0=SF12 .. DR5=SF7 at 125 kHz.
ScenarioConfig reference_preset();

// JSON config file I/O; schema documented in the README (one key per field).
ScenarioConfig scenario_from_json(const std::string& text);
std::string scenario_to_json(const ScenarioConfig& config);
ScenarioConfig load_scenario_file(const std::string& path);
void save_scenario_file(const ScenarioConfig& config, const std::string& path);

}  // namespace loracap
