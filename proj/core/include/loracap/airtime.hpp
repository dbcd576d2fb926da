#pragma once

#include "loracap/scenario.hpp"

namespace loracap {

// One LoRa transmission to be timed.
struct AirtimeQuery {
    int phy_payload_bytes = 0;   // 0..255
    int spreading_factor = 7;    // 7..12
    double bandwidth_hz = 125000.0;
    int coding_rate_index = 1;   // CR 4/(4+index)
    int preamble_symbols = 8;
    bool explicit_header = true;
    bool crc = false;
    bool ldro = false;

    bool operator==(const AirtimeQuery&) const = default;
};

// 2^sf / bw. Throws std::invalid_argument for sf outside 7..12 or bw <= 0.
double symbol_time(int sf, double bw);

// Standard LoRa time-on-air: preamble (preamble_symbols + 4.25 symbols) plus
// the payload symbol count, scaled by symbol_time. Pure and deterministic.
double time_on_air(const AirtimeQuery& q);

// Whether low-data-rate optimization applies under the given policy
// (automatic: symbol time > 16 ms).
bool ldro_enabled(const RadioParams& radio, int rate);

// Fills t_data / t_ack for every rate of a validated config, plus t1, t2 and
// t_wait_mean = 1 + W/2. Data frames carry data_overhead_bytes + frm_payload
// with the uplink CRC setting; ACKs carry ack_phy_payload_bytes, no CRC.
TimingTable build_timing_table(const ScenarioConfig& config);

}  // namespace loracap
