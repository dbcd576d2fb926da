#include "loracap/airtime.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace loracap {

double symbol_time(int sf, double bw) {
    if (sf < 7 || sf > 12)
        throw std::invalid_argument("spreading_factor: must lie in 7..12, got " +
                                    std::to_string(sf));
    if (bw <= 0.0)
        throw std::invalid_argument("bandwidth_hz: must be > 0");
    return std::ldexp(1.0, sf) / bw;
}

double time_on_air(const AirtimeQuery& q) {
    if (q.phy_payload_bytes < 0 || q.phy_payload_bytes > 255)
        throw std::invalid_argument("phy_payload_bytes: must lie in 0..255");
    if (q.coding_rate_index < 1 || q.coding_rate_index > 4)
        throw std::invalid_argument("coding_rate_index: must lie in 1..4");
    if (q.preamble_symbols < 1)
        throw std::invalid_argument("preamble_symbols: must be >= 1");
    const double ts = symbol_time(q.spreading_factor, q.bandwidth_hz);
    const int de = q.ldro ? 1 : 0;
    const int ih = q.explicit_header ? 0 : 1;
    const int crc = q.crc ? 1 : 0;
    // Payload symbol count; the ceil argument can go negative for tiny
    // payloads, in which case the payload fits the mandatory 8 symbols.
    const int num = 8 * q.phy_payload_bytes - 4 * q.spreading_factor + 28 +
                    16 * crc - 20 * ih;
    const int den = 4 * (q.spreading_factor - 2 * de);
    const long blocks = (num + den - 1) / den;  // ceil for num > 0
    const long n_payload =
        8 + std::max(blocks * (q.coding_rate_index + 4), 0L);
    return (q.preamble_symbols + 4.25) * ts + static_cast<double>(n_payload) * ts;
}

bool ldro_enabled(const RadioParams& radio, int rate) {
    switch (radio.ldro) {
        case LdroPolicy::on: return true;
        case LdroPolicy::off: return false;
        case LdroPolicy::automatic: break;
    }
    return symbol_time(radio.spreading_factor[rate], radio.bandwidth_hz[rate]) >
           0.016;
}

TimingTable build_timing_table(const ScenarioConfig& config) {
    const RadioParams& radio = config.radio;
    const int n = static_cast<int>(config.rates.size());
    TimingTable t;
    t.t_data.resize(n);
    t.t_ack.resize(n);
    for (int i = 0; i < n; ++i) {
        AirtimeQuery data;
        data.phy_payload_bytes = radio.data_overhead_bytes + config.frm_payload_bytes;
        data.spreading_factor = radio.spreading_factor[i];
        data.bandwidth_hz = radio.bandwidth_hz[i];
        data.coding_rate_index = radio.coding_rate_index;
        data.preamble_symbols = radio.preamble_symbols;
        data.explicit_header = radio.explicit_header;
        data.crc = radio.uplink_crc;
        data.ldro = ldro_enabled(radio, i);
        t.t_data[i] = time_on_air(data);

        const int ack_rate = std::max(i - radio.ack1_rate_offset, 0);
        AirtimeQuery ack;
        ack.phy_payload_bytes = radio.ack_phy_payload_bytes;
        ack.spreading_factor = radio.spreading_factor[ack_rate];
        ack.bandwidth_hz = radio.bandwidth_hz[ack_rate];
        ack.coding_rate_index = radio.coding_rate_index;
        ack.preamble_symbols = radio.preamble_symbols;
        ack.explicit_header = radio.explicit_header;
        ack.crc = false;  // downlink frames carry no CRC
        ack.ldro = ldro_enabled(radio, ack_rate);
        t.t_ack[i] = time_on_air(ack);
    }
    t.t1 = config.t1;
    t.t2 = config.t2();
    t.t_wait_mean = 1.0 + config.retry_window_w / 2.0;
    return t;
}

}  // namespace loracap
