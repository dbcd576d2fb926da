#include "loracap/scenario.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace loracap {

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& what) {
    throw std::invalid_argument(field + ": " + what);
}

}  // namespace

ScenarioConfig validate_scenario(const ScenarioConfig& config) {
    if (config.n_motes < 1) fail("n_motes", "must be >= 1");
    if (config.n_channels < 1) fail("n_channels", "must be >= 1");
    if (config.retry_window_w <= 0.0) fail("retry_window_w", "must be > 0");
    if (config.retry_limit < 0) fail("retry_limit", "must be >= 0");
    if (config.t1 < 0.0) fail("t1", "must be >= 0");
    if (config.frm_payload_bytes < 0) fail("frm_payload_bytes", "must be >= 0");

    const auto& p = config.rates.probabilities;
    if (p.empty()) fail("rates", "must contain at least one rate");
    double sum = 0.0;
    for (double v : p) {
        if (v < 0.0 || v > 1.0) fail("rates", "entries must lie in [0,1]");
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        fail("rates", "entries must sum to 1 within 1e-9 (got " +
                          std::to_string(sum) + ")");

    const auto& r = config.radio;
    if (r.spreading_factor.size() != p.size())
        fail("radio.spreading_factor", "needs one entry per data rate");
    if (r.bandwidth_hz.size() != p.size())
        fail("radio.bandwidth_hz", "needs one entry per data rate");
    for (int sf : r.spreading_factor)
        if (sf < 7 || sf > 12) fail("radio.spreading_factor", "must lie in 7..12");
    for (double bw : r.bandwidth_hz)
        if (bw <= 0.0) fail("radio.bandwidth_hz", "must be > 0");
    if (r.coding_rate_index < 1 || r.coding_rate_index > 4)
        fail("radio.coding_rate_index", "must lie in 1..4");
    if (r.preamble_symbols < 1) fail("radio.preamble_symbols", "must be >= 1");
    if (r.data_overhead_bytes < 0) fail("radio.data_overhead_bytes", "must be >= 0");
    if (r.ack_phy_payload_bytes < 0)
        fail("radio.ack_phy_payload_bytes", "must be >= 0");
    if (r.ack1_rate_offset < 0) fail("radio.ack1_rate_offset", "must be >= 0");

    return config;
}

ScenarioConfig reference_preset() {
    ScenarioConfig c;
    c.n_motes = 1000;
    c.n_channels = 3;
    c.rates.probabilities = {0.28, 0.2, 0.14, 0.1, 0.08, 0.2};
    c.retry_window_w = 2.0;
    c.retry_limit = 7;
    c.t1 = 1.0;
    c.frm_payload_bytes = 51;
    c.radio.spreading_factor = {12, 11, 10, 9, 8, 7};
    c.radio.bandwidth_hz = std::vector<double>(6, 125000.0);
    return c;
}

namespace {

using nlohmann::json;

std::string ldro_name(LdroPolicy p) {
    switch (p) {
        case LdroPolicy::automatic: return "auto";
        case LdroPolicy::on: return "on";
        case LdroPolicy::off: return "off";
    }
    return "auto";
}

LdroPolicy ldro_from_name(const std::string& s) {
    if (s == "auto") return LdroPolicy::automatic;
    if (s == "on") return LdroPolicy::on;
    if (s == "off") return LdroPolicy::off;
    throw std::invalid_argument("radio.ldro: expected auto|on|off, got " + s);
}

}  // namespace

ScenarioConfig scenario_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("scenario: bad JSON: ") + e.what());
    }
    ScenarioConfig c;
    ScenarioConfig defaults = reference_preset();
    c = defaults;
    c.n_motes = j.value("n_motes", defaults.n_motes);
    c.n_channels = j.value("n_channels", defaults.n_channels);
    if (j.contains("rates"))
        c.rates.probabilities = j.at("rates").get<std::vector<double>>();
    c.retry_window_w = j.value("retry_window_w", defaults.retry_window_w);
    c.retry_limit = j.value("retry_limit", defaults.retry_limit);
    c.t1 = j.value("t1", defaults.t1);
    c.frm_payload_bytes = j.value("frm_payload_bytes", defaults.frm_payload_bytes);
    if (j.contains("radio")) {
        const json& r = j.at("radio");
        RadioParams& rp = c.radio;
        if (r.contains("spreading_factor"))
            rp.spreading_factor = r.at("spreading_factor").get<std::vector<int>>();
        if (r.contains("bandwidth_hz"))
            rp.bandwidth_hz = r.at("bandwidth_hz").get<std::vector<double>>();
        rp.coding_rate_index = r.value("coding_rate_index", rp.coding_rate_index);
        rp.preamble_symbols = r.value("preamble_symbols", rp.preamble_symbols);
        rp.explicit_header = r.value("explicit_header", rp.explicit_header);
        rp.uplink_crc = r.value("uplink_crc", rp.uplink_crc);
        if (r.contains("ldro"))
            rp.ldro = ldro_from_name(r.at("ldro").get<std::string>());
        rp.data_overhead_bytes = r.value("data_overhead_bytes", rp.data_overhead_bytes);
        rp.ack_phy_payload_bytes =
            r.value("ack_phy_payload_bytes", rp.ack_phy_payload_bytes);
        rp.ack1_rate_offset = r.value("ack1_rate_offset", rp.ack1_rate_offset);
    }
    return validate_scenario(c);
}

std::string scenario_to_json(const ScenarioConfig& c) {
    json r = {
        {"spreading_factor", c.radio.spreading_factor},
        {"bandwidth_hz", c.radio.bandwidth_hz},
        {"coding_rate_index", c.radio.coding_rate_index},
        {"preamble_symbols", c.radio.preamble_symbols},
        {"explicit_header", c.radio.explicit_header},
        {"uplink_crc", c.radio.uplink_crc},
        {"ldro", ldro_name(c.radio.ldro)},
        {"data_overhead_bytes", c.radio.data_overhead_bytes},
        {"ack_phy_payload_bytes", c.radio.ack_phy_payload_bytes},
        {"ack1_rate_offset", c.radio.ack1_rate_offset},
    };
    json j = {
        {"n_motes", c.n_motes},
        {"n_channels", c.n_channels},
        {"rates", c.rates.probabilities},
        {"retry_window_w", c.retry_window_w},
        {"retry_limit", c.retry_limit},
        {"t1", c.t1},
        {"frm_payload_bytes", c.frm_payload_bytes},
        {"radio", r},
    };
    return j.dump(2) + "\n";
}

ScenarioConfig load_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("scenario: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return scenario_from_json(buf.str());
}

void save_scenario_file(const ScenarioConfig& config, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("scenario: cannot open " + path);
    out << scenario_to_json(config);
    if (!out) throw std::runtime_error("scenario: write failed for " + path);
}

}  // namespace loracap
