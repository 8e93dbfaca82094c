#ifndef RIPS_CONFIG_HPP
#define RIPS_CONFIG_HPP

// Flat experiment configuration (JSON) and SNR grid parsing.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "rips/core_model.hpp"

namespace rips {

/// Configuration errors that should be reported as usage problems.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
    double b_hz = 30e6;
    double f_min_hz = 1e3;
    std::optional<std::int64_t> k0;  ///< unset: round(400 MHz / f_min)
    std::optional<int> m;
    PlanKind kind = PlanKind::lsf;
    std::uint64_t seed = 2014;
    double d0_m = 50.0;
    double theta_rad = 0.0;
    double sigma2 = 0.0;
    double c_mps = kSpeedOfLight;
    std::optional<double> d_max_m;  ///< unset: (M-1) c / B

    std::int64_t resolved_k0() const { return k0 ? *k0 : default_k0(f_min_hz); }

    int resolved_m() const {
        if (!m) throw UsageError("the number of measurement frequencies M is required (--m or \"m\" in the config)");
        return *m;
    }

    double resolved_d_max() const {
        return d_max_m ? *d_max_m : static_cast<double>(resolved_m() - 1) * c_mps / b_hz;
    }

    std::int64_t n() const { return available_frequency_count(b_hz, f_min_hz); }

    void validate() const {
        if (!(b_hz > 0.0) || !std::isfinite(b_hz)) throw UsageError("b_hz must be positive");
        if (!(f_min_hz > 0.0) || !std::isfinite(f_min_hz)) throw UsageError("f_min_hz must be positive");
        if (m && *m < 3) throw UsageError("m must be at least 3");
        if (k0 && *k0 < 0) throw UsageError("k0 must be non-negative");
        if (!(c_mps > 0.0)) throw UsageError("c_mps must be positive");
        if (!(sigma2 >= 0.0)) throw UsageError("sigma2 must be non-negative");
        if (d_max_m && !(*d_max_m > 0.0)) throw UsageError("d_max_m must be positive");
        if (!std::isfinite(d0_m) || !std::isfinite(theta_rad)) throw UsageError("d0_m and theta_rad must be finite");
    }
};

inline nlohmann::json to_json(const ExperimentConfig& c) {
    nlohmann::json j;
    j["b_hz"] = c.b_hz;
    j["f_min_hz"] = c.f_min_hz;
    j["k0"] = c.resolved_k0();
    if (c.m) j["m"] = *c.m;
    j["kind"] = std::string(to_string(c.kind));
    j["seed"] = c.seed;
    j["d0_m"] = c.d0_m;
    j["theta_rad"] = c.theta_rad;
    j["sigma2"] = c.sigma2;
    j["c_mps"] = c.c_mps;
    if (c.d_max_m) j["d_max_m"] = *c.d_max_m;
    else if (c.m) j["d_max_m"] = c.resolved_d_max();
    return j;
}

/// Reads a flat JSON object; unknown keys are rejected.
inline ExperimentConfig config_from_json(const nlohmann::json& j, ExperimentConfig base = {}) {
    if (!j.is_object()) throw UsageError("config must be a JSON object");
    static const std::set<std::string> known{"b_hz", "f_min_hz", "k0",   "m",    "kind",   "seed",
                                             "d0_m", "theta_rad", "sigma2", "c_mps", "d_max_m"};
    for (const auto& [key, value] : j.items())
        if (!known.count(key)) throw UsageError("unknown config key: " + key);
    try {
        if (j.contains("b_hz")) base.b_hz = j.at("b_hz").get<double>();
        if (j.contains("f_min_hz")) base.f_min_hz = j.at("f_min_hz").get<double>();
        if (j.contains("k0")) base.k0 = j.at("k0").get<std::int64_t>();
        if (j.contains("m")) base.m = j.at("m").get<int>();
        if (j.contains("kind")) base.kind = parse_plan_kind(j.at("kind").get<std::string>());
        if (j.contains("seed")) base.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("d0_m")) base.d0_m = j.at("d0_m").get<double>();
        if (j.contains("theta_rad")) base.theta_rad = j.at("theta_rad").get<double>();
        if (j.contains("sigma2")) base.sigma2 = j.at("sigma2").get<double>();
        if (j.contains("c_mps")) base.c_mps = j.at("c_mps").get<double>();
        if (j.contains("d_max_m")) base.d_max_m = j.at("d_max_m").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw UsageError(std::string("bad config value: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    base.validate();
    return base;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw UsageError("cannot parse " + path + ": " + e.what());
    }
    return config_from_json(j);
}

/// "start:step:stop", a comma list, or a single value.
inline std::vector<double> parse_snr_grid(const std::string& text) {
    auto number = [&](const std::string& s) {
        try {
            std::size_t used = 0;
            const double v = std::stod(s, &used);
            if (used != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            throw UsageError("bad SNR grid value '" + s + "' in '" + text + "'");
        }
    };
    std::vector<std::string> parts;
    const char sep = text.find(':') != std::string::npos ? ':' : ',';
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, sep);) parts.push_back(item);
    std::vector<double> out;
    if (sep == ',') {
        for (const auto& p : parts) out.push_back(number(p));
    } else {
        if (parts.size() != 3) throw UsageError("SNR range must be start:step:stop, got '" + text + "'");
        const double start = number(parts[0]);
        const double step = number(parts[1]);
        const double stop = number(parts[2]);
        if (!(step > 0.0) || stop < start) throw UsageError("SNR range needs step > 0 and stop >= start");
        const auto count = static_cast<std::int64_t>(std::floor((stop - start) / step + 1e-9)) + 1;
        if (count > 100000) throw UsageError("SNR grid is too large");
        for (std::int64_t i = 0; i < count; ++i) {
            const double v = start + static_cast<double>(i) * step;
            out.push_back(std::round(v * 1e9) / 1e9);
        }
    }
    if (out.empty()) throw UsageError("SNR grid is empty");
    return out;
}

}  // namespace rips

#endif  // RIPS_CONFIG_HPP
