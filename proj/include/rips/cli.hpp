#ifndef RIPS_CLI_HPP
#define RIPS_CLI_HPP

// Command-line front end: predict, simulate, crb, ambiguity, compare, replay.
//
// Every subcommand resolves its flags into a parameter object and hands it to
// a pure executor that returns the output files as strings. The manifest
// stores that object, so replay re-runs the executor and compares digests.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <unistd.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "rips/ambiguity.hpp"
#include "rips/bounds.hpp"
#include "rips/config.hpp"
#include "rips/core_model.hpp"
#include "rips/io.hpp"
#include "rips/mie.hpp"
#include "rips/montecarlo.hpp"

namespace rips::cli {

using json = nlohmann::json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitRuntime = 3;

/// role -> file content, in a fixed order.
using Outputs = std::vector<std::pair<std::string, std::string>>;

namespace detail {

inline double to_db(double v) { return 10.0 * std::log10(v); }

inline std::string config_hash(const json& params) { return sha256_hex(params.dump()).substr(0, 16); }

inline std::vector<double> snr_list(const json& params) { return params.at("snr_db").get<std::vector<double>>(); }

inline std::string prediction_csv(const ExperimentConfig& cfg, PlanKind kind, const std::vector<double>& snr, bool db) {
    const int m = cfg.resolved_m();
    Scenario s;
    s.d0_m = cfg.d0_m;
    s.theta_rad = cfg.theta_rad;
    s.c_mps = cfg.c_mps;
    s.d_max_m = cfg.resolved_d_max();
    CsvTable table({"snr_db", db ? "mse_pred_db" : "mse_pred_m2", "outlier_prob", "crb_m2", "clamped"});
    std::optional<FrequencyPlan> plan;
    SidelobeProfile profile;
    if (kind == PlanKind::lsf) {
        plan = make_lsf_plan(cfg.b_hz, cfg.f_min_hz, cfg.resolved_k0(), m);
        s.validate(*plan);
        profile = af_sidelobes(*plan, s.d0_m, s.d_max_m, s.c_mps);
    } else {
        profile = aaf_sidelobes(m, cfg.n(), cfg.f_min_hz, cfg.resolved_k0(), s.d0_m, s.d_max_m, s.c_mps);
    }
    for (double snr : snr) {
        s.sigma2 = sigma2_from_snr_db(snr);
        const auto p = kind == PlanKind::lsf ? predict_mse_lsf(*plan, s, profile)
                                             : predict_amse_rsf(m, cfg.n(), cfg.f_min_hz, s, profile);
        table.add_row({format_number(snr), format_number(db ? to_db(p.mse_m2) : p.mse_m2),
                       format_number(p.outlier_prob), format_number(p.crb_term_m2), p.clamped ? "1" : "0"});
    }
    return table.str();
}

inline SweepConfig sweep_config(const ExperimentConfig& cfg, PlanKind kind, const json& params, unsigned threads) {
    SweepConfig sc;
    sc.snr_db_grid = snr_list(params);
    sc.trials_per_point = params.at("trials").get<int>();
    sc.kind = kind;
    sc.m = cfg.resolved_m();
    sc.b_hz = cfg.b_hz;
    sc.f_min_hz = cfg.f_min_hz;
    sc.k0 = cfg.resolved_k0();
    sc.d0_m = cfg.d0_m;
    sc.randomize_d0 = params.at("randomize_d0").get<bool>();
    sc.theta_policy = params.at("theta_policy").get<std::string>() == "fixed" ? ThetaPolicy::fixed : ThetaPolicy::uniform;
    sc.theta_rad = cfg.theta_rad;
    sc.d_max_m = cfg.resolved_d_max();
    sc.c_mps = cfg.c_mps;
    sc.master_seed = cfg.seed;
    sc.threads = threads;
    return sc;
}

inline std::string simulation_csv(const SweepConfig& sc, const std::string& hash, bool db) {
    CsvTable table({"snr_db", db ? "empirical_mse_db" : "empirical_mse_m2", "stderr_m2", "outlier_rate", "trials",
                    "config_hash"});
    for (const auto& p : run_sweep(sc))
        table.add_row({format_number(p.snr_db), format_number(db ? to_db(p.empirical_mse_m2) : p.empirical_mse_m2),
                       format_number(p.std_error_m2), format_number(p.outlier_rate), std::to_string(p.trials), hash});
    return table.str();
}

// Reads the MSE column of a prediction or simulation CSV, in dB.
inline std::map<double, double> mse_db_by_snr(const CsvData& csv) {
    std::optional<std::size_t> col;
    bool in_db = false;
    for (const auto& [name, db] : std::vector<std::pair<std::string, bool>>{
             {"mse_pred_m2", false}, {"mse_pred_db", true}, {"empirical_mse_m2", false}, {"empirical_mse_db", true}})
        for (std::size_t i = 0; i < csv.header.size(); ++i)
            if (csv.header[i] == name) {
                col = i;
                in_db = db;
            }
    if (!col) throw std::runtime_error("CSV has no MSE column");
    const std::size_t snr = csv.column("snr_db");
    std::map<double, double> out;
    for (const auto& row : csv.rows) {
        const double v = std::stod(row[*col]);
        out[std::stod(row[snr])] = in_db ? v : to_db(v);
    }
    return out;
}

}  // namespace detail

/// Runs a resolved command. Pure apart from compare, which reads its inputs.
inline Outputs execute(const std::string& command, const json& params, unsigned threads = 0,
                       std::ostream* notes = nullptr) {
    if (command == "predict") {
        const auto cfg = config_from_json(params.at("config"));
        return {{"curve", detail::prediction_csv(cfg, cfg.kind, detail::snr_list(params), params.at("db").get<bool>())}};
    }
    if (command == "simulate") {
        const auto cfg = config_from_json(params.at("config"));
        const bool db = params.at("db").get<bool>();
        const std::string hash = detail::config_hash(params);
        if (params.at("figure1").get<bool>()) {
            Outputs out;
            for (PlanKind kind : {PlanKind::lsf, PlanKind::rsf}) {
                const std::string name(to_string(kind));
                out.emplace_back(name + "_sim",
                                 detail::simulation_csv(detail::sweep_config(cfg, kind, params, threads), hash, db));
                out.emplace_back(name + "_pred", detail::prediction_csv(cfg, kind, detail::snr_list(params), db));
            }
            return out;
        }
        return {{"curve", detail::simulation_csv(detail::sweep_config(cfg, cfg.kind, params, threads), hash, db)}};
    }
    if (command == "crb") {
        const auto cfg = config_from_json(params.at("config"));
        const int m = cfg.resolved_m();
        const auto lsf = make_lsf_plan(cfg.b_hz, cfg.f_min_hz, cfg.resolved_k0(), m);
        CsvTable table({"snr_db", "sigma2", "crb_lsf_m2", "avg_crb_rsf_m2"});
        bool warned = false;
        for (double snr : detail::snr_list(params)) {
            const double s2 = sigma2_from_snr_db(snr);
            const auto avg = avg_crb_rsf(m, cfg.n(), cfg.f_min_hz, s2, cfg.c_mps);
            if (avg.small_n_warning && notes && !warned) {
                *notes << "warning: N < 1000, the average CRB approximation is unreliable\n";
                warned = true;
            }
            table.add_row({format_number(snr), format_number(s2), format_number(crb_general(lsf, s2, cfg.c_mps)),
                           format_number(avg.value_m2)});
        }
        return {{"curve", table.str()}};
    }
    if (command == "ambiguity") {
        const auto cfg = config_from_json(params.at("config"));
        const int m = cfg.resolved_m();
        const bool average = params.at("profile").get<std::string>() == "aaf";
        const double window = params.at("window_m").get<double>();
        const auto samples = params.at("samples").get<std::int64_t>();
        if (samples < 3 || samples % 2 == 0) throw UsageError("--samples must be odd and at least 3");
        std::optional<FrequencyPlan> plan;
        std::function<double(double)> value;
        SidelobeProfile profile;
        if (average) {
            if (window > cfg.c_mps / cfg.f_min_hz * (1.0 + 1e-12))
                throw UsageError("window exceeds the unambiguous distance c/f_min");
            value = [&](double t) { return aaf_value(m, cfg.n(), cfg.f_min_hz, t, cfg.c_mps); };
            profile = aaf_sidelobes(m, cfg.n(), cfg.f_min_hz, cfg.resolved_k0(), cfg.d0_m, window, cfg.c_mps);
        } else {
            plan = cfg.kind == PlanKind::lsf ? make_lsf_plan(cfg.b_hz, cfg.f_min_hz, cfg.resolved_k0(), m)
                                             : make_rsf_plan(cfg.b_hz, cfg.f_min_hz, cfg.resolved_k0(), m, cfg.seed);
            if (window > plan->unambiguous_distance_m(cfg.c_mps) * (1.0 + 1e-12))
                throw UsageError("window exceeds the unambiguous distance c/f_min");
            value = [&](double t) { return af_value(*plan, t, cfg.c_mps); };
            profile = af_sidelobes(*plan, cfg.d0_m, window, cfg.c_mps);
        }
        CsvTable curve({"tau_m", "value"});
        const std::int64_t half = samples / 2;
        for (std::int64_t j = -half; j <= half; ++j) {
            const double tau = 0.5 * window * static_cast<double>(j) / static_cast<double>(half);
            curve.add_row({format_number(tau), format_number(value(tau))});
        }
        CsvTable lobes({"n", "position_m", "offset_m", "level_abs", "level_arg_rad"});
        for (std::size_t i = 0; i < profile.peaks.size(); ++i) {
            const auto& p = profile.peaks[i];
            lobes.add_row({std::to_string(i + 1), format_number(p.position_m), format_number(p.offset_m),
                           format_number(std::abs(p.level)), format_number(std::arg(p.level))});
        }
        if (notes && profile.count_mismatch)
            *notes << "warning: found " << profile.peaks.size() << " sidelobes, expected " << profile.expected_count
                   << "\n";
        return {{"profile", curve.str()}, {"sidelobes", lobes.str()}};
    }
    if (command == "compare") {
        const auto pred = detail::mse_db_by_snr(parse_csv(read_file(params.at("pred").get<std::string>())));
        const auto sim = detail::mse_db_by_snr(parse_csv(read_file(params.at("sim").get<std::string>())));
        CsvTable table({"snr_db", "pred_db", "sim_db", "delta_db"});
        double worst = -1.0;
        double worst_snr = 0.0;
        for (const auto& [snr, p] : pred) {
            const auto it = sim.find(snr);
            if (it == sim.end()) continue;
            const double delta = p - it->second;
            table.add_row({format_number(snr), format_number(p), format_number(it->second), format_number(delta)});
            if (std::abs(delta) > worst) {
                worst = std::abs(delta);
                worst_snr = snr;
            }
        }
        if (table.rows() == 0) throw std::runtime_error("the two CSVs share no SNR values");
        if (notes)
            *notes << "max |pred - sim| = " << format_number(worst) << " dB at SNR " << format_number(worst_snr)
                   << " dB over " << table.rows() << " points\n";
        return {{"comparison", table.str()}};
    }
    throw UsageError("unknown command " + command);
}

namespace detail {

struct ConfigFlags {
    std::string config_path;
    std::string kind;
    std::optional<int> m;
    std::optional<double> b_mhz;
    std::optional<double> fmin_khz;
    std::optional<std::int64_t> k0;
    std::optional<double> d0;
    std::optional<double> theta;
    std::optional<double> dmax;
    std::optional<double> c;
    std::optional<std::uint64_t> seed;

    void attach(CLI::App* app, bool with_kind = true) {
        app->add_option("--config", config_path, "JSON config file; flags override its values");
        if (with_kind) app->add_option("--kind", kind, "lsf or rsf");
        app->add_option("--m", m, "number of measurement frequencies M");
        app->add_option("--b-mhz", b_mhz, "bandwidth B in MHz");
        app->add_option("--fmin-khz", fmin_khz, "minimum frequency interval in kHz");
        app->add_option("--k0", k0, "initial frequency index");
        app->add_option("--d0", d0, "true qrange in meters");
        app->add_option("--theta", theta, "phase constant in radians");
        app->add_option("--dmax", dmax, "search window width in meters");
        app->add_option("--c", c, "propagation speed in m/s");
        app->add_option("--seed", seed, "master seed");
    }

    ExperimentConfig resolve() const {
        ExperimentConfig cfg = config_path.empty() ? ExperimentConfig{} : load_config(config_path);
        if (!kind.empty()) {
            try {
                cfg.kind = parse_plan_kind(kind);
            } catch (const std::invalid_argument& e) {
                throw UsageError(e.what());
            }
        }
        if (m) cfg.m = *m;
        if (b_mhz) cfg.b_hz = *b_mhz * 1e6;
        if (fmin_khz) cfg.f_min_hz = *fmin_khz * 1e3;
        if (k0) cfg.k0 = *k0;
        if (d0) cfg.d0_m = *d0;
        if (theta) cfg.theta_rad = *theta;
        if (dmax) cfg.d_max_m = *dmax;
        if (c) cfg.c_mps = *c;
        if (seed) cfg.seed = *seed;
        cfg.validate();
        return cfg;
    }
};

inline std::string replay_dir() {
    static std::atomic<int> counter{0};
    const auto dir = std::filesystem::temp_directory_path() /
                     ("rips-replay-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(dir);
    return dir.string();
}

}  // namespace detail

/// Parses args (without the program name), runs the subcommand and returns the
/// exit code: 0 success, 2 usage error, 3 runtime failure.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"RIPS qrange estimation: MSE prediction, Monte Carlo simulation and bounds", "rips"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kVersion));

    detail::ConfigFlags flags;
    std::string snr_text = "-10:2:30";
    std::string out_path;
    bool db = false;

    auto* predict = app.add_subcommand("predict", "predicted MSE (LSF) or AMSE (RSF) over an SNR grid");
    flags.attach(predict);
    predict->add_option("--snr-db", snr_text, "start:step:stop, comma list or single value");
    predict->add_option("--out", out_path, "CSV path (default stdout)");
    predict->add_flag("--db", db, "emit MSE in dB re 1 m^2");

    int trials = 10000;
    unsigned threads = 0;
    bool figure1 = false;
    bool randomize_d0 = false;
    std::string theta_policy = "uniform";
    std::string prefix = "figure1_";
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo MSE of the ML estimator over an SNR grid");
    detail::ConfigFlags sim_flags;
    sim_flags.attach(simulate);
    simulate->add_option("--snr-db", snr_text, "start:step:stop, comma list or single value");
    simulate->add_option("--trials", trials, "trials per SNR point");
    simulate->add_option("--threads", threads, "worker threads (0 = hardware)");
    simulate->add_flag("--figure1", figure1, "LSF and RSF simulations and predictions (M=31 unless --m)");
    simulate->add_option("--out-prefix", prefix, "file prefix for --figure1 outputs");
    simulate->add_flag("--randomize-d0", randomize_d0, "draw d0 over the central half of the window");
    simulate->add_option("--theta-policy", theta_policy, "uniform or fixed")->check(CLI::IsMember({"uniform", "fixed"}));
    simulate->add_option("--out", out_path, "CSV path (default stdout)");
    simulate->add_flag("--db", db, "emit MSE in dB re 1 m^2");

    auto* crb = app.add_subcommand("crb", "CRB of the evenly stepped plan and average CRB of random plans over an SNR grid");
    detail::ConfigFlags crb_flags;
    crb_flags.attach(crb, false);
    crb->add_option("--snr-db", snr_text, "start:step:stop, comma list or single value");
    crb->add_option("--out", out_path, "CSV path (default stdout)");

    std::string profile_kind = "af";
    std::string plan_kind;
    std::optional<std::int64_t> n_avail;
    std::optional<double> window;
    std::int64_t samples = 2001;
    std::string sidelobes_path;
    auto* amb = app.add_subcommand("ambiguity", "ambiguity function profile and its sidelobes");
    detail::ConfigFlags amb_flags;
    amb_flags.attach(amb, false);
    amb->add_option("--kind", profile_kind, "af (fixed plan) or aaf (average over random plans)")
        ->check(CLI::IsMember({"af", "aaf"}));
    amb->add_option("--plan", plan_kind, "plan for af: lsf or rsf (drawn from --seed)");
    amb->add_option("--n", n_avail, "available frequency count N (sets B = (N-1) f_min)");
    amb->add_option("--window", window, "window width in meters (default d_max)");
    amb->add_option("--samples", samples, "odd number of profile samples");
    amb->add_option("--out", out_path, "profile CSV path (default stdout)");
    amb->add_option("--sidelobes", sidelobes_path, "sidelobe list CSV path (default stderr summary)");

    std::string pred_path;
    std::string sim_path;
    auto* compare = app.add_subcommand("compare", "join prediction and simulation CSVs by SNR; report dB deviation");
    compare->add_option("--pred", pred_path, "prediction CSV")->required();
    compare->add_option("--sim", sim_path, "simulation CSV")->required();
    compare->add_option("--out", out_path, "CSV path (default stdout)");

    std::string manifest_path;
    std::string replay_out;
    auto* replay = app.add_subcommand("replay", "re-run a manifest and check that outputs are byte-identical");
    replay->add_option("--manifest", manifest_path, "manifest JSON")->required();
    replay->add_option("--out-dir", replay_out, "directory for re-generated files (default: fresh temp dir)");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        std::string command;
        json params;
        Outputs outputs;
        std::map<std::string, std::string> paths;  // role -> file

        if (*replay) {
            json manifest;
            try {
                manifest = json::parse(read_file(manifest_path));
            } catch (const json::exception& e) {
                throw UsageError("cannot parse manifest: " + std::string(e.what()));
            }
            const auto dir = replay_out.empty() ? detail::replay_dir() : replay_out;
            std::filesystem::create_directories(dir);
            const auto regenerated = execute(manifest.at("command").get<std::string>(), manifest.at("params"), threads, &err);
            bool all_match = true;
            for (const auto& entry : manifest.at("outputs")) {
                const auto role = entry.at("role").get<std::string>();
                const auto it = std::find_if(regenerated.begin(), regenerated.end(),
                                             [&](const auto& o) { return o.first == role; });
                if (it == regenerated.end()) throw std::runtime_error("replay produced no output for role " + role);
                const auto path =
                    (std::filesystem::path(dir) / std::filesystem::path(entry.at("path").get<std::string>()).filename())
                        .string();
                write_file(path, it->second);
                const bool match = sha256_hex(it->second) == entry.at("sha256").get<std::string>();
                all_match = all_match && match;
                out << (match ? "MATCH " : "DIFFER ") << role << ' ' << path << '\n';
            }
            return all_match ? kExitOk : kExitRuntime;
        }

        if (*predict) {
            const auto cfg = flags.resolve();
            cfg.resolved_m();
            command = "predict";
            params = {{"config", to_json(cfg)}, {"snr_db", parse_snr_grid(snr_text)}, {"db", db}};
        } else if (*simulate) {
            auto cfg = sim_flags.resolve();
            if (figure1 && !cfg.m) cfg.m = 31;
            cfg.resolved_m();
            if (trials < 1) throw UsageError("--trials must be at least 1");
            command = "simulate";
            params = {{"config", to_json(cfg)},   {"snr_db", parse_snr_grid(snr_text)},
                      {"trials", trials},         {"figure1", figure1},
                      {"randomize_d0", randomize_d0}, {"theta_policy", theta_policy},
                      {"db", db}};
        } else if (*crb) {
            const auto cfg = crb_flags.resolve();
            cfg.resolved_m();
            command = "crb";
            params = {{"config", to_json(cfg)}, {"snr_db", parse_snr_grid(snr_text)}};
        } else if (*amb) {
            amb_flags.kind = plan_kind;
            auto cfg = amb_flags.resolve();
            if (n_avail) {
                if (*n_avail < 3) throw UsageError("--n must be at least 3");
                cfg.b_hz = static_cast<double>(*n_avail - 1) * cfg.f_min_hz;
            }
            command = "ambiguity";
            const double w = window ? *window : cfg.resolved_d_max();
            params = {{"config", to_json(cfg)}, {"profile", profile_kind}, {"window_m", w}, {"samples", samples}};
            if (!sidelobes_path.empty()) paths["sidelobes"] = sidelobes_path;
        } else if (*compare) {
            command = "compare";
            params = {{"pred", pred_path}, {"sim", sim_path}};
        }

        outputs = execute(command, params, threads, &err);

        if (command == "simulate" && figure1) {
            for (const auto& [role, content] : outputs) paths[role] = prefix + role + ".csv";
        } else if (!out_path.empty()) {
            paths[outputs.front().first] = out_path;
        }

        json written = json::array();
        for (const auto& [role, content] : outputs) {
            const auto it = paths.find(role);
            if (it == paths.end()) {
                if (role == outputs.front().first) out << content;
                else if (role == "sidelobes") err << "sidelobes found: " << std::count(content.begin(), content.end(), '\n') - 1 << '\n';
                continue;
            }
            write_file(it->second, content);
            written.push_back({{"role", role}, {"path", it->second}, {"sha256", sha256_hex(content)}});
        }
        if (!written.empty()) {
            json manifest;
            manifest["version"] = kVersion;
            manifest["timestamp"] = utc_timestamp();
            manifest["argv"] = args;
            manifest["command"] = command;
            manifest["params"] = params;
            if (params.contains("config")) manifest["seed"] = params["config"]["seed"];
            if (command == "compare")
                manifest["inputs"] = {{"pred_sha256", sha256_hex(read_file(pred_path))},
                                      {"sim_sha256", sha256_hex(read_file(sim_path))}};
            manifest["outputs"] = written;
            const std::string manifest_file =
                (command == "simulate" && figure1) ? prefix + "manifest.json" : paths.begin()->second + ".manifest.json";
            write_file(manifest_file, manifest.dump(2) + "\n");
            err << "wrote " << written.size() << " file(s); manifest " << manifest_file << '\n';
        }
        return kExitOk;
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
}

}  // namespace rips::cli

#endif  // RIPS_CLI_HPP
