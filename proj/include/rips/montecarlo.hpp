#ifndef RIPS_MONTECARLO_HPP
#define RIPS_MONTECARLO_HPP

// Monte Carlo sweeps of the ML estimator over SNR, and direct simulation of
// the sidelobe exceedance events.
//
// Every trial draws from its own engines seeded by derive_seed(master, snr
// index, trial, stream), so results do not depend on the thread schedule.
// Squared errors are stored per trial and reduced in trial order.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <optional>
#include <random>
#include <stdexcept>
#include <thread>
#include <vector>

#include "rips/ambiguity.hpp"
#include "rips/core_model.hpp"
#include "rips/estimator.hpp"

namespace rips {

enum class SeedStream : std::uint64_t { noise = 0, plan = 1, aux = 2 };

/// splitmix64 finalizer.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed for one (snr point, trial, stream), chained through splitmix64.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t snr_index, std::uint64_t trial, SeedStream stream) {
    std::uint64_t h = splitmix64(master);
    h = splitmix64(h ^ snr_index);
    h = splitmix64(h ^ trial);
    return splitmix64(h ^ static_cast<std::uint64_t>(stream));
}

enum class ThetaPolicy { fixed, uniform };

struct SweepConfig {
    std::vector<double> snr_db_grid;
    int trials_per_point = 10000;
    PlanKind kind = PlanKind::lsf;
    int m = 31;
    double b_hz = 30e6;
    double f_min_hz = 1e3;
    std::int64_t k0 = 400000;
    double d0_m = 50.0;
    bool randomize_d0 = false;  ///< d0 uniform over the central half of the window
    ThetaPolicy theta_policy = ThetaPolicy::uniform;
    double theta_rad = 0.0;     ///< used when theta_policy is fixed
    double d_max_m = 0.0;       ///< 0 selects (M-1) c / B
    double c_mps = kSpeedOfLight;
    std::uint64_t master_seed = 2014;
    unsigned threads = 0;       ///< 0 selects hardware concurrency

    double window_m() const { return d_max_m > 0.0 ? d_max_m : static_cast<double>(m - 1) * c_mps / b_hz; }

    void validate() const {
        if (snr_db_grid.empty()) throw std::invalid_argument("SNR grid is empty");
        if (trials_per_point < 1) throw std::invalid_argument("trials per point must be at least 1");
        if (m < 3) throw std::invalid_argument("M must be at least 3");
        if (!(b_hz > 0.0) || !(f_min_hz > 0.0)) throw std::invalid_argument("B and f_min must be positive");
        if (!(c_mps > 0.0)) throw std::invalid_argument("propagation speed must be positive");
        if (window_m() > c_mps / f_min_hz * (1.0 + 1e-12))
            throw std::invalid_argument("d_max exceeds the unambiguous distance c/f_min");
        for (double s : snr_db_grid)
            if (!std::isfinite(s)) throw std::invalid_argument("SNR values must be finite");
    }
};

struct CurvePoint {
    double snr_db = 0.0;
    double sigma2 = 0.0;
    double empirical_mse_m2 = 0.0;
    double std_error_m2 = 0.0;
    double outlier_rate = 0.0;
    int trials = 0;
};

struct TrialResult {
    double squared_error_m2 = 0.0;
    bool outlier = false;
};

/// One estimate with its own seeded engines.
inline TrialResult run_trial(const SweepConfig& cfg, const FrequencyPlan* fixed_plan, double outlier_threshold_m,
                             double sigma2, std::uint64_t snr_index, std::uint64_t trial) {
    const double window = cfg.window_m();
    std::mt19937_64 aux(derive_seed(cfg.master_seed, snr_index, trial, SeedStream::aux));
    Scenario s;
    s.sigma2 = sigma2;
    s.c_mps = cfg.c_mps;
    s.d_max_m = window;
    s.d0_m = cfg.d0_m;
    if (cfg.randomize_d0) s.d0_m += std::uniform_real_distribution<double>(-0.25 * window, 0.25 * window)(aux);
    s.theta_rad = cfg.theta_policy == ThetaPolicy::uniform
                      ? std::uniform_real_distribution<double>(0.0, kTwoPi)(aux)
                      : cfg.theta_rad;

    FrequencyPlan plan = fixed_plan ? *fixed_plan : [&] {
        std::mt19937_64 pe(derive_seed(cfg.master_seed, snr_index, trial, SeedStream::plan));
        return draw_rsf_plan(cfg.b_hz, cfg.f_min_hz, cfg.k0, cfg.m, pe);
    }();
    std::mt19937_64 noise(derive_seed(cfg.master_seed, snr_index, trial, SeedStream::noise));
    const auto meas = draw_phases(plan, s, noise);
    // The window stays centred on the nominal d0 so a randomized d0 moves
    // relative to the grid.
    const auto est = ml_estimate(meas, SearchGrid::for_plan(plan, cfg.d0_m, window, cfg.c_mps));
    const double err = est.d_hat_m - s.d0_m;
    return {err * err, std::abs(err) > outlier_threshold_m};
}

/// Mainlobe half-width used to classify a trial as an outlier.
inline double sweep_outlier_threshold(const SweepConfig& cfg) {
    if (cfg.kind == PlanKind::lsf)
        return af_mainlobe_halfwidth(make_lsf_plan(cfg.b_hz, cfg.f_min_hz, cfg.k0, cfg.m), cfg.c_mps);
    return aaf_mainlobe_halfwidth(available_frequency_count(cfg.b_hz, cfg.f_min_hz), cfg.f_min_hz, cfg.c_mps);
}

namespace detail {

// Runs body(i) for i in [0, count) on a pool; the first exception stops the
// remaining work and is rethrown.
template <class Body>
void parallel_for(std::size_t count, unsigned threads, Body body) {
    unsigned workers = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(count, 1)));
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto work = [&] {
        constexpr std::size_t chunk = 64;
        while (!failed.load()) {
            const std::size_t begin = next.fetch_add(chunk);
            if (begin >= count) break;
            const std::size_t end = std::min(count, begin + chunk);
            try {
                for (std::size_t i = begin; i < end; ++i) body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                failed = true;
            }
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    if (error) std::rethrow_exception(error);
}

}  // namespace detail

/// Empirical MSE at one noise level; snr_index selects the seed block.
inline CurvePoint run_point(const SweepConfig& cfg, std::size_t snr_index, double sigma2) {
    cfg.validate();
    if (!(sigma2 >= 0.0)) throw std::invalid_argument("sigma2 must be non-negative");
    std::optional<FrequencyPlan> lsf;
    if (cfg.kind == PlanKind::lsf) lsf = make_lsf_plan(cfg.b_hz, cfg.f_min_hz, cfg.k0, cfg.m);
    const double threshold = sweep_outlier_threshold(cfg);
    const auto trials = static_cast<std::size_t>(cfg.trials_per_point);
    std::vector<TrialResult> results(trials);
    detail::parallel_for(trials, cfg.threads, [&](std::size_t t) {
        results[t] = run_trial(cfg, lsf ? &*lsf : nullptr, threshold, sigma2, snr_index, t);
    });
    const double n = static_cast<double>(trials);
    double sum = 0.0;
    std::size_t outliers = 0;
    for (const auto& r : results) {
        sum += r.squared_error_m2;
        outliers += r.outlier ? 1 : 0;
    }
    const double mean = sum / n;
    double dev = 0.0;
    for (const auto& r : results) dev += (r.squared_error_m2 - mean) * (r.squared_error_m2 - mean);
    const double var = trials > 1 ? dev / (n - 1.0) : 0.0;
    const double snr_db = sigma2 > 0.0 ? -10.0 * std::log10(sigma2) : std::numeric_limits<double>::infinity();
    return {snr_db, sigma2, mean, std::sqrt(var / n), static_cast<double>(outliers) / n, cfg.trials_per_point};
}

/// Empirical MSE (AMSE for random plans) at every SNR of the grid. Random plans
/// are redrawn for each trial.
inline std::vector<CurvePoint> run_sweep(const SweepConfig& cfg) {
    cfg.validate();
    std::vector<CurvePoint> out;
    for (std::size_t p = 0; p < cfg.snr_db_grid.size(); ++p) {
        out.push_back(run_point(cfg, p, sigma2_from_snr_db(cfg.snr_db_grid[p])));
        out.back().snr_db = cfg.snr_db_grid[p];
    }
    return out;
}

struct ExceedanceEstimate {
    double probability = 0.0;
    double std_error = 0.0;
    std::int64_t trials = 0;
};

namespace detail {

inline ExceedanceEstimate finish_exceedance(double hits, std::int64_t trials) {
    const double n = static_cast<double>(trials);
    const double p = hits / n;
    return {p, std::sqrt(std::max(p * (1.0 - p), 0.0) / n), trials};
}

// +1 when |y0| < |yn|, +1/2 on an exact tie.
inline double exceedance_score(std::complex<double> y0, std::complex<double> yn) {
    const double a = std::norm(y0);
    const double b = std::norm(yn);
    return a < b ? 1.0 : (a == b ? 0.5 : 0.0);
}

}  // namespace detail

/// Frequency of |y_0| < |y_n| with y_0 = sum exp(j n_i) and
/// y_n = sum exp(j(2 pi f_i (d0 - d_n)/c + n_i)), n_i ~ N(0, sigma2), for a fixed plan.
inline ExceedanceEstimate empirical_exceedance(const FrequencyPlan& plan, const Scenario& scenario, double d_n_m,
                                               std::int64_t trials, std::uint64_t seed) {
    if (trials < 1) throw std::invalid_argument("trials must be at least 1");
    std::vector<std::complex<double>> steer(plan.size());
    for (std::size_t i = 0; i < plan.size(); ++i)
        steer[i] = std::polar(1.0, kTwoPi * carrier_cycles(plan.absolute_index(i), plan.f_min_hz(),
                                                           scenario.d0_m - d_n_m, scenario.c_mps));
    std::mt19937_64 engine(seed);
    std::normal_distribution<double> noise(0.0, std::sqrt(scenario.sigma2));
    double hits = 0.0;
    for (std::int64_t t = 0; t < trials; ++t) {
        std::complex<double> y0{0.0, 0.0};
        std::complex<double> yn{0.0, 0.0};
        for (std::size_t i = 0; i < plan.size(); ++i) {
            const auto e = scenario.sigma2 > 0.0 ? std::polar(1.0, noise(engine)) : std::complex<double>(1.0, 0.0);
            y0 += e;
            yn += steer[i] * e;
        }
        hits += detail::exceedance_score(y0, yn);
    }
    return detail::finish_exceedance(hits, trials);
}

/// Same event with a fresh random plan of M frequencies in every draw.
inline ExceedanceEstimate empirical_exceedance_rsf(int m, double b_hz, double f_min_hz, std::int64_t k0,
                                                   double offset_m, double sigma2, std::int64_t trials,
                                                   std::uint64_t seed, double c_mps = kSpeedOfLight) {
    if (trials < 1) throw std::invalid_argument("trials must be at least 1");
    if (m < 2) throw std::invalid_argument("M must be at least 2");
    const std::int64_t n = available_frequency_count(b_hz, f_min_hz);
    std::mt19937_64 engine(seed);
    std::uniform_int_distribution<std::int64_t> pick(0, n - 1);
    std::normal_distribution<double> noise(0.0, std::sqrt(sigma2));
    double hits = 0.0;
    for (std::int64_t t = 0; t < trials; ++t) {
        std::complex<double> y0{0.0, 0.0};
        std::complex<double> yn{0.0, 0.0};
        for (int i = 0; i < m; ++i) {
            const std::int64_t k = pick(engine);
            const auto steer = std::polar(1.0, kTwoPi * carrier_cycles(k0 + k, f_min_hz, -offset_m, c_mps));
            const auto e = sigma2 > 0.0 ? std::polar(1.0, noise(engine)) : std::complex<double>(1.0, 0.0);
            y0 += e;
            yn += steer * e;
        }
        hits += detail::exceedance_score(y0, yn);
    }
    return detail::finish_exceedance(hits, trials);
}

}  // namespace rips

#endif  // RIPS_MONTECARLO_HPP
