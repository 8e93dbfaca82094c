#ifndef RIPS_CORE_MODEL_HPP
#define RIPS_CORE_MODEL_HPP

// Scenario and frequency-plan types for radio interferometric ranging, and
// synthesis of wrapped phase observations
//
//   phi_i = (2*pi*f_i*d0/c + theta + n_i) mod 2*pi,   n_i ~ N(0, sigma2)
//
// with f_i = (k0 + k_i) * f_min.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace rips {

inline constexpr double kSpeedOfLight = 299'792'458.0;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

enum class PlanKind { lsf, rsf };

inline std::string_view to_string(PlanKind kind) {
    return kind == PlanKind::lsf ? "lsf" : "rsf";
}

inline PlanKind parse_plan_kind(std::string_view text) {
    if (text == "lsf" || text == "LSF") return PlanKind::lsf;
    if (text == "rsf" || text == "RSF") return PlanKind::rsf;
    throw std::invalid_argument("unknown plan kind '" + std::string(text) + "' (expected lsf or rsf)");
}

/// Wraps an angle into [0, 2*pi).
inline double wrap_phase(double phase) {
    double w = std::fmod(phase, kTwoPi);
    if (w < 0.0) w += kTwoPi;
    if (w >= kTwoPi) w = 0.0;
    return w;
}

/// Fractional part of (k0 + k) * f_min * distance / c, in cycles.
///
/// The product is reduced modulo one before it is turned into radians so that
/// carrier-scale phases (hundreds of cycles) keep full precision.
inline double carrier_cycles(std::int64_t frequency_index, double f_min_hz, double distance_m, double c_mps) {
    const double base = f_min_hz * distance_m / c_mps;
    const double k = static_cast<double>(frequency_index);
    // Exact product split: k * base = p + err.
    const double p = k * base;
    const double err = std::fma(k, base, -p);
    const double cycles = (p - std::floor(p)) + err;
    return cycles - std::floor(cycles);
}

/// The measurement frequency set f_i = (k0 + k_i) * f_min drawn from a band of
/// N = B / f_min + 1 available frequencies.
class FrequencyPlan {
public:
    /// Validates and builds a plan from explicit indices. LSF plans must be
    /// evenly stepped over [0, N-1]; RSF plans accept any indices in range.
    static FrequencyPlan from_indices(PlanKind kind, double b_hz, double f_min_hz, std::int64_t k0,
                                      std::vector<std::int64_t> indices) {
        return FrequencyPlan(kind, b_hz, f_min_hz, k0, std::move(indices));
    }

    PlanKind kind() const noexcept { return kind_; }
    double bandwidth_hz() const noexcept { return b_hz_; }
    double f_min_hz() const noexcept { return f_min_hz_; }
    std::int64_t k0() const noexcept { return k0_; }
    std::int64_t available_count() const noexcept { return n_; }
    std::size_t size() const noexcept { return k_.size(); }
    std::span<const std::int64_t> indices() const noexcept { return k_; }

    std::int64_t absolute_index(std::size_t i) const { return k0_ + k_.at(i); }
    double frequency_hz(std::size_t i) const { return static_cast<double>(absolute_index(i)) * f_min_hz_; }

    std::vector<double> frequencies_hz() const {
        std::vector<double> f(k_.size());
        for (std::size_t i = 0; i < k_.size(); ++i) f[i] = frequency_hz(i);
        return f;
    }

    /// Highest minus lowest measurement frequency.
    double span_hz() const {
        if (k_.empty()) return 0.0;
        auto [lo, hi] = std::minmax_element(k_.begin(), k_.end());
        return static_cast<double>(*hi - *lo) * f_min_hz_;
    }

    /// c / f_min: period of every plan's objective function in distance.
    double unambiguous_distance_m(double c_mps = kSpeedOfLight) const { return c_mps / f_min_hz_; }

private:
    FrequencyPlan(PlanKind kind, double b_hz, double f_min_hz, std::int64_t k0, std::vector<std::int64_t> indices)
        : kind_(kind), b_hz_(b_hz), f_min_hz_(f_min_hz), k0_(k0), k_(std::move(indices)) {
        if (!(f_min_hz_ > 0.0) || !std::isfinite(f_min_hz_))
            throw std::invalid_argument("f_min must be positive and finite");
        if (!(b_hz_ >= 0.0) || !std::isfinite(b_hz_))
            throw std::invalid_argument("bandwidth must be non-negative and finite");
        const double steps = b_hz_ / f_min_hz_;
        const double rounded = std::round(steps);
        if (std::abs(steps - rounded) > 1e-9 * std::max(1.0, steps))
            throw std::invalid_argument("bandwidth must be an integer multiple of f_min");
        n_ = static_cast<std::int64_t>(rounded) + 1;
        if (k0_ < 0) throw std::invalid_argument("k0 must be non-negative");
        if (k_.empty()) throw std::invalid_argument("a frequency plan needs at least one frequency");
        for (auto k : k_) {
            if (k < 0 || k > n_ - 1)
                throw std::invalid_argument("frequency index " + std::to_string(k) + " outside [0, N-1]");
            if (k0_ + k <= 0) throw std::invalid_argument("measurement frequencies must be strictly positive");
        }
        if (kind_ == PlanKind::lsf) {
            const auto m = static_cast<std::int64_t>(k_.size());
            if (m < 2 || (n_ - 1) % (m - 1) != 0)
                throw std::invalid_argument("LSF plan requires (M-1) to divide (N-1)");
            const std::int64_t step = (n_ - 1) / (m - 1);
            for (std::int64_t i = 0; i < m; ++i)
                if (k_[static_cast<std::size_t>(i)] != i * step)
                    throw std::invalid_argument("LSF plan indices must be k_i = (i-1)(N-1)/(M-1)");
        }
    }

    PlanKind kind_;
    double b_hz_;
    double f_min_hz_;
    std::int64_t k0_;
    std::int64_t n_ = 0;
    std::vector<std::int64_t> k_;
};

/// Default initial index: first frequency near 400 MHz.
inline std::int64_t default_k0(double f_min_hz) {
    return static_cast<std::int64_t>(std::llround(400.0e6 / f_min_hz));
}

inline std::int64_t available_frequency_count(double b_hz, double f_min_hz) {
    if (!(f_min_hz > 0.0)) throw std::invalid_argument("f_min must be positive");
    return static_cast<std::int64_t>(std::llround(b_hz / f_min_hz)) + 1;
}

/// Evenly stepped plan k_i = (i-1)(N-1)/(M-1).
inline FrequencyPlan make_lsf_plan(double b_hz, double f_min_hz, std::int64_t k0, int m) {
    if (m < 3) throw std::invalid_argument("LSF plan needs M >= 3 (the ambiguity function must have sidelobes)");
    const std::int64_t n = available_frequency_count(b_hz, f_min_hz);
    if ((n - 1) % (m - 1) != 0)
        throw std::invalid_argument("LSF divisibility violated: N-1 = " + std::to_string(n - 1) +
                                    " is not divisible by M-1 = " + std::to_string(m - 1));
    const std::int64_t step = (n - 1) / (m - 1);
    std::vector<std::int64_t> k(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) k[static_cast<std::size_t>(i)] = i * step;
    return FrequencyPlan::from_indices(PlanKind::lsf, b_hz, f_min_hz, k0, std::move(k));
}

/// Plan with indices drawn i.i.d. uniform on [0, N-1] (with replacement).
template <class Engine>
FrequencyPlan draw_rsf_plan(double b_hz, double f_min_hz, std::int64_t k0, int m, Engine& engine) {
    if (m < 3) throw std::invalid_argument("RSF plan needs M >= 3");
    const std::int64_t n = available_frequency_count(b_hz, f_min_hz);
    if (n < m) throw std::invalid_argument("RSF plan needs N >= M");
    std::uniform_int_distribution<std::int64_t> pick(0, n - 1);
    std::vector<std::int64_t> k(static_cast<std::size_t>(m));
    for (auto& ki : k) ki = pick(engine);
    return FrequencyPlan::from_indices(PlanKind::rsf, b_hz, f_min_hz, k0, std::move(k));
}

inline FrequencyPlan make_rsf_plan(double b_hz, double f_min_hz, std::int64_t k0, int m, std::uint64_t seed) {
    std::mt19937_64 engine(seed);
    return draw_rsf_plan(b_hz, f_min_hz, k0, m, engine);
}

/// Ground truth for one ranging experiment. SNR is 1 / sigma2.
struct Scenario {
    double d0_m = 50.0;
    double theta_rad = 0.0;
    double sigma2 = 0.0;
    double c_mps = kSpeedOfLight;
    double d_max_m = 0.0;

    double snr_db() const { return -10.0 * std::log10(sigma2); }

    void validate(const FrequencyPlan& plan) const {
        if (!(sigma2 >= 0.0)) throw std::invalid_argument("sigma2 must be non-negative");
        if (!(c_mps > 0.0)) throw std::invalid_argument("propagation speed must be positive");
        if (!(d_max_m > 0.0)) throw std::invalid_argument("d_max must be positive");
        if (d_max_m > plan.unambiguous_distance_m(c_mps) * (1.0 + 1e-12))
            throw std::invalid_argument("d_max exceeds the unambiguous distance c/f_min");
        if (!std::isfinite(d0_m) || !std::isfinite(theta_rad))
            throw std::invalid_argument("d0 and theta must be finite");
    }
};

inline double sigma2_from_snr_db(double snr_db) { return std::pow(10.0, -snr_db / 10.0); }

/// Wrapped phase observations and the scenario that produced them.
struct PhaseMeasurements {
    std::vector<double> phases_rad;
    FrequencyPlan plan;
    Scenario scenario;
};

/// Noise-free phase 2*pi*f_i*d0/c + theta, wrapped.
inline double clean_phase(const FrequencyPlan& plan, std::size_t i, const Scenario& s) {
    return wrap_phase(kTwoPi * carrier_cycles(plan.absolute_index(i), plan.f_min_hz(), s.d0_m, s.c_mps) + s.theta_rad);
}

/// Draws phases from a caller-supplied engine; noise is added before wrapping.
template <class Engine>
PhaseMeasurements draw_phases(const FrequencyPlan& plan, const Scenario& scenario, Engine& engine) {
    scenario.validate(plan);
    std::normal_distribution<double> noise(0.0, std::sqrt(scenario.sigma2));
    std::vector<double> phases(plan.size());
    for (std::size_t i = 0; i < plan.size(); ++i) {
        const double n_i = scenario.sigma2 > 0.0 ? noise(engine) : 0.0;
        const double cycles = carrier_cycles(plan.absolute_index(i), plan.f_min_hz(), scenario.d0_m, scenario.c_mps);
        phases[i] = wrap_phase(kTwoPi * cycles + scenario.theta_rad + n_i);
    }
    return PhaseMeasurements{std::move(phases), plan, scenario};
}

inline PhaseMeasurements generate_phases(const FrequencyPlan& plan, const Scenario& scenario, std::uint64_t seed) {
    std::mt19937_64 engine(seed);
    return draw_phases(plan, scenario, engine);
}

using Point3 = std::array<double, 3>;

/// Transmitters A, B and receivers C, D.
struct NodeQuad {
    Point3 a{};
    Point3 b{};
    Point3 c{};
    Point3 d{};
};

inline double distance(const Point3& p, const Point3& q) {
    return std::hypot(p[0] - q[0], p[1] - q[1], p[2] - q[2]);
}

/// d_AD - d_AC + d_BC - d_BD.
inline double qrange_from_geometry(const NodeQuad& quad) {
    return distance(quad.a, quad.d) - distance(quad.a, quad.c) + distance(quad.b, quad.c) - distance(quad.b, quad.d);
}

/// theta = (2*pi*delta/c) * (d_AD - d_AC - d_BC + d_BD), delta being the
/// frequency difference of the two transmitted tones.
inline double theta_from_geometry(const NodeQuad& quad, double delta_hz, double c_mps = kSpeedOfLight) {
    const double combo =
        distance(quad.a, quad.d) - distance(quad.a, quad.c) - distance(quad.b, quad.c) + distance(quad.b, quad.d);
    return wrap_phase(kTwoPi * delta_hz / c_mps * combo);
}

}  // namespace rips

#endif  // RIPS_CORE_MODEL_HPP
