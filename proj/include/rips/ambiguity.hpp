#ifndef RIPS_AMBIGUITY_HPP
#define RIPS_AMBIGUITY_HPP

// Ambiguity function of a fixed plan, the average ambiguity function over
// random plans, and numeric extraction of their sidelobe peaks.
//
// Offsets are tau = d0 - d in meters. The AF is always summed directly over
// the plan's frequencies; closed-form peak positions are only used to predict
// how many sidelobes a window should contain.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include <boost/math/tools/minima.hpp>

#include "rips/core_model.hpp"

namespace rips {

/// (1/M) sum_i exp(j 2 pi f_i tau / c).
inline std::complex<double> af_relative_level(const FrequencyPlan& plan, double tau_m, double c_mps = kSpeedOfLight) {
    std::complex<double> sum{0.0, 0.0};
    for (std::size_t i = 0; i < plan.size(); ++i)
        sum += std::polar(1.0, kTwoPi * carrier_cycles(plan.absolute_index(i), plan.f_min_hz(), tau_m, c_mps));
    return sum / static_cast<double>(plan.size());
}

/// G(tau) = |sum_i exp(j 2 pi f_i tau / c)|.
inline double af_value(const FrequencyPlan& plan, double tau_m, double c_mps = kSpeedOfLight) {
    return static_cast<double>(plan.size()) * std::abs(af_relative_level(plan, tau_m, c_mps));
}

namespace detail {

// sin(N h) / (N sin h), continued through the removable singularities.
inline double dirichlet_ratio(std::int64_t n, double h) {
    const double nd = static_cast<double>(n);
    const double s = std::sin(h);
    if (std::abs(s) < 1e-12) return std::cos(nd * h) / std::cos(h);
    return std::sin(nd * h) / (nd * s);
}

}  // namespace detail

/// E[exp(j 2 pi f tau / c)] for f = (k0 + k) f_min with k uniform on {0..N-1}.
inline std::complex<double> aaf_relative_level(std::int64_t n, std::int64_t k0, double f_min_hz, double tau_m,
                                               double c_mps = kSpeedOfLight) {
    if (n < 1) throw std::invalid_argument("N must be positive");
    const double omega = kTwoPi * f_min_hz * tau_m / c_mps;
    const double angle =
        kTwoPi * carrier_cycles(k0, f_min_hz, tau_m, c_mps) + 0.5 * omega * static_cast<double>(n - 1);
    return std::polar(detail::dirichlet_ratio(n, 0.5 * omega), angle);
}

/// |M sin(pi tau N f_min / c) / (N sin(pi tau f_min / c))|; equals M at
/// multiples of c / f_min.
inline double aaf_value(int m, std::int64_t n, double f_min_hz, double tau_m, double c_mps = kSpeedOfLight) {
    if (n < 2) throw std::invalid_argument("the AAF needs N >= 2");
    const double h = std::numbers::pi * tau_m * f_min_hz / c_mps;
    return static_cast<double>(m) * std::abs(detail::dirichlet_ratio(n, h));
}

enum class ProfileSource { af, aaf };

struct SidelobePeak {
    double position_m = 0.0;         ///< d_n
    double offset_m = 0.0;           ///< d_n - d0
    std::complex<double> level{};    ///< r_n, |r_n| <= 1
};

struct SidelobeProfile {
    std::vector<SidelobePeak> peaks;  ///< sorted by |d_n - d0|
    double d0_m = 0.0;
    double mainlobe_halfwidth_m = 0.0;
    ProfileSource source = ProfileSource::af;
    std::size_t expected_count = 0;
    bool count_mismatch = false;      ///< peaks.size() != expected_count
};

/// Offsets (-1)^n * spacing * (ceil(n/2) + 0.5), n = 1..count.
inline std::vector<double> nominal_sidelobe_offsets(double spacing_m, std::int64_t count) {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(std::max<std::int64_t>(count, 0)));
    for (std::int64_t n = 1; n <= count; ++n) {
        const double lobe = static_cast<double>((n + 1) / 2) + 0.5;
        out.push_back((n % 2 == 0 ? 1.0 : -1.0) * spacing_m * lobe);
    }
    return out;
}

/// Number of nominal sidelobes of the given spacing inside [-window/2, window/2].
inline std::size_t nominal_count_in_window(double spacing_m, std::int64_t count, double window_m) {
    const double half = 0.5 * window_m * (1.0 + 1e-9);
    std::size_t inside = 0;
    for (std::int64_t n = 1; n <= count; ++n) {
        const double lobe = static_cast<double>((n + 1) / 2) + 0.5;
        if (spacing_m * lobe > half) break;
        ++inside;
    }
    return inside;
}

/// Local maxima of a real profile on [-window/2, window/2], excluding the
/// mainlobe peak at the origin.
///
/// Samples at no more than sample_step (one extra sample beyond each edge so
/// only true maxima of the profile count), refines each candidate with Brent's
/// method and clamps it into the window. A peak sitting on both window edges
/// of a profile that is periodic with the window length is reported once.
inline std::vector<double> locate_sidelobe_offsets(const std::function<double(double)>& profile, double window_m,
                                                   double sample_step_m, double exclude_radius_m) {
    if (!(window_m > 0.0)) throw std::invalid_argument("window must be positive");
    if (!(sample_step_m > 0.0)) throw std::invalid_argument("sample step must be positive");
    const double half = 0.5 * window_m;
    const auto intervals = static_cast<std::int64_t>(std::ceil(window_m / sample_step_m));
    const double h = window_m / static_cast<double>(intervals);
    std::vector<double> v(static_cast<std::size_t>(intervals) + 3);
    for (std::int64_t j = -1; j <= intervals + 1; ++j)
        v[static_cast<std::size_t>(j + 1)] = profile(-half + static_cast<double>(j) * h);

    std::vector<double> found;
    for (std::int64_t j = 0; j <= intervals; ++j) {
        const double prev = v[static_cast<std::size_t>(j)];
        const double here = v[static_cast<std::size_t>(j + 1)];
        const double next = v[static_cast<std::size_t>(j + 2)];
        if (!(here >= prev && here > next)) continue;
        const double tau = -half + static_cast<double>(j) * h;
        const double lo = std::max(-half, tau - h);
        const double hi = std::min(half, tau + h);
        auto neg = [&](double t) { return -profile(t); };
        auto [best, neg_value] = boost::math::tools::brent_find_minima(neg, lo, hi, 52);
        double peak = (-neg_value >= here) ? best : tau;
        peak = std::clamp(peak, -half, half);
        if (std::abs(peak) <= exclude_radius_m) continue;
        found.push_back(peak);
    }

    // Periodic wrap: the same lobe on both edges.
    const double edge_tol = h;
    auto at_left = std::find_if(found.begin(), found.end(), [&](double t) { return t <= -half + edge_tol; });
    auto at_right = std::find_if(found.begin(), found.end(), [&](double t) { return t >= half - edge_tol; });
    if (at_left != found.end() && at_right != found.end()) {
        const double scale = std::max({std::abs(v[1]), std::abs(v.back()), 1e-300});
        bool periodic = true;
        for (double probe : {0.0, 0.37 * h, -0.61 * h, 2.3 * h})
            if (std::abs(profile(-half + probe) - profile(half + probe)) > 1e-9 * scale) periodic = false;
        if (periodic) found.erase(at_left);
    }

    std::sort(found.begin(), found.end(), [](double x, double y) {
        if (std::abs(x) != std::abs(y)) return std::abs(x) < std::abs(y);
        return x < y;
    });
    return found;
}

/// Builds a sidelobe profile from a magnitude profile tau -> |G| and the
/// matching complex relative level tau -> r.
inline SidelobeProfile extract_sidelobes(const std::function<double(double)>& profile,
                                         const std::function<std::complex<double>(double)>& level, double d0_m,
                                         double window_m, double sample_step_m, double mainlobe_halfwidth_m,
                                         std::size_t expected_count, ProfileSource source) {
    SidelobeProfile out;
    out.d0_m = d0_m;
    out.mainlobe_halfwidth_m = mainlobe_halfwidth_m;
    out.source = source;
    out.expected_count = expected_count;
    // Peaks are searched in offset u = d - d0; the profiles are even so
    // tau = -u carries the same magnitude.
    for (double u : locate_sidelobe_offsets(profile, window_m, sample_step_m, 0.5 * mainlobe_halfwidth_m)) {
        SidelobePeak p;
        p.offset_m = u;
        p.position_m = d0_m + u;
        p.level = level(-u);
        if (std::abs(p.level) > 1.0) p.level /= std::abs(p.level);
        out.peaks.push_back(p);
    }
    out.count_mismatch = out.peaks.size() != expected_count;
    return out;
}

/// c / (f_span * M / (M-1)): Dirichlet lobe spacing for a plan spanning f_span.
inline double af_lobe_spacing(const FrequencyPlan& plan, double c_mps = kSpeedOfLight) {
    const double span = plan.span_hz();
    const double m = static_cast<double>(plan.size());
    if (plan.size() < 2 || span <= 0.0) throw std::invalid_argument("plan has no frequency spread");
    return c_mps * (m - 1.0) / (m * span);
}

/// Distance from the AF peak to its first minimum, located numerically.
inline double af_mainlobe_halfwidth(const FrequencyPlan& plan, double c_mps = kSpeedOfLight) {
    const double spacing = af_lobe_spacing(plan, c_mps);
    const double h = spacing / 64.0;
    auto power = [&](double t) { return std::norm(af_relative_level(plan, t, c_mps)); };
    double prev = power(0.0);
    double here = power(h);
    std::int64_t j = 1;
    const auto limit = static_cast<std::int64_t>(plan.unambiguous_distance_m(c_mps) / (2.0 * h));
    while (j < limit) {
        const double next = power(static_cast<double>(j + 1) * h);
        if (next > here) break;
        prev = here;
        here = next;
        ++j;
    }
    (void)prev;
    const double lo = static_cast<double>(j - 1) * h;
    const double hi = static_cast<double>(j + 1) * h;
    return boost::math::tools::brent_find_minima(power, lo, hi, 52).first;
}

/// c / (N f_min), the first null of the AAF.
inline double aaf_mainlobe_halfwidth(std::int64_t n, double f_min_hz, double c_mps = kSpeedOfLight) {
    return c_mps / (static_cast<double>(n) * f_min_hz);
}

inline constexpr int kSamplesPerLobe = 32;

/// Sidelobes of a plan's AF within [d0 - window/2, d0 + window/2].
inline SidelobeProfile af_sidelobes(const FrequencyPlan& plan, double d0_m, double window_m,
                                    double c_mps = kSpeedOfLight) {
    if (window_m > plan.unambiguous_distance_m(c_mps) * (1.0 + 1e-12))
        throw std::invalid_argument("window exceeds the unambiguous distance c/f_min");
    const double spacing = af_lobe_spacing(plan, c_mps);
    const auto m = static_cast<std::int64_t>(plan.size());
    const std::size_t expected = nominal_count_in_window(spacing, m - 2, window_m);
    return extract_sidelobes([&](double t) { return af_value(plan, t, c_mps); },
                             [&](double t) { return af_relative_level(plan, t, c_mps); }, d0_m, window_m,
                             spacing / kSamplesPerLobe, af_mainlobe_halfwidth(plan, c_mps), expected,
                             ProfileSource::af);
}

/// Sidelobes of the AAF (random plans of M out of N frequencies) within the window.
inline SidelobeProfile aaf_sidelobes(int m, std::int64_t n, double f_min_hz, std::int64_t k0, double d0_m,
                                     double window_m, double c_mps = kSpeedOfLight) {
    if (window_m > c_mps / f_min_hz * (1.0 + 1e-12))
        throw std::invalid_argument("window exceeds the unambiguous distance c/f_min");
    const double spacing = aaf_mainlobe_halfwidth(n, f_min_hz, c_mps);
    const std::size_t expected = nominal_count_in_window(spacing, n - 2, window_m);
    return extract_sidelobes([&](double t) { return aaf_value(m, n, f_min_hz, t, c_mps); },
                             [&](double t) { return aaf_relative_level(n, k0, f_min_hz, t, c_mps); }, d0_m,
                             window_m, spacing / kSamplesPerLobe, spacing, expected, ProfileSource::aaf);
}

}  // namespace rips

#endif  // RIPS_AMBIGUITY_HPP
