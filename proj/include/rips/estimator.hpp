#ifndef RIPS_ESTIMATOR_HPP
#define RIPS_ESTIMATOR_HPP

// Maximum-likelihood qrange estimate: argmax of the objective searching
// function V(d) = |sum_i exp(j phi_i) exp(-j 2 pi f_i d / c)| over a window.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include "rips/ambiguity.hpp"
#include "rips/core_model.hpp"

namespace rips {

struct SearchGrid {
    double center_m = 0.0;
    double width_m = 0.0;
    double coarse_step_m = 0.0;
    double refine_tolerance_m = 1e-6;

    /// Window [center - width/2, center + width/2] scanned at a sixteenth of the
    /// plan's lobe spacing.
    static SearchGrid for_plan(const FrequencyPlan& plan, double center_m, double width_m,
                               double c_mps = kSpeedOfLight) {
        return {center_m, width_m, af_lobe_spacing(plan, c_mps) / 16.0, 1e-6};
    }
};

struct Estimate {
    double d_hat_m = 0.0;
    double osf_peak = 0.0;
    std::size_t grid_evals = 0;
};

/// V(d) evaluated directly.
inline double osf_value(const PhaseMeasurements& meas, double d_m) {
    const auto& plan = meas.plan;
    const double c = meas.scenario.c_mps;
    std::complex<double> sum{0.0, 0.0};
    for (std::size_t i = 0; i < plan.size(); ++i) {
        const double arg = meas.phases_rad[i] - kTwoPi * carrier_cycles(plan.absolute_index(i), plan.f_min_hz(), d_m, c);
        sum += std::polar(1.0, arg);
    }
    return std::abs(sum);
}

namespace detail {

// V around a center, written with frequencies taken relative to their mean:
// T(u) = sum_i z_i exp(-j 2 pi g_i u / c), |T(u)| = V(center + u).
class CenteredOsf {
public:
    CenteredOsf(const PhaseMeasurements& meas, double center_m) : c_(meas.scenario.c_mps) {
        const auto& plan = meas.plan;
        if (meas.phases_rad.size() != plan.size()) throw std::invalid_argument("phase count does not match the plan");
        double mean_k = 0.0;
        for (auto k : plan.indices()) mean_k += static_cast<double>(k);
        mean_k /= static_cast<double>(plan.size());
        z_.reserve(plan.size());
        g_.reserve(plan.size());
        for (std::size_t i = 0; i < plan.size(); ++i) {
            if (!std::isfinite(meas.phases_rad[i])) throw std::invalid_argument("non-finite phase");
            const double arg = meas.phases_rad[i] -
                               kTwoPi * carrier_cycles(plan.absolute_index(i), plan.f_min_hz(), center_m, c_);
            z_.push_back(std::polar(1.0, arg));
            g_.push_back((static_cast<double>(plan.indices()[i]) - mean_k) * plan.f_min_hz());
        }
    }

    std::complex<double> sum(double u) const {
        std::complex<double> s{0.0, 0.0};
        for (std::size_t i = 0; i < z_.size(); ++i) s += z_[i] * std::polar(1.0, -kTwoPi * g_[i] * u / c_);
        return s;
    }

    double power(double u) const { return std::norm(sum(u)); }

    /// d|T|^2/du = 2 Re(conj(T) T').
    double power_slope(double u) const {
        std::complex<double> s{0.0, 0.0};
        std::complex<double> ds{0.0, 0.0};
        for (std::size_t i = 0; i < z_.size(); ++i) {
            const auto term = z_[i] * std::polar(1.0, -kTwoPi * g_[i] * u / c_);
            s += term;
            ds += term * std::complex<double>(0.0, -kTwoPi * g_[i] / c_);
        }
        return 2.0 * std::real(std::conj(s) * ds);
    }

    /// |T| on u_j = u_first + j*h, j = 0..count-1, by phasor rotation,
    /// re-seeded from exact values every 64 steps.
    std::vector<double> scan(double u_first, double h, std::size_t count) const {
        std::vector<double> out(count);
        std::vector<std::complex<double>> cur(z_.size());
        std::vector<std::complex<double>> rot(z_.size());
        for (std::size_t i = 0; i < z_.size(); ++i) rot[i] = std::polar(1.0, -kTwoPi * g_[i] * h / c_);
        for (std::size_t j = 0; j < count; ++j) {
            if (j % 64 == 0) {
                const double u = u_first + static_cast<double>(j) * h;
                for (std::size_t i = 0; i < z_.size(); ++i) cur[i] = z_[i] * std::polar(1.0, -kTwoPi * g_[i] * u / c_);
            }
            std::complex<double> s{0.0, 0.0};
            for (std::size_t i = 0; i < z_.size(); ++i) {
                s += cur[i];
                cur[i] *= rot[i];
            }
            out[j] = std::abs(s);
        }
        return out;
    }

private:
    double c_;
    std::vector<std::complex<double>> z_;
    std::vector<double> g_;
};

}  // namespace detail

/// Coarse scan of V over the grid, then refinement of the best sample.
///
/// The refinement solves d V^2 / dd = 0 with TOMS748 when the slope changes
/// sign across the neighbouring samples, and falls back to Brent's method on
/// V^2 otherwise (e.g. a peak at the window edge). Equal coarse samples are
/// resolved toward the window center.
inline Estimate ml_estimate(const PhaseMeasurements& meas, const SearchGrid& grid) {
    if (!(grid.width_m > 0.0) || !std::isfinite(grid.width_m)) throw std::invalid_argument("search width must be positive");
    if (!(grid.coarse_step_m > 0.0)) throw std::invalid_argument("coarse step must be positive");
    if (!(grid.refine_tolerance_m > 0.0)) throw std::invalid_argument("refine tolerance must be positive");
    if (!std::isfinite(grid.center_m)) throw std::invalid_argument("search center must be finite");
    if (meas.plan.size() < 2) throw std::invalid_argument("estimation needs at least two frequencies");
    const double c = meas.scenario.c_mps;
    if (grid.coarse_step_m > af_lobe_spacing(meas.plan, c) / 4.0)
        throw std::invalid_argument("coarse step exceeds a quarter of the mainlobe width");

    const detail::CenteredOsf osf(meas, grid.center_m);
    const double half = 0.5 * grid.width_m;
    const auto intervals = static_cast<std::size_t>(std::ceil(grid.width_m / grid.coarse_step_m));
    const double h = grid.width_m / static_cast<double>(intervals);
    const auto values = osf.scan(-half, h, intervals + 1);

    std::size_t best = 0;
    for (std::size_t j = 1; j < values.size(); ++j) {
        const double uj = -half + static_cast<double>(j) * h;
        const double ub = -half + static_cast<double>(best) * h;
        if (values[j] > values[best] || (values[j] == values[best] && std::abs(uj) < std::abs(ub))) best = j;
    }

    const double u0 = -half + static_cast<double>(best) * h;
    const double lo = std::max(-half, u0 - h);
    const double hi = std::min(half, u0 + h);
    double u_hat = u0;
    const double slope_lo = osf.power_slope(lo);
    const double slope_hi = osf.power_slope(hi);
    if (slope_lo > 0.0 && slope_hi < 0.0) {
        const double abs_tol = std::min(grid.refine_tolerance_m, 1e-12 * std::max(1.0, grid.width_m));
        auto tol = [abs_tol](double a, double b) { return std::abs(b - a) <= abs_tol; };
        std::uintmax_t iters = 200;
        const auto [a, b] = boost::math::tools::toms748_solve([&](double u) { return osf.power_slope(u); }, lo, hi,
                                                              slope_lo, slope_hi, tol, iters);
        u_hat = 0.5 * (a + b);
    } else {
        auto neg = [&](double u) { return -osf.power(u); };
        u_hat = boost::math::tools::brent_find_minima(neg, lo, hi, 52).first;
    }
    u_hat = std::clamp(u_hat, -half, half);
    double peak = std::abs(osf.sum(u_hat));
    if (peak < values[best]) {
        u_hat = u0;
        peak = values[best];
    }
    return {grid.center_m + u_hat, peak, values.size()};
}

}  // namespace rips

#endif  // RIPS_ESTIMATOR_HPP
