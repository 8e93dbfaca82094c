#ifndef RIPS_SPECTRAL_HPP
#define RIPS_SPECTRAL_HPP

// Modified Bessel function I0 and the first-order Marcum Q function.
//
// Every routine works with exponentially scaled Bessel values
// I_k(x) * exp(-x), so arguments of order sqrt(M * SNR) (thousands, in the
// outlier-probability formulas) never overflow.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace rips::special {

namespace detail {

inline void require_nonnegative(double x, const char* what) {
    if (!(x >= 0.0)) throw std::domain_error(std::string(what) + " must be a non-negative number");
}

// Power series sum_k (x/2)^{2k} / (k!)^2; all terms positive.
inline double i0_series(double x) {
    const double q = 0.25 * x * x;
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k < 500; ++k) {
        term *= q / (static_cast<double>(k) * static_cast<double>(k));
        sum += term;
        if (term < sum * 1e-17) break;
    }
    return sum;
}

// Hankel expansion of exp(-x) I0(x); every coefficient is positive for order 0.
inline double i0e_asymptotic(double x) {
    const double inv8x = 1.0 / (8.0 * x);
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k < 200; ++k) {
        const double odd = 2.0 * k - 1.0;
        const double next = term * odd * odd * inv8x / k;
        if (next >= term) break;  // divergent tail begins
        term = next;
        sum += term;
        if (term < sum * 1e-17) break;
    }
    return sum / std::sqrt(2.0 * std::numbers::pi * x);
}

inline constexpr double kSeriesLimit = 20.0;

}  // namespace detail

/// exp(-x) * I0(x) for x >= 0.
inline double bessel_i0e(double x) {
    detail::require_nonnegative(x, "bessel_i0e argument");
    if (x == 0.0) return 1.0;
    if (x < detail::kSeriesLimit) return detail::i0_series(x) * std::exp(-x);
    return detail::i0e_asymptotic(x);
}

/// I0(x) for x >= 0. Overflows to +inf beyond x ~ 713; use bessel_i0e there.
inline double bessel_i0(double x) {
    detail::require_nonnegative(x, "bessel_i0 argument");
    if (x < detail::kSeriesLimit) return detail::i0_series(x);
    return detail::i0e_asymptotic(x) * std::exp(x);
}

/// exp(-x) * I_k(x) for k = 0..kmax, by Miller's backward recurrence
/// normalised against bessel_i0e.
inline std::vector<double> bessel_ie_sequence(double x, int kmax) {
    detail::require_nonnegative(x, "bessel_ie_sequence argument");
    if (kmax < 0) throw std::invalid_argument("kmax must be non-negative");
    std::vector<double> out(static_cast<std::size_t>(kmax) + 1, 0.0);
    if (x == 0.0) {
        out[0] = 1.0;
        return out;
    }
    // Start far enough up that the recessive K_k contamination has decayed:
    // below order ~sqrt(x) it shrinks like exp(-(start^2 - k^2)/x).
    const double k2 = static_cast<double>(kmax) * kmax;
    const int start = std::max(kmax + 20 + 2 * static_cast<int>(std::sqrt(200.0 * (kmax + 1))),
                               static_cast<int>(std::ceil(std::sqrt(k2 + 50.0 * x))) + 10);
    constexpr double kBig = 1e200;
    const double two_over_x = 2.0 / x;
    std::vector<double> y(static_cast<std::size_t>(start) + 2, 0.0);
    y[static_cast<std::size_t>(start)] = 1e-200;
    for (int k = start; k >= 1; --k) {
        const auto ku = static_cast<std::size_t>(k);
        y[ku - 1] = k * two_over_x * y[ku] + y[ku + 1];
        if (y[ku - 1] > kBig)
            for (std::size_t j = ku - 1; j < y.size(); ++j) y[j] /= kBig;
    }
    const double scale = bessel_i0e(x) / y[0];
    for (int k = 0; k <= kmax; ++k) out[static_cast<std::size_t>(k)] = y[static_cast<std::size_t>(k)] * scale;
    return out;
}

namespace detail {

// Number of terms needed for sum_k ratio^k I_k(x)/I_0(x) to converge to
// double precision.
inline int marcum_terms(double ratio, double x) {
    const double by_order = 9.2 * std::sqrt(x) + 30.0;
    double by_ratio = std::numeric_limits<double>::infinity();
    if (ratio < 1.0) by_ratio = (ratio <= 0.0) ? 1.0 : std::ceil(std::log(1e-18) / std::log(ratio)) + 1.0;
    return static_cast<int>(std::min(by_order, by_ratio));
}

// sum_{k>=first} ratio^k exp(-x) I_k(x), with 0 <= ratio <= 1.
inline double weighted_bessel_tail(double ratio, double x, int first) {
    const int kmax = std::max(first, marcum_terms(ratio, x));
    const auto ie = bessel_ie_sequence(x, kmax);
    double power = std::pow(ratio, first);
    double sum = 0.0;
    for (int k = first; k <= kmax; ++k) {
        sum += power * ie[static_cast<std::size_t>(k)];
        power *= ratio;
        if (power == 0.0) break;
    }
    return sum;
}

}  // namespace detail

/// Q1(a, b) = integral_b^inf x exp(-(x^2 + a^2)/2) I0(a x) dx.
///
/// Uses Q1 = exp(-(a^2+b^2)/2) sum_{k>=0} (a/b)^k I_k(ab) for a < b and the
/// complementary form 1 - exp(-(a^2+b^2)/2) sum_{k>=1} (b/a)^k I_k(ab)
/// otherwise, so every series has ratio <= 1 and positive terms.
inline double marcum_q1(double a, double b) {
    detail::require_nonnegative(a, "marcum_q1 a");
    detail::require_nonnegative(b, "marcum_q1 b");
    if (b == 0.0) return 1.0;
    if (a == 0.0) return std::exp(-0.5 * b * b);
    const double x = a * b;
    const double gap = std::exp(-0.5 * (b - a) * (b - a));
    double q;
    if (a < b) {
        q = gap * detail::weighted_bessel_tail(a / b, x, 0);
    } else {
        q = 1.0 - gap * detail::weighted_bessel_tail(b / a, x, 1);
    }
    return std::clamp(q, 0.0, 1.0);
}

/// Q1(a, b) - weight * I0(a b) * exp(-(a^2 + b^2)/2).
///
/// This is the shape of both sidelobe exceedance probabilities. For a <= b it
/// is evaluated as one positive series, so tiny probabilities keep full
/// relative precision instead of cancelling.
inline double marcum_difference(double a, double b, double weight) {
    detail::require_nonnegative(a, "marcum_difference a");
    detail::require_nonnegative(b, "marcum_difference b");
    const double x = a * b;
    if (a <= b) {
        const double gap = std::exp(-0.5 * (b - a) * (b - a));
        if (gap == 0.0) return 0.0;
        const double head = (1.0 - weight) * bessel_i0e(x);
        const double tail = (a == 0.0) ? 0.0 : detail::weighted_bessel_tail(a / b, x, 1);
        return gap * (head + tail);
    }
    return marcum_q1(a, b) - weight * bessel_i0e(x) * std::exp(-0.5 * (a - b) * (a - b));
}

/// Q1(a, a) - I0(a^2) exp(-a^2) / 2, which is identically 1/2.
inline double half_symmetric_q(double a) {
    detail::require_nonnegative(a, "half_symmetric_q argument");
    return 0.5;
}

}  // namespace rips::special

#endif  // RIPS_SPECTRAL_HPP
