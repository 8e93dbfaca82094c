#ifndef RIPS_BOUNDS_HPP
#define RIPS_BOUNDS_HPP

// Cramer-Rao bounds on the qrange for a fixed frequency plan, the closed form
// for evenly stepped plans, and the average bound over random plans obtained
// from the first two moments of the quadratic form X = K^T W K.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>

#include "rips/core_model.hpp"

namespace rips {

namespace detail {

inline double crb_scale(std::size_t m, double sigma2, double c_mps) {
    const double pi2 = std::numbers::pi * std::numbers::pi;
    return static_cast<double>(m) * c_mps * c_mps * sigma2 / (4.0 * pi2);
}

}  // namespace detail

/// K^T W K with W = M*I - 1*1^T, i.e. M * sum k^2 - (sum k)^2, exactly.
inline double quadratic_form(std::span<const std::int64_t> k) {
    __int128 sum = 0;
    __int128 sum_sq = 0;
    for (auto v : k) {
        sum += v;
        sum_sq += static_cast<__int128>(v) * v;
    }
    const __int128 m = static_cast<__int128>(k.size());
    return static_cast<double>(m * sum_sq - sum * sum);
}

/// CRB of d0 from the frequency form M c^2 sigma2 / (4 pi^2) / [M sum f^2 - (sum f)^2].
///
/// The bracket is evaluated as M * sum (f - mean f)^2 to avoid cancelling
/// carrier-sized terms. It is cross-checked against the index form
/// crb_from_indices and a disagreement beyond 1e-10 relative is a logic error.
inline double crb_general(const FrequencyPlan& plan, double sigma2, double c_mps = kSpeedOfLight) {
    if (plan.size() < 2) throw std::domain_error("CRB needs at least two frequencies");
    if (!(sigma2 >= 0.0)) throw std::invalid_argument("sigma2 must be non-negative");
    const auto f = plan.frequencies_hz();
    double mean = 0.0;
    for (double v : f) mean += v;
    mean /= static_cast<double>(f.size());
    double spread = 0.0;
    for (double v : f) spread += (v - mean) * (v - mean);
    const double info = static_cast<double>(f.size()) * spread;
    const double by_index = quadratic_form(plan.indices());
    if (by_index == 0.0)
        throw std::domain_error("singular Fisher information: all measurement frequencies are identical");
    const double crb = detail::crb_scale(plan.size(), sigma2, c_mps) / info;
    const double crb_k = detail::crb_scale(plan.size(), sigma2, c_mps) / (plan.f_min_hz() * plan.f_min_hz() * by_index);
    if (std::abs(crb - crb_k) > 1e-10 * std::abs(crb_k))
        throw std::logic_error("CRB frequency and index forms disagree");
    return crb;
}

/// CRB of d0 from the index form M c^2 sigma2 / (4 pi^2 f_min^2) / (K^T W K).
inline double crb_from_indices(const FrequencyPlan& plan, double sigma2, double c_mps = kSpeedOfLight) {
    const double x = quadratic_form(plan.indices());
    if (x == 0.0) throw std::domain_error("singular Fisher information: all measurement frequencies are identical");
    return detail::crb_scale(plan.size(), sigma2, c_mps) / (plan.f_min_hz() * plan.f_min_hz() * x);
}

/// 3 c^2 sigma2 (M-1) / (pi^2 B^2 M (M+1)), the bound of an evenly stepped plan.
inline double crb_lsf_closed(int m, double b_hz, double sigma2, double c_mps = kSpeedOfLight) {
    if (m < 2) throw std::invalid_argument("CRB needs M >= 2");
    if (!(b_hz > 0.0)) throw std::invalid_argument("bandwidth must be positive");
    const double pi2 = std::numbers::pi * std::numbers::pi;
    const double md = m;
    return 3.0 * c_mps * c_mps * sigma2 * (md - 1.0) / (pi2 * b_hz * b_hz * md * (md + 1.0));
}

/// How the raw moments E[k^a] of a uniform index on {0..N-1} are taken.
enum class MomentModel {
    continuous,  ///< N^a / (a+1), the large-N integral approximation
    discrete,    ///< exact sums (1/N) sum_{x=0}^{N-1} x^a
};

struct QuadraticFormMoments {
    double eta = 0.0;  ///< E[X]
    double rho = 0.0;  ///< E[X^2]
    int m = 0;
    std::int64_t n = 0;
};

/// Raw moments E[k^a], a = 1..4, of an index uniform on {0..N-1}.
inline std::array<double, 5> uniform_index_moments(std::int64_t n, MomentModel model) {
    const double nd = static_cast<double>(n);
    std::array<double, 5> e{1.0, 0.0, 0.0, 0.0, 0.0};
    if (model == MomentModel::continuous) {
        for (int a = 1; a <= 4; ++a) e[static_cast<std::size_t>(a)] = std::pow(nd, a) / (a + 1.0);
        return e;
    }
    // Faulhaber sums over x = 0..N-1, evaluated in long double.
    const long double q = static_cast<long double>(n) - 1.0L;
    const long double s1 = q * (q + 1) / 2;
    const long double s2 = q * (q + 1) * (2 * q + 1) / 6;
    const long double s3 = s1 * s1;
    const long double s4 = q * (q + 1) * (2 * q + 1) * (3 * q * q + 3 * q - 1) / 30;
    const long double inv = 1.0L / static_cast<long double>(n);
    e[1] = static_cast<double>(s1 * inv);
    e[2] = static_cast<double>(s2 * inv);
    e[3] = static_cast<double>(s3 * inv);
    e[4] = static_cast<double>(s4 * inv);
    return e;
}

/// eta and rho assembled from the five classes of quadratic and quartic terms
/// in X and X^2 with their coefficient sums beta_1..beta_5.
inline QuadraticFormMoments quadratic_form_moments(int m, std::int64_t n, MomentModel model = MomentModel::continuous) {
    if (m < 2) throw std::invalid_argument("quadratic form moments need M >= 2");
    if (n < 2) throw std::invalid_argument("quadratic form moments need N >= 2");
    const auto e = uniform_index_moments(n, model);
    const double md = m;
    const double pairs = md * (md - 1.0);
    const double eta = pairs * (e[2] - e[1] * e[1]);
    const double beta1 = md * (md - 1.0) * (md - 1.0);
    const double beta2 = -4.0 * md * (md - 1.0) * (md - 1.0);
    const double beta3 = md * (md - 1.0) * ((md - 1.0) * (md - 1.0) + 2.0);
    const double beta4 = -2.0 * md * (md - 1.0) * (md - 2.0) * (md - 3.0);
    const double beta5 = md * (md - 1.0) * (md - 2.0) * (md - 3.0);
    const double rho = beta1 * e[4] + beta2 * e[1] * e[3] + beta3 * e[2] * e[2] + beta4 * e[2] * e[1] * e[1] +
                       beta5 * e[1] * e[1] * e[1] * e[1];
    return {eta, rho, m, n};
}

/// Closed forms eta = M(M-1)N^2/12 and rho = M(M-1)(5M^2-M+6)N^4/720.
inline QuadraticFormMoments quadratic_form_moments_closed(int m, std::int64_t n) {
    const double md = m;
    const double nd = static_cast<double>(n);
    const double n2 = nd * nd;
    return {md * (md - 1.0) * n2 / 12.0, md * (md - 1.0) * (5.0 * md * md - md + 6.0) * n2 * n2 / 720.0, m, n};
}

struct AverageCrb {
    double value_m2 = 0.0;
    bool small_n_warning = false;  ///< N < 1000: the moment approximation is unreliable
};

/// Average CRB over random plans, E[1/X] ~ rho / eta^3.
///
/// The continuous model returns 3 c^2 sigma2 (5M^2 - M + 6) / (5 pi^2 B^2 M (M-1)^2)
/// with B = (N-1) f_min; the discrete model plugs exact index moments into
/// M c^2 sigma2 / (4 pi^2 f_min^2) * rho / eta^3.
inline AverageCrb avg_crb_rsf(int m, std::int64_t n, double f_min_hz, double sigma2, double c_mps = kSpeedOfLight,
                              MomentModel model = MomentModel::continuous) {
    if (m < 2) throw std::invalid_argument("average CRB needs M >= 2");
    if (n < 2) throw std::invalid_argument("average CRB needs N >= 2");
    if (!(f_min_hz > 0.0)) throw std::invalid_argument("f_min must be positive");
    AverageCrb out;
    out.small_n_warning = n < 1000;
    if (model == MomentModel::continuous) {
        const double md = m;
        const double b = static_cast<double>(n - 1) * f_min_hz;
        const double pi2 = std::numbers::pi * std::numbers::pi;
        out.value_m2 = 3.0 * c_mps * c_mps * sigma2 * (5.0 * md * md - md + 6.0) /
                       (5.0 * pi2 * b * b * md * (md - 1.0) * (md - 1.0));
        return out;
    }
    const auto mom = quadratic_form_moments(m, n, model);
    out.value_m2 = detail::crb_scale(static_cast<std::size_t>(m), sigma2, c_mps) / (f_min_hz * f_min_hz) * mom.rho /
                   (mom.eta * mom.eta * mom.eta);
    return out;
}

}  // namespace rips

#endif  // RIPS_BOUNDS_HPP
