#ifndef RIPS_MIE_HPP
#define RIPS_MIE_HPP

// Interval-error MSE prediction: the estimate either stays in the mainlobe
// (error ~ CRB) or jumps to sidelobe n with probability p_n (LSF) or q_n
// (random plans).
//
// Both exceedance formulas take the complex variance of the phasor sums as
// M(1 - e^{-sigma2}); with that convention they agree with direct simulation
// of the two correlated sums (see tests/test_mie.cpp).

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "rips/ambiguity.hpp"
#include "rips/bounds.hpp"
#include "rips/core_model.hpp"
#include "rips/spectral.hpp"

namespace rips {

namespace detail {

inline void check_exceedance_args(double r_abs, int m, double sigma2) {
    if (!(r_abs >= 0.0) || r_abs > 1.0 + 1e-12) throw std::invalid_argument("|r_n| must lie in [0, 1]");
    if (m < 2) throw std::invalid_argument("M must be at least 2");
    if (!(sigma2 >= 0.0) || !std::isfinite(sigma2)) throw std::invalid_argument("sigma2 must be a finite non-negative number");
}

inline constexpr double kEqualLobeTol = 1e-12;

}  // namespace detail

/// Pr(|y_0| < |y_n|) for a fixed plan with sidelobe level r_n.
inline double sidelobe_exceedance_lsf(std::complex<double> r_n, int m, double sigma2) {
    const double r = std::abs(r_n);
    detail::check_exceedance_args(r, m, sigma2);
    const double a_sq = std::max(0.0, 1.0 - std::min(1.0, r * r));
    if (a_sq < detail::kEqualLobeTol) return 0.5;
    if (sigma2 == 0.0) return 0.0;
    const double scale = static_cast<double>(m) / (2.0 * std::expm1(sigma2));
    const double root = std::sqrt(a_sq);
    // 1 - sqrt(1 - r^2) written as r^2 / (1 + sqrt(1 - r^2)) to keep small r exact.
    const double a = std::sqrt(scale * r * r / (1.0 + root));
    const double b = std::sqrt(scale * (1.0 + root));
    return std::clamp(special::marcum_difference(a, b, 0.5), 0.0, 1.0);
}

/// Pr(|y_0| < |y_n|) averaged over random plans, r_n taken from the AAF.
///
/// As sigma2 -> 0 this tends to Q1(sqrt(2M|r|^2/A), sqrt(2M/A)) with
/// A = 1 - |r|^2, not to zero: plan randomness alone still spreads y_n.
inline double sidelobe_exceedance_rsf(std::complex<double> r_n, int m, double sigma2) {
    const double r = std::abs(r_n);
    detail::check_exceedance_args(r, m, sigma2);
    const double a_n = std::max(0.0, 1.0 - std::min(1.0, r * r));
    if (a_n < detail::kEqualLobeTol) return 0.5;
    // Everything is scaled by e^{-sigma2} so that large noise stays finite:
    // u = e^{-sigma2}, w = 1 - u, S / e^2 = 4w.
    const double u = std::exp(-sigma2);
    const double w = -std::expm1(-sigma2);
    const double md = m;
    const double root = std::sqrt(a_n * a_n * u * u + 4.0 * a_n * w);  // sqrt(A^2 + AS) / e
    const double k = md / (a_n * u * u + 4.0 * w);                        // M e^2 / (A + S)
    // 2e - A - sqrt(A^2 + AS) = 4 e^2 |r|^2 / (2e - A + sqrt(A^2 + AS)), free of cancellation.
    const double plus = 2.0 - a_n * u + root;  // (2e - A + sqrt(A^2 + AS)) / e
    const double alpha = std::sqrt(k * 4.0 * r * r * u / plus);
    const double beta = std::sqrt(k * plus * u);
    // v = (R - 1) / (2R) with R = sqrt(1 + S/A), rewritten without the subtraction.
    const double d = std::sqrt(a_n * u * u + 4.0 * w);
    const double v = 2.0 * w / (d * (d + u * std::sqrt(a_n)));
    return std::clamp(special::marcum_difference(alpha, beta, v), 0.0, 1.0);
}

struct SidelobeTerm {
    double position_m = 0.0;
    double probability = 0.0;
};

struct MsePrediction {
    double mse_m2 = 0.0;
    double outlier_prob = 0.0;     ///< min(sum of exceedances, 1)
    double outlier_term_m2 = 0.0;  ///< sum p_n (d_n - d0)^2
    double crb_term_m2 = 0.0;
    bool clamped = false;          ///< mse hit d_max^2 / 12
    std::vector<SidelobeTerm> per_sidelobe;
};

namespace detail {

template <class Exceedance>
MsePrediction assemble_mse(const SidelobeProfile& profile, int m, double sigma2, double crb_m2, double d_max_m,
                           Exceedance exceedance) {
    if (profile.peaks.empty()) throw std::invalid_argument("no sidelobes inside the search window");
    MsePrediction out;
    out.crb_term_m2 = crb_m2;
    double total = 0.0;
    for (const auto& peak : profile.peaks) {
        const double p = exceedance(peak.level, m, sigma2);
        out.per_sidelobe.push_back({peak.position_m, p});
        total += p;
        out.outlier_term_m2 += p * peak.offset_m * peak.offset_m;
    }
    out.outlier_prob = std::min(total, 1.0);
    out.mse_m2 = out.outlier_term_m2 + (1.0 - out.outlier_prob) * out.crb_term_m2;
    const double ceiling = d_max_m * d_max_m / 12.0;
    if (out.mse_m2 > ceiling) {
        out.mse_m2 = ceiling;
        out.clamped = true;
    }
    return out;
}

}  // namespace detail

/// MSE of the fixed-plan estimator from a precomputed AF sidelobe profile.
inline MsePrediction predict_mse_lsf(const FrequencyPlan& plan, const Scenario& scenario,
                                     const SidelobeProfile& profile) {
    if (plan.size() < 3) throw std::invalid_argument("prediction needs M >= 3");
    scenario.validate(plan);
    return detail::assemble_mse(profile, static_cast<int>(plan.size()), scenario.sigma2,
                                crb_general(plan, scenario.sigma2, scenario.c_mps), scenario.d_max_m,
                                sidelobe_exceedance_lsf);
}

inline MsePrediction predict_mse_lsf(const FrequencyPlan& plan, const Scenario& scenario) {
    if (plan.kind() != PlanKind::lsf) throw std::invalid_argument("predict_mse_lsf needs an evenly stepped plan");
    scenario.validate(plan);
    return predict_mse_lsf(plan, scenario, af_sidelobes(plan, scenario.d0_m, scenario.d_max_m, scenario.c_mps));
}

/// AMSE over random plans of M out of N frequencies, from the AAF sidelobes and
/// the average CRB.
inline MsePrediction predict_amse_rsf(int m, std::int64_t n, double f_min_hz, const Scenario& scenario,
                                      const SidelobeProfile& profile) {
    if (m < 3 || n < m) throw std::invalid_argument("prediction needs N >= M >= 3");
    if (!(scenario.d_max_m > 0.0) || scenario.d_max_m > scenario.c_mps / f_min_hz * (1.0 + 1e-12))
        throw std::invalid_argument("d_max must lie in (0, c/f_min]");
    if (!(scenario.sigma2 >= 0.0)) throw std::invalid_argument("sigma2 must be non-negative");
    const double crb = avg_crb_rsf(m, n, f_min_hz, scenario.sigma2, scenario.c_mps).value_m2;
    return detail::assemble_mse(profile, m, scenario.sigma2, crb, scenario.d_max_m, sidelobe_exceedance_rsf);
}

inline MsePrediction predict_amse_rsf(int m, std::int64_t n, double f_min_hz, std::int64_t k0, const Scenario& scenario) {
    if (m < 3 || n < m) throw std::invalid_argument("prediction needs N >= M >= 3");
    return predict_amse_rsf(m, n, f_min_hz, scenario,
                            aaf_sidelobes(m, n, f_min_hz, k0, scenario.d0_m, scenario.d_max_m, scenario.c_mps));
}

}  // namespace rips

#endif  // RIPS_MIE_HPP
