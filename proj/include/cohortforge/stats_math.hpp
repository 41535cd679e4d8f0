#pragma once

// Special functions needed by the fidelity checks. The regularized incomplete
// gamma functions follow the classic series / continued fraction split, which
// is accurate to ~1e-12 over the domain used here.

#include <cmath>
#include <limits>

#include "cohortforge/errors.hpp"

namespace cohortforge {

namespace detail {

constexpr double kGammaEps = 1e-12;
constexpr int kGammaMaxIter = 1000;

// Lower regularized gamma P(a, x) by its power series; converges fast for x < a + 1.
inline double gamma_p_series(double a, double x) {
    double term = 1.0 / a;
    double sum = term;
    double ap = a;
    for (int n = 0; n < kGammaMaxIter; ++n) {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if (std::fabs(term) < std::fabs(sum) * kGammaEps) {
            break;
        }
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Upper regularized gamma Q(a, x) by Lentz's continued fraction; for x >= a + 1.
inline double gamma_q_continued_fraction(double a, double x) {
    const double tiny = std::numeric_limits<double>::min() / kGammaEps;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= kGammaMaxIter; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < kGammaEps) {
            break;
        }
    }
    return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

} // namespace detail

// Lower regularized incomplete gamma P(a, x).
inline double regularized_gamma_p(double a, double x) {
    if (!(a > 0.0) || x < 0.0 || !std::isfinite(a) || !std::isfinite(x)) {
        throw RangeError("regularized_gamma_p: requires a > 0 and x >= 0");
    }
    if (x == 0.0) {
        return 0.0;
    }
    if (x < a + 1.0) {
        return detail::gamma_p_series(a, x);
    }
    return 1.0 - detail::gamma_q_continued_fraction(a, x);
}

// Upper regularized incomplete gamma Q(a, x) = 1 - P(a, x).
inline double regularized_gamma_q(double a, double x) {
    if (!(a > 0.0) || x < 0.0 || !std::isfinite(a) || !std::isfinite(x)) {
        throw RangeError("regularized_gamma_q: requires a > 0 and x >= 0");
    }
    if (x == 0.0) {
        return 1.0;
    }
    if (x < a + 1.0) {
        return 1.0 - detail::gamma_p_series(a, x);
    }
    return detail::gamma_q_continued_fraction(a, x);
}

// Upper tail of the chi-square distribution with `dof` degrees of freedom:
// the p-value of an observed statistic.
inline double chi_square_tail(double statistic, double dof) {
    if (!(dof > 0.0)) {
        throw RangeError("chi_square_tail: degrees of freedom must be positive");
    }
    if (statistic < 0.0 || !std::isfinite(statistic)) {
        throw RangeError("chi_square_tail: statistic must be finite and non-negative");
    }
    return regularized_gamma_q(dof / 2.0, statistic / 2.0);
}

} // namespace cohortforge
