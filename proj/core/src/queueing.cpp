#include "qdprice/queueing.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace qdp {

namespace {

// Regularized lower incomplete gamma P(s, z) by its ascending series.
// Requires s > 0; intended for z < s + 1 where it converges quickly.
double lower_regularized_series(double s, double z) {
    double ap = s;
    double sum = 1.0 / s;
    double del = sum;
    for (int n = 0; n < 1000; ++n) {
        ap += 1.0;
        del *= z / ap;
        sum += del;
        if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
    }
    return sum * std::exp(-z + s * std::log(z) - std::lgamma(s));
}

// Gamma(s, z) by the standard continued fraction (modified Lentz). Converges
// for z > 0 at any real s; fastest when z is away from zero. The tiny-guards
// keep the iteration alive when a denominator passes through zero, which
// happens for non-positive s.
double upper_cf(double s, double z) {
    const double tiny = 1e-300;
    double b = z + 1.0 - s;
    double c = 1.0 / tiny;
    double d = 1.0 / ((std::fabs(b) < tiny) ? tiny : b);
    double h = d;
    for (int i = 1; i <= 2000; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - s);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < 1e-16) break;
    }
    return std::exp(-z + s * std::log(z)) * h;
}

// Gamma(0, z) by its alternating series; intended for z < 1.
double e1_series(double z) {
    const double euler_gamma = 0.57721566490153286060651209;
    double sum = -euler_gamma - std::log(z);
    double term = 1.0;  // (-z)^k / k!
    for (int k = 1; k <= 300; ++k) {
        term *= -z / k;
        const double add = -term / k;
        sum += add;
        if (std::fabs(add) < std::fabs(sum) * 1e-16 + 1e-300) break;
    }
    return sum;
}

// Gamma(s, z) for s in (0, 2]: series below z = s + 1, continued fraction above.
double upper_gamma_positive(double s, double z) {
    if (z < s + 1.0) return std::tgamma(s) * (1.0 - lower_regularized_series(s, z));
    return upper_cf(s, z);
}

// E[exp(-lambda S)] for Pareto service: a (lambda tau)^a Gamma(-a, lambda tau).
double pareto_laplace(double lambda, const ParetoQueueSpec& spec) {
    const double z = lambda * spec.min_runtime;
    return spec.shape_alpha * std::exp(spec.shape_alpha * std::log(z)) *
           upper_incomplete_gamma(-spec.shape_alpha, z);
}

}  // namespace

double upper_incomplete_gamma(double s, double z) {
    if (!std::isfinite(s) || !std::isfinite(z) || z < 0.0)
        throw std::domain_error("upper_incomplete_gamma: need finite s and z >= 0");
    if (z == 0.0) {
        if (s > 0.0) return std::tgamma(s);
        throw std::domain_error("upper_incomplete_gamma: z must be > 0 for s <= 0");
    }

    // Snap near-integer orders: the recurrence below divides by each
    // intermediate order, so an order within rounding distance of zero is
    // evaluated at the integer instead.
    const double rounded = std::round(s);
    if (s != rounded && std::fabs(s - rounded) < 1e-12) s = rounded;

    if (s > 0.0) {
        if (z < s + 1.0) {
            return std::tgamma(s) * (1.0 - lower_regularized_series(s, z));
        }
        return upper_cf(s, z);
    }

    // s <= 0. The continued fraction stays accurate at any order once z is
    // away from zero, so use it directly there. Below that, evaluate at a
    // well-conditioned base order that differs from s by an integer and walk
    // down with
    //   Gamma(t, z) = (Gamma(t + 1, z) - z^t e^(-z)) / t.
    // Each step multiplies relative error by about z / |t|, which stays
    // harmless for the z < 1.5 range this branch covers.
    if (z >= 1.5) return upper_cf(s, z);

    double base;
    double g;
    const double frac = s - std::floor(s);
    if (frac == 0.0) {
        base = 0.0;
        g = (z < 1.0) ? e1_series(z) : upper_cf(0.0, z);
    } else {
        base = frac + 1.0;  // in (1, 2): away from the pole of Gamma at 0
        g = upper_gamma_positive(base, z);
    }
    const int steps = static_cast<int>(std::lround(base - s));
    const double lz = std::log(z);
    for (int k = 1; k <= steps; ++k) {
        const double t = (k == steps) ? s : base - k;
        g = (g - std::exp(t * lz - z)) / t;
    }
    return g;
}

double exp_miss_fraction(double rho, double mu, double phi) {
    if (rho < 0.0 || mu <= 0.0 || phi < 0.0)
        throw std::domain_error("exp_miss_fraction: need rho >= 0, mu > 0, phi >= 0");
    if (rho == 0.0) return 0.0;
    if (std::fabs(rho - 1.0) < 1e-6) return 1.0 / (2.0 + mu * phi);

    const double x = (rho - 1.0) * mu * phi;
    if (x > 30.0) {
        // Divide through by e^x so nothing overflows at heavy overload.
        const double q = std::exp(-x);
        return rho / ((1.0 + rho) * q + rho * rho * (1.0 - q) / (rho - 1.0));
    }
    return rho * std::exp(x) /
           (1.0 + rho + rho * rho * std::expm1(x) / (rho - 1.0));
}

double exp_lambda_max(const ExponentialQueueSpec& spec, double phi) {
    spec.validate();
    if (phi < 0.0) throw std::domain_error("exp_lambda_max: need phi >= 0");

    // The miss fraction is strictly increasing in rho, from 0 toward 1.
    double hi = 1.0;
    while (exp_miss_fraction(hi, spec.mu, phi) < spec.miss_target) {
        hi *= 2.0;
        if (hi > 1e9)
            throw std::runtime_error("exp_lambda_max: bracket expansion failed");
    }
    const double rho = bisect(
        [&](double r) { return exp_miss_fraction(r, spec.mu, phi) - spec.miss_target; },
        0.0, hi, 1e-13);
    return rho * spec.mu;
}

double exp_utilization(double lambda, double mu) {
    if (mu <= 0.0) throw std::domain_error("exp_utilization: need mu > 0");
    if (lambda < 0.0) throw std::domain_error("exp_utilization: need lambda >= 0");
    return lambda / mu;
}

double pareto_expected_wait(double lambda, const ParetoQueueSpec& spec) {
    spec.validate();
    const double sup = spec.rate_sup();
    if (!(lambda > 0.0) || !(lambda < sup))
        throw std::domain_error(
            "pareto_expected_wait: lambda outside the stability region");

    const double slack = 1.0 - lambda * spec.mean_runtime();
    return std::log(pareto_laplace(lambda, spec) / slack) / lambda;
}

double pareto_utilization(double lambda, const ParetoQueueSpec& spec) {
    spec.validate();
    if (lambda < 0.0)
        throw std::domain_error("pareto_utilization: need lambda >= 0");
    if (lambda == 0.0) return 0.0;
    const double z = lambda * spec.min_runtime;
    const double tail = spec.shape_alpha *
                        std::exp(spec.shape_alpha * std::log(z)) *
                        upper_incomplete_gamma(-spec.shape_alpha - 1.0, z);
    return 1.0 / (1.0 + tail);
}

double pareto_lambda_max(double phi, const ParetoQueueSpec& spec) {
    spec.validate();
    if (!(phi > 0.0))
        throw std::domain_error("pareto_lambda_max: need phi > 0");
    const double sup = spec.rate_sup();
    // Below lo the expected wait shrinks under the roundoff noise of the
    // transform evaluation; above hi the rate is within double-precision
    // distance of the supremum. Handle both extremes analytically.
    const double lo = sup * 1e-9;
    const double hi = sup * (1.0 - 1e-15);
    if (pareto_expected_wait(lo, spec) >= phi) {
        // Small-rate asymptotic:
        // phi ~ a Gamma(-a) tau^a lambda^(a-1), a = shape_alpha, tau = min_runtime.
        const double c = spec.shape_alpha * std::tgamma(-spec.shape_alpha) *
                         std::exp(spec.shape_alpha * std::log(spec.min_runtime));
        return std::exp(std::log(phi / c) / (spec.shape_alpha - 1.0));
    }
    if (pareto_expected_wait(hi, spec) <= phi) return hi;
    return bisect(
        [&](double l) { return pareto_expected_wait(l, spec) - phi; },
        lo, hi, 1e-13);
}

}  // namespace qdp
