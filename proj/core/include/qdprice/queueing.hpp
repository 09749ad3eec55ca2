#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <variant>

namespace qdp {

// Upper incomplete gamma function Gamma(s, z) = integral_z^inf t^(s-1) e^(-t) dt
// for real order s, including zero and negative (integer and non-integer)
// orders, and z > 0. Relative accuracy is ~1e-11 or better over s in
// [-10, 10], z in (0, 50]. Orders within 1e-12 of an integer are evaluated
// at that integer; negative orders that sit within ~1e-6 of an integer
// degrade gracefully (to roughly 1e-8 relative) when z < 1.5 because the
// recurrence used there divides by a near-zero intermediate order.
double upper_incomplete_gamma(double s, double z);

// Bracketed bisection for a continuous f with f(lo) and f(hi) of opposite
// sign. Converges until the bracket width drops below rel_tol relative to
// the larger endpoint magnitude (floored at 1), then returns the midpoint.
template <class F>
double bisect(F&& f, double lo, double hi, double rel_tol = 1e-12,
              int max_iter = 256) {
    double flo = f(lo);
    double fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo < 0.0) == (fhi < 0.0))
        throw std::invalid_argument("bisect: root is not bracketed");
    for (int i = 0; i < max_iter; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        if ((fm < 0.0) == (flo < 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
        if (hi - lo <= rel_tol * std::max({std::fabs(lo), std::fabs(hi), 1.0}))
            break;
    }
    return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// Service-law parameter sets.
// ---------------------------------------------------------------------------

// Single FIFO server, exponential service at rate mu, Poisson arrivals.
// QoS convention: at most miss_target of jobs may wait longer than the
// posted deadline.
struct ExponentialQueueSpec {
    double mu = 1.0;
    double miss_target = 0.05;

    void validate() const {
        if (!(mu > 0.0))
            throw std::domain_error("ExponentialQueueSpec: mu must be > 0");
        if (!(miss_target > 0.0 && miss_target < 1.0))
            throw std::domain_error(
                "ExponentialQueueSpec: miss_target must lie in (0, 1)");
    }
    // Implied mean runtime of one job.
    double mean_runtime() const { return 1.0 / mu; }
};

// Pareto service: P(S > t) = (min_runtime / t)^shape_alpha for
// t >= min_runtime, with shape_alpha > 1 so the mean runtime is finite.
// QoS convention: an expected-wait bound.
struct ParetoQueueSpec {
    double shape_alpha = 1.4;
    double min_runtime = 1.0 / 6.0;

    void validate() const {
        if (!(shape_alpha > 1.0))
            throw std::domain_error("ParetoQueueSpec: shape_alpha must be > 1");
        if (!(min_runtime > 0.0))
            throw std::domain_error("ParetoQueueSpec: min_runtime must be > 0");
    }
    double mean_runtime() const {
        return shape_alpha * min_runtime / (shape_alpha - 1.0);
    }
    // Supremum of per-server arrival rates with a defined expected wait:
    // (shape_alpha - 1) / (shape_alpha * min_runtime).
    double rate_sup() const {
        return (shape_alpha - 1.0) / (shape_alpha * min_runtime);
    }
};

// ---------------------------------------------------------------------------
// Exponential-law operations.
// ---------------------------------------------------------------------------

// Long-run fraction of jobs whose waiting time reaches the deadline phi in a
// single FIFO queue at offered load rho = lambda / mu; such jobs leave the
// queue unserved at the deadline.
double exp_miss_fraction(double rho, double mu, double phi);

// Largest per-server arrival rate whose deadline-miss fraction stays at
// spec.miss_target for waiting budget phi. Strictly increasing in phi.
double exp_lambda_max(const ExponentialQueueSpec& spec, double phi);

// Busy fraction of one exponential server fed at rate lambda: lambda / mu.
double exp_utilization(double lambda, double mu);

// ---------------------------------------------------------------------------
// Pareto-law operations. The wait and busy-fraction expressions are the
// closed-form planning model for this service law; they are transform
// identities rather than steady-state FIFO sample statistics (the FIFO mean
// wait diverges for shape_alpha < 2).
// ---------------------------------------------------------------------------

// Expected-wait level granted at per-server arrival rate lambda: the unique
// phi with E[exp(-lambda (S + phi))] = 1 - lambda E[S], which evaluates to
//   log(a (lambda tau)^a Gamma(-a, lambda tau) / (1 - a lambda tau / (a-1)))
//   / lambda                      (a = shape_alpha, tau = min_runtime).
// Strictly increasing in lambda, tending to 0 as lambda -> 0 and diverging
// at the rate supremum. Domain error outside (0, rate_sup()).
double pareto_expected_wait(double lambda, const ParetoQueueSpec& spec);

// Long-run busy fraction of one server in the same planning model:
// 1 / (1 + a (lambda tau)^a Gamma(-a - 1, lambda tau)), equivalently
// lambda / (lambda + E[exp(-lambda S) / S]). Zero at lambda = 0.
double pareto_utilization(double lambda, const ParetoQueueSpec& spec);

// Inverse of pareto_expected_wait: the largest per-server arrival rate whose
// expected-wait level does not exceed phi. Domain error for phi <= 0.
double pareto_lambda_max(double phi, const ParetoQueueSpec& spec);

// ---------------------------------------------------------------------------
// Tagged service model: owner of the wait -> rate map (lambda_max) and the
// rate -> busy-fraction map (utilization), both strictly increasing.
// ---------------------------------------------------------------------------

struct QueueModel {
    std::variant<ExponentialQueueSpec, ParetoQueueSpec> spec;

    QueueModel() : spec(ExponentialQueueSpec{}) {}
    QueueModel(ExponentialQueueSpec s) : spec(s) {}
    QueueModel(ParetoQueueSpec s) : spec(s) {}

    static QueueModel exponential(double mu, double miss_target = 0.05) {
        return QueueModel(ExponentialQueueSpec{mu, miss_target});
    }
    static QueueModel pareto(double shape_alpha, double min_runtime) {
        return QueueModel(ParetoQueueSpec{shape_alpha, min_runtime});
    }

    bool is_exponential() const {
        return std::holds_alternative<ExponentialQueueSpec>(spec);
    }

    void validate() const {
        std::visit([](const auto& s) { s.validate(); }, spec);
    }

    // Largest admissible per-server arrival rate for waiting budget phi.
    double lambda_max(double phi) const {
        if (const auto* e = std::get_if<ExponentialQueueSpec>(&spec))
            return exp_lambda_max(*e, phi);
        return pareto_lambda_max(phi, std::get<ParetoQueueSpec>(spec));
    }

    // Busy fraction of one server fed at rate lambda.
    double utilization(double lambda) const {
        if (const auto* e = std::get_if<ExponentialQueueSpec>(&spec))
            return exp_utilization(lambda, e->mu);
        return pareto_utilization(lambda, std::get<ParetoQueueSpec>(spec));
    }

    double mean_runtime() const {
        return std::visit([](const auto& s) { return s.mean_runtime(); }, spec);
    }
};

}  // namespace qdp
