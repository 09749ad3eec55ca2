#pragma once

#include <cstddef>
#include <stdexcept>
#include <variant>
#include <vector>

namespace qdp {

// ---------------------------------------------------------------------------
// Diminishing-value curves. P(phi) maps a granted expected wait phi >= 0 to
// a per-unit-workload value; every admissible curve is strictly decreasing
// on [0, inf) with diminishing marginal loss (the decline flattens as phi
// grows, i.e. the curves are convex).
// ---------------------------------------------------------------------------

// P(phi) = (1 - beta)^{-1} * (1 + phi)^{-(1 - beta)} with beta in (0, 1).
struct PowerShape {
    double beta = 0.45;

    void validate() const {
        if (!(beta > 0.0 && beta < 1.0))
            throw std::domain_error("PowerShape: beta must lie in (0, 1)");
    }
    // Domain error for phi < 0.
    double value(double phi) const;
};

// P(phi) = log(1 + 1 / (epsilon + phi)) with epsilon > 0.
struct LogShape {
    double epsilon = 0.1;

    void validate() const {
        if (!(epsilon > 0.0))
            throw std::domain_error("LogShape: epsilon must be > 0");
    }
    // Domain error for phi < 0.
    double value(double phi) const;
};

struct UtilityShape {
    std::variant<PowerShape, LogShape> shape;

    UtilityShape() : shape(PowerShape{}) {}
    UtilityShape(PowerShape s) : shape(s) {}
    UtilityShape(LogShape s) : shape(s) {}

    static UtilityShape power(double beta) {
        return UtilityShape(PowerShape{beta});
    }
    static UtilityShape logarithmic(double epsilon) {
        return UtilityShape(LogShape{epsilon});
    }

    void validate() const {
        std::visit([](const auto& s) { s.validate(); }, shape);
    }
    // P(phi); domain error for phi < 0.
    double value(double phi) const {
        return std::visit([phi](const auto& s) { return s.value(phi); }, shape);
    }
};

// ---------------------------------------------------------------------------
// Tenants and the service-level menu.
// ---------------------------------------------------------------------------

// One tenant class: values service at weight * P(phi) per unit workload and
// submits jobs in a Poisson stream of the given rate.
struct User {
    double weight = 1.0;
    double arrival_rate = 1.0;

    void validate() const {
        if (!(weight > 0.0))
            throw std::domain_error("User: weight must be > 0");
        if (!(arrival_rate > 0.0))
            throw std::domain_error("User: arrival_rate must be > 0");
    }
};

// Users sorted by strictly decreasing weight, sharing one value curve.
struct UserPopulation {
    std::vector<User> users;
    UtilityShape shape;

    void validate() const;
};

// Menu of service levels: strictly increasing promised waits (the first may
// be zero), optionally carrying strictly decreasing positive posted prices.
struct SlaMenu {
    std::vector<double> waits;
    std::vector<double> prices;  // empty while unpriced

    bool priced() const { return !prices.empty(); }
    std::size_t size() const { return waits.size(); }
    void validate() const;
};

// choose_sla result when every level's surplus is negative.
inline constexpr int kOptOut = -1;

// weight * P(phi): the user's utility per unit workload when granted wait
// phi. Domain error for phi < 0.
double unit_utility(const User& user, const UtilityShape& shape, double phi);

// The 0-based menu index maximizing the user's surplus
// unit_utility(phi_l) - theta_l, or kOptOut when that maximum is negative.
// Zero surplus still participates; equal surpluses go to the smaller index
// (the stricter service level). Ties and the participation boundary are
// detected with a small relative tolerance because revenue-maximizing menus
// price marginal users at exact indifference.
int choose_sla(const User& user, const UtilityShape& shape,
               const SlaMenu& menu);

// Per-level offered arrival rates: the sum of arrival_rate over the users
// whose choose_sla picks that level.
std::vector<double> aggregate_arrivals(const UserPopulation& pop,
                                       const SlaMenu& menu);

}  // namespace qdp
