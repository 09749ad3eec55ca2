#include "qdprice/market.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace qdp {

namespace {

void require_wait(double phi) {
    if (!(phi >= 0.0))
        throw std::domain_error("utility curve: wait must be >= 0");
}

}  // namespace

double PowerShape::value(double phi) const {
    require_wait(phi);
    return std::pow(1.0 + phi, beta - 1.0) / (1.0 - beta);
}

double LogShape::value(double phi) const {
    require_wait(phi);
    return std::log1p(1.0 / (epsilon + phi));
}

void UserPopulation::validate() const {
    shape.validate();
    for (std::size_t i = 0; i < users.size(); ++i) {
        users[i].validate();
        if (i > 0 && !(users[i - 1].weight > users[i].weight))
            throw std::domain_error(
                "UserPopulation: weights must be strictly decreasing");
    }
}

void SlaMenu::validate() const {
    if (waits.empty())
        throw std::domain_error("SlaMenu: at least one service level required");
    if (!(waits.front() >= 0.0))
        throw std::domain_error("SlaMenu: waits must be >= 0");
    for (std::size_t l = 1; l < waits.size(); ++l)
        if (!(waits[l - 1] < waits[l]))
            throw std::domain_error("SlaMenu: waits must be strictly increasing");
    if (!prices.empty()) {
        if (prices.size() != waits.size())
            throw std::domain_error("SlaMenu: one price per service level");
        if (!(prices.back() > 0.0))
            throw std::domain_error("SlaMenu: prices must be positive");
        for (std::size_t l = 1; l < prices.size(); ++l)
            if (!(prices[l - 1] > prices[l]))
                throw std::domain_error(
                    "SlaMenu: prices must be strictly decreasing");
    }
}

double unit_utility(const User& user, const UtilityShape& shape, double phi) {
    return user.weight * shape.value(phi);
}

int choose_sla(const User& user, const UtilityShape& shape,
               const SlaMenu& menu) {
    if (!menu.priced())
        throw std::invalid_argument("choose_sla: menu carries no prices");
    // Revenue-maximizing menus price marginal users at exact indifference,
    // so knife-edge ties and zero surpluses arise by construction. Surpluses
    // within a small relative tolerance of the maximum therefore count as
    // tied (resolved toward the smaller index), and a maximum within the
    // tolerance of zero counts as participation; otherwise last-ulp rounding
    // noise would flip those boundary decisions arbitrarily.
    const double scale =
        1.0 + user.weight * shape.value(menu.waits.front()) +
        menu.prices.front();
    const double tol = 1e-9 * scale;
    double best_surplus = -std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l < menu.size(); ++l) {
        const double surplus =
            user.weight * shape.value(menu.waits[l]) - menu.prices[l];
        best_surplus = std::max(best_surplus, surplus);
    }
    if (best_surplus < -tol) return kOptOut;
    for (std::size_t l = 0; l < menu.size(); ++l) {
        const double surplus =
            user.weight * shape.value(menu.waits[l]) - menu.prices[l];
        if (surplus >= best_surplus - tol) return static_cast<int>(l);
    }
    return kOptOut;  // unreachable
}

std::vector<double> aggregate_arrivals(const UserPopulation& pop,
                                       const SlaMenu& menu) {
    std::vector<double> rates(menu.size(), 0.0);
    for (const auto& user : pop.users) {
        const int l = choose_sla(user, pop.shape, menu);
        if (l >= 0) rates[static_cast<std::size_t>(l)] += user.arrival_rate;
    }
    return rates;
}

}  // namespace qdp
