#pragma once

#include <optional>
#include <vector>

#include "qdprice/market.hpp"
#include "qdprice/planner.hpp"
#include "qdprice/queueing.hpp"

namespace qdp {

// One pricing candidate: which service levels to offer and where the user
// ranking is cut into bands. `offered` holds ascending 0-based indices into
// the full wait list; `cut_users[l]` is the 1-based rank of the last user
// intended to buy offered level l, so cuts are strictly increasing and the
// bands are the contiguous ranges (prev_cut, cut].
struct Breakpoints {
    std::vector<int> offered;
    std::vector<int> cut_users;

    // Throws std::invalid_argument unless offered is a nonempty ascending
    // subset of [0, num_waits), cut_users is a strictly increasing sequence
    // in [1, num_users], and the two have equal length.
    void validate(std::size_t num_waits, std::size_t num_users) const;
};

// Prices that make each cut user indifferent between adjacent offered
// levels and price the slowest band at its full willingness to pay:
//   theta[last] = w_cut[last] * P(phi[last])
//   theta[l]    = w_cut[l] * (P(phi[l]) - P(phi[l+1])) + theta[l+1]
// where P is the population's utility shape and phi the offered waits.
// Returns nullopt when the induced chain is not strictly decreasing and
// positive (unreachable for valid inputs, but triggered by e.g. a
// malformed wait sequence); such candidates are skipped, never repaired.
std::optional<std::vector<double>> breakpoint_prices(
    const Breakpoints& bp, const UserPopulation& pop,
    const std::vector<double>& waits);

struct PricingOptions {
    // Worker threads for the candidate sweep. The result is identical for
    // any value: workers fold into per-worker bests that merge under a
    // total order, not in arrival order.
    int workers = 1;

    // Shave every price by a relative 1e-6 so each cut user strictly
    // prefers their band's level instead of being indifferent. Changes
    // revenue by less than 1e-5 relative.
    bool epsilon_undercut = false;
};

// Best pricing found by optimize_prices. `menu` holds the offered waits
// with the winning prices (absent levels are simply not present), and
// `choices[i]` is user i's index into that menu or kOptOut, recomputed
// from the prices so the solution is self-consistent by construction.
struct PricingSolution {
    Breakpoints breakpoints;
    SlaMenu menu;
    std::vector<int> choices;
    CapacityPlan plan;
    double total_unit_revenue = 0.0;
    unsigned long long candidates_evaluated = 0;
};

// Exhaustive sweep over every nonempty subset of the wait list and every
// way to cut the user ranking into that many bands, pricing each candidate
// with breakpoint_prices and planning capacity for the induced demand.
// Ties break toward fewer offered levels, then the lexicographically
// smaller offered subset, then lexicographically smaller cuts. m = 0
// returns the empty solution with revenue 0 and no candidates evaluated.
PricingSolution optimize_prices(int m, const UserPopulation& pop,
                                const std::vector<double>& waits,
                                const QueueModel& model,
                                const PricingOptions& options = {});

// Number of candidates the sweep enumerates: sum over subset sizes r of
// C(num_levels, r) * C(num_users, r).
unsigned long long candidate_count(int num_users, int num_levels);

}  // namespace qdp
