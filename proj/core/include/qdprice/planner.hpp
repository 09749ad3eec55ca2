#pragma once

#include <span>
#include <vector>

#include "qdprice/market.hpp"
#include "qdprice/queueing.hpp"

namespace qdp {

// Minimum number of servers that can carry `rate` when each server may take
// at most `lambda_max`: ceil(rate / lambda_max) with min_servers(0) = 0.
// Ratios within 1e-9 (relative) of an integer snap to that integer before
// the ceiling, guarding float boundaries like rate = 3 * lambda_max; as a
// consequence, positive rates below 1e-9 * lambda_max round to zero servers.
// Domain error for lambda_max <= 0 or rate < 0.
int min_servers(double rate, double lambda_max);

// Per-level admission caps for the menu's waits under the service model:
// caps[l] = model.lambda_max(menu.waits[l]).
std::vector<double> admissible_caps(const SlaMenu& menu,
                                    const QueueModel& model);

enum class QueueKind { FullServers, Remainder };

// One of the two virtual queues a service level's offered stream splits
// into. The FullServers queue carries the largest whole-server multiple of
// the admission cap (its rate is an integer multiple of the cap, up to the
// 1e-9 boundary snap) and earns the level's maximum revenue per server; the
// Remainder queue carries what is left (strictly below one cap) on a single
// partially loaded server.
struct VirtualQueue {
    int sla_index = 0;  // 0-based level in the menu
    QueueKind kind = QueueKind::FullServers;
    double rate = 0.0;
    double unit_revenue = 0.0;  // revenue per server per unit time
};

// Split every level's offered rate into its FullServers and Remainder
// virtual queues (2L entries, level-major, FullServers first). Unit
// revenues are utilization(per-server rate) * price; a zero-rate Remainder
// earns zero.
std::vector<VirtualQueue> split_virtual_queues(
    const std::vector<double>& rates, const std::vector<double>& caps,
    const std::vector<double>& prices, const QueueModel& model);

// Result of capacity planning: per-level admitted rates, server counts,
// per-server rates and busy fractions, and the plan's revenue per unit
// time. Levels with zero servers carry zero rate and utilization.
struct CapacityPlan {
    std::vector<double> accepted_rates;
    std::vector<int> servers;
    std::vector<double> per_server_rates;
    std::vector<double> utilizations;
    double total_unit_revenue = 0.0;

    int total_servers() const {
        int sum = 0;
        for (int s : servers) sum += s;
        return sum;
    }
};

// Revenue-maximizing admission and server assignment for a fleet of m
// servers facing per-level offered rates under a priced menu. When the
// fleet can serve everything (sum of per-level minimum server counts fits
// in m), every offered rate is admitted with its minimum server count.
// Otherwise the 2L virtual queues are admitted greedily in order of
// decreasing revenue per server (ties: lower level first, FullServers
// before Remainder): a FullServers queue may be cut to the whole-server
// rate that still fits, while a Remainder queue needs one whole free
// server or is skipped entirely. Arrival streams are dispatched uniformly,
// so no server ever exceeds its level's admission cap.
CapacityPlan plan_capacity(int m, const std::vector<double>& rates,
                           const SlaMenu& menu, const QueueModel& model);

// Hot-path overload with precomputed admissible_caps (the caps depend only
// on the menu waits, not on prices or rates).
CapacityPlan plan_capacity(int m, const std::vector<double>& rates,
                           const SlaMenu& menu,
                           const std::vector<double>& caps,
                           const QueueModel& model);

// Total unit revenue of the plan that plan_capacity would build, without
// materializing the plan. Runs the same admission core, so the value is
// identical; meant for tight search loops that only need the objective.
double plan_capacity_revenue(int m, std::span<const double> rates,
                             std::span<const double> caps,
                             std::span<const double> prices,
                             const QueueModel& model);

// Revenue per unit time of a plan under the given prices:
// sum over levels of servers * utilization * price.
double total_unit_revenue(const CapacityPlan& plan,
                          const std::vector<double>& prices);

}  // namespace qdp
