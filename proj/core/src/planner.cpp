#include "qdprice/planner.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace qdp {

namespace {

constexpr double kBoundaryRelEps = 1e-9;

// Snap ratios that sit within the boundary tolerance of an integer.
bool near_integer(double ratio, double& snapped) {
    snapped = std::round(ratio);
    return std::fabs(ratio - snapped) <=
           kBoundaryRelEps * std::max(1.0, std::fabs(ratio));
}

struct LevelSplit {
    double full_rate;
    double rem_rate;
};

// Split one level's offered rate into the whole-server part and the
// remainder. A rate within the boundary tolerance of a whole-server
// multiple counts entirely as the whole-server part, so admitted rates
// never exceed offered ones.
LevelSplit split_level(double rate, double cap) {
    const double ratio = rate / cap;
    double snapped;
    if (near_integer(ratio, snapped)) return {rate, 0.0};
    const double full = std::floor(ratio) * cap;
    return {full, rate - full};
}

struct GreedyEntry {
    double unit_revenue;
    double rate;
    int sla_index;
    int kind;  // 0 = FullServers, 1 = Remainder
};

// Admission core shared by plan_capacity and plan_capacity_revenue:
// fills accepted[0..L) and servers[0..L) for a fleet of m servers.
void admit(int m, std::span<const double> rates,
           std::span<const double> caps, std::span<const double> prices,
           const QueueModel& model, double* accepted, int* servers) {
    const std::size_t L = rates.size();
    for (std::size_t l = 0; l < L; ++l) {
        accepted[l] = 0.0;
        servers[l] = 0;
    }
    if (m == 0) return;

    int total_need = 0;
    bool ample = true;
    for (std::size_t l = 0; l < L; ++l) {
        total_need += min_servers(rates[l], caps[l]);
        if (total_need > m) {
            ample = false;
            break;
        }
    }

    if (ample) {
        for (std::size_t l = 0; l < L; ++l) {
            const int need = min_servers(rates[l], caps[l]);
            // A positive rate that rounds to zero servers cannot be served.
            accepted[l] = need > 0 ? rates[l] : 0.0;
            servers[l] = need;
        }
        return;
    }

    std::array<GreedyEntry, 32> stack_buf;
    std::vector<GreedyEntry> heap_buf;
    GreedyEntry* queues = stack_buf.data();
    if (2 * L > stack_buf.size()) {
        heap_buf.resize(2 * L);
        queues = heap_buf.data();
    }
    for (std::size_t l = 0; l < L; ++l) {
        const auto split = split_level(rates[l], caps[l]);
        queues[2 * l] = {model.utilization(caps[l]) * prices[l],
                         split.full_rate, static_cast<int>(l), 0};
        queues[2 * l + 1] = {split.rem_rate > 0.0
                                 ? model.utilization(split.rem_rate) *
                                       prices[l]
                                 : 0.0,
                             split.rem_rate, static_cast<int>(l), 1};
    }
    std::sort(queues, queues + 2 * L,
              [](const GreedyEntry& a, const GreedyEntry& b) {
                  if (a.unit_revenue != b.unit_revenue)
                      return a.unit_revenue > b.unit_revenue;
                  if (a.sla_index != b.sla_index)
                      return a.sla_index < b.sla_index;
                  return a.kind < b.kind;
              });

    int free = m;
    for (std::size_t i = 0; i < 2 * L && free > 0; ++i) {
        const GreedyEntry& q = queues[i];
        if (q.rate <= 0.0) continue;
        const std::size_t l = static_cast<std::size_t>(q.sla_index);
        if (q.kind == 0) {
            const int need = min_servers(q.rate, caps[l]);
            const int k = std::min(need, free);
            accepted[l] +=
                k == need ? q.rate : static_cast<double>(k) * caps[l];
            servers[l] += k;
            free -= k;
        } else {
            // A remainder runs on one whole server or not at all.
            accepted[l] += q.rate;
            servers[l] += 1;
            free -= 1;
        }
    }
}

void check_inputs(int m, std::span<const double> rates,
                  std::span<const double> caps, std::size_t L) {
    if (rates.size() != L || caps.size() != L)
        throw std::invalid_argument(
            "plan_capacity: rates and caps must match the menu");
    if (m < 0) throw std::domain_error("plan_capacity: m must be >= 0");
    for (double r : rates)
        if (!(r >= 0.0))
            throw std::domain_error("plan_capacity: rates must be >= 0");
}

}  // namespace

int min_servers(double rate, double lambda_max) {
    if (!(lambda_max > 0.0))
        throw std::domain_error("min_servers: lambda_max must be > 0");
    if (!(rate >= 0.0))
        throw std::domain_error("min_servers: rate must be >= 0");
    if (rate == 0.0) return 0;
    const double ratio = rate / lambda_max;
    if (ratio >= 2.0e9)
        throw std::overflow_error("min_servers: count exceeds integer range");
    double snapped;
    if (near_integer(ratio, snapped)) return static_cast<int>(snapped);
    return static_cast<int>(std::ceil(ratio));
}

std::vector<double> admissible_caps(const SlaMenu& menu,
                                    const QueueModel& model) {
    std::vector<double> caps;
    caps.reserve(menu.size());
    for (double phi : menu.waits) caps.push_back(model.lambda_max(phi));
    return caps;
}

std::vector<VirtualQueue> split_virtual_queues(
    const std::vector<double>& rates, const std::vector<double>& caps,
    const std::vector<double>& prices, const QueueModel& model) {
    if (rates.size() != caps.size() || rates.size() != prices.size())
        throw std::invalid_argument(
            "split_virtual_queues: rates, caps, and prices must align");
    std::vector<VirtualQueue> queues;
    queues.reserve(2 * rates.size());
    for (std::size_t l = 0; l < rates.size(); ++l) {
        const auto split = split_level(rates[l], caps[l]);
        const int li = static_cast<int>(l);
        queues.push_back({li, QueueKind::FullServers, split.full_rate,
                          model.utilization(caps[l]) * prices[l]});
        queues.push_back({li, QueueKind::Remainder, split.rem_rate,
                          split.rem_rate > 0.0
                              ? model.utilization(split.rem_rate) * prices[l]
                              : 0.0});
    }
    return queues;
}

CapacityPlan plan_capacity(int m, const std::vector<double>& rates,
                           const SlaMenu& menu, const QueueModel& model) {
    return plan_capacity(m, rates, menu, admissible_caps(menu, model), model);
}

CapacityPlan plan_capacity(int m, const std::vector<double>& rates,
                           const SlaMenu& menu,
                           const std::vector<double>& caps,
                           const QueueModel& model) {
    if (!menu.priced())
        throw std::invalid_argument("plan_capacity: menu carries no prices");
    const std::size_t L = menu.size();
    check_inputs(m, rates, caps, L);

    CapacityPlan plan;
    plan.accepted_rates.assign(L, 0.0);
    plan.servers.assign(L, 0);
    plan.per_server_rates.assign(L, 0.0);
    plan.utilizations.assign(L, 0.0);
    admit(m, rates, caps, menu.prices, model, plan.accepted_rates.data(),
          plan.servers.data());

    for (std::size_t l = 0; l < L; ++l) {
        if (plan.servers[l] > 0) {
            plan.per_server_rates[l] =
                plan.accepted_rates[l] / plan.servers[l];
            plan.utilizations[l] = model.utilization(plan.per_server_rates[l]);
        }
    }
    plan.total_unit_revenue = total_unit_revenue(plan, menu.prices);
    return plan;
}

double plan_capacity_revenue(int m, std::span<const double> rates,
                             std::span<const double> caps,
                             std::span<const double> prices,
                             const QueueModel& model) {
    const std::size_t L = rates.size();
    if (prices.size() != L)
        throw std::invalid_argument(
            "plan_capacity_revenue: one price per level required");
    check_inputs(m, rates, caps, L);

    std::array<double, 32> acc_buf;
    std::array<int, 32> srv_buf;
    std::vector<double> acc_heap;
    std::vector<int> srv_heap;
    double* accepted = acc_buf.data();
    int* servers = srv_buf.data();
    if (L > acc_buf.size()) {
        acc_heap.resize(L);
        srv_heap.resize(L);
        accepted = acc_heap.data();
        servers = srv_heap.data();
    }
    admit(m, rates, caps, prices, model, accepted, servers);

    double total = 0.0;
    for (std::size_t l = 0; l < L; ++l) {
        if (servers[l] > 0)
            total += servers[l] *
                     model.utilization(accepted[l] / servers[l]) * prices[l];
    }
    return total;
}

double total_unit_revenue(const CapacityPlan& plan,
                          const std::vector<double>& prices) {
    if (prices.size() != plan.servers.size())
        throw std::invalid_argument(
            "total_unit_revenue: one price per level required");
    double total = 0.0;
    for (std::size_t l = 0; l < plan.servers.size(); ++l)
        total += plan.servers[l] * plan.utilizations[l] * prices[l];
    return total;
}

}  // namespace qdp
