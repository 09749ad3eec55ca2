#include "qdprice/pricer.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <mutex>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

namespace qdp {

namespace {

// 2^L candidate subsets; beyond this the exhaustive sweep is not a sane
// tool, and fixed-size scratch arrays keep the hot loop allocation-free.
constexpr int kMaxLevels = 16;

constexpr double kUndercutRel = 1e-6;

struct Candidate {
    double revenue = -1.0;  // below any real candidate; revenue is >= 0
    int r = 0;
    std::array<int, kMaxLevels> sel{};   // offered level indices, ascending
    std::array<int, kMaxLevels> cuts{};  // 1-based cut users, ascending
    bool valid = false;
};

// Total order over candidates: higher revenue wins; ties prefer fewer
// offered levels, then the lexicographically smaller subset, then the
// lexicographically smaller cut tuple. Total over distinct candidates, so
// folding per-worker bests in any order yields the same winner.
bool better(const Candidate& a, const Candidate& b) {
    if (!b.valid || !a.valid) return a.valid;
    if (a.revenue != b.revenue) return a.revenue > b.revenue;
    if (a.r != b.r) return a.r < b.r;
    for (int i = 0; i < a.r; ++i)
        if (a.sel[i] != b.sel[i]) return a.sel[i] < b.sel[i];
    for (int i = 0; i < a.r; ++i)
        if (a.cuts[i] != b.cuts[i]) return a.cuts[i] < b.cuts[i];
    return false;
}

struct SweepContext {
    int m = 0;
    int num_users = 0;
    int num_levels = 0;
    const QueueModel* model = nullptr;
    std::vector<double> weights;      // per user
    std::vector<double> rate_prefix;  // rate_prefix[i] = sum of rates of users [0, i)
    std::vector<double> value_at;     // P(phi_l) per level
    std::vector<double> caps;         // lambda_max(phi_l) per level
    bool undercut = false;
};

// Price and plan one candidate; infeasible price chains are skipped but
// still counted. Updates `best` under the candidate total order.
void eval_candidate(const SweepContext& ctx, const int* sel, int r,
                    const int* cuts, Candidate& best,
                    unsigned long long& count) {
    ++count;

    std::array<double, kMaxLevels> theta;
    theta[r - 1] =
        ctx.weights[cuts[r - 1] - 1] * ctx.value_at[sel[r - 1]];
    for (int l = r - 2; l >= 0; --l) {
        const double w = ctx.weights[cuts[l] - 1];
        theta[l] =
            w * (ctx.value_at[sel[l]] - ctx.value_at[sel[l + 1]]) +
            theta[l + 1];
    }
    for (int l = 0; l < r; ++l) {
        if (!(theta[l] > 0.0)) return;
        if (l + 1 < r && !(theta[l] > theta[l + 1])) return;
    }
    if (ctx.undercut)
        for (int l = 0; l < r; ++l) theta[l] *= 1.0 - kUndercutRel;

    std::array<double, kMaxLevels> rates;
    std::array<double, kMaxLevels> caps;
    int prev = 0;
    for (int l = 0; l < r; ++l) {
        rates[l] = ctx.rate_prefix[cuts[l]] - ctx.rate_prefix[prev];
        caps[l] = ctx.caps[sel[l]];
        prev = cuts[l];
    }
    const std::size_t n = static_cast<std::size_t>(r);
    const double revenue = plan_capacity_revenue(
        ctx.m, {rates.data(), n}, {caps.data(), n}, {theta.data(), n},
        *ctx.model);

    if (revenue < best.revenue) return;
    Candidate cand;
    cand.valid = true;
    cand.revenue = revenue;
    cand.r = r;
    std::copy(sel, sel + r, cand.sel.begin());
    std::copy(cuts, cuts + r, cand.cuts.begin());
    if (better(cand, best)) best = cand;
}

// One unit of parallel work: a fixed offered subset plus a fixed first cut;
// the remaining cuts are swept by odometer.
struct Task {
    std::uint32_t mask;
    int first_cut;
};

void run_task(const SweepContext& ctx, const Task& task, Candidate& best,
              unsigned long long& count) {
    std::array<int, kMaxLevels> sel;
    int r = 0;
    for (int l = 0; l < ctx.num_levels; ++l)
        if (task.mask & (1u << l)) sel[r++] = l;

    std::array<int, kMaxLevels> cuts;
    cuts[0] = task.first_cut;
    if (r == 1) {
        eval_candidate(ctx, sel.data(), r, cuts.data(), best, count);
        return;
    }
    for (int i = 1; i < r; ++i) cuts[i] = task.first_cut + i;
    const int K = ctx.num_users;
    for (;;) {
        eval_candidate(ctx, sel.data(), r, cuts.data(), best, count);
        int pos = r - 1;
        while (pos >= 1 && cuts[pos] == K - (r - 1 - pos)) --pos;
        if (pos == 0) break;
        ++cuts[pos];
        for (int i = pos + 1; i < r; ++i) cuts[i] = cuts[i - 1] + 1;
    }
}

PricingSolution empty_solution(std::size_t num_users) {
    PricingSolution sol;
    sol.choices.assign(num_users, kOptOut);
    return sol;
}

}  // namespace

void Breakpoints::validate(std::size_t num_waits,
                           std::size_t num_users) const {
    if (offered.empty())
        throw std::invalid_argument("Breakpoints: offered must be nonempty");
    if (offered.size() != cut_users.size())
        throw std::invalid_argument(
            "Breakpoints: one cut per offered level required");
    int prev = -1;
    for (int l : offered) {
        if (l <= prev || l >= static_cast<int>(num_waits))
            throw std::invalid_argument(
                "Breakpoints: offered must be ascending indices into the "
                "wait list");
        prev = l;
    }
    prev = 0;
    for (int c : cut_users) {
        if (c <= prev || c > static_cast<int>(num_users))
            throw std::invalid_argument(
                "Breakpoints: cut_users must be strictly increasing ranks "
                "in [1, num_users]");
        prev = c;
    }
}

std::optional<std::vector<double>> breakpoint_prices(
    const Breakpoints& bp, const UserPopulation& pop,
    const std::vector<double>& waits) {
    pop.validate();
    bp.validate(waits.size(), pop.users.size());

    const std::size_t r = bp.offered.size();
    std::vector<double> theta(r);
    theta[r - 1] = pop.users[bp.cut_users[r - 1] - 1].weight *
                   pop.shape.value(waits[bp.offered[r - 1]]);
    for (std::size_t l = r - 1; l-- > 0;) {
        const double w = pop.users[bp.cut_users[l] - 1].weight;
        theta[l] = w * (pop.shape.value(waits[bp.offered[l]]) -
                        pop.shape.value(waits[bp.offered[l + 1]])) +
                   theta[l + 1];
    }
    for (std::size_t l = 0; l < r; ++l) {
        if (!(theta[l] > 0.0)) return std::nullopt;
        if (l + 1 < r && !(theta[l] > theta[l + 1])) return std::nullopt;
    }
    return theta;
}

PricingSolution optimize_prices(int m, const UserPopulation& pop,
                                const std::vector<double>& waits,
                                const QueueModel& model,
                                const PricingOptions& options) {
    pop.validate();
    if (pop.users.empty())
        throw std::invalid_argument(
            "optimize_prices: population must be nonempty");
    SlaMenu unpriced{waits, {}};
    unpriced.validate();
    if (waits.size() > kMaxLevels)
        throw std::invalid_argument(
            "optimize_prices: wait list too large for an exhaustive sweep");
    model.validate();
    if (m < 0) throw std::domain_error("optimize_prices: m must be >= 0");
    if (options.workers < 1)
        throw std::invalid_argument("optimize_prices: workers must be >= 1");
    if (m == 0) return empty_solution(pop.users.size());

    SweepContext ctx;
    ctx.m = m;
    ctx.num_users = static_cast<int>(pop.users.size());
    ctx.num_levels = static_cast<int>(waits.size());
    ctx.model = &model;
    ctx.undercut = options.epsilon_undercut;
    ctx.weights.reserve(pop.users.size());
    ctx.rate_prefix.reserve(pop.users.size() + 1);
    ctx.rate_prefix.push_back(0.0);
    for (const User& u : pop.users) {
        ctx.weights.push_back(u.weight);
        ctx.rate_prefix.push_back(ctx.rate_prefix.back() + u.arrival_rate);
    }
    for (double phi : waits) {
        ctx.value_at.push_back(pop.shape.value(phi));
        ctx.caps.push_back(model.lambda_max(phi));
    }

    std::vector<Task> tasks;
    const std::uint32_t num_masks = 1u << ctx.num_levels;
    for (std::uint32_t mask = 1; mask < num_masks; ++mask) {
        const int r = std::popcount(mask);
        for (int c1 = 1; c1 + r - 1 <= ctx.num_users; ++c1)
            tasks.push_back({mask, c1});
    }

    Candidate best;
    unsigned long long total_count = 0;
    const std::size_t worker_cap = std::max<std::size_t>(tasks.size(), 1);
    const int workers = static_cast<int>(std::min<std::size_t>(
        static_cast<std::size_t>(options.workers), worker_cap));
    if (workers <= 1) {
        for (const Task& t : tasks) run_task(ctx, t, best, total_count);
    } else {
        std::atomic<std::size_t> next{0};
        std::mutex merge_mutex;
        auto work = [&]() {
            Candidate local;
            unsigned long long count = 0;
            for (;;) {
                const std::size_t t =
                    next.fetch_add(1, std::memory_order_relaxed);
                if (t >= tasks.size()) break;
                run_task(ctx, tasks[t], local, count);
            }
            const std::lock_guard<std::mutex> lock(merge_mutex);
            total_count += count;
            if (better(local, best)) best = local;
        };
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int i = 0; i < workers; ++i) pool.emplace_back(work);
        for (std::thread& th : pool) th.join();
    }

    if (!best.valid) {
        PricingSolution sol = empty_solution(pop.users.size());
        sol.candidates_evaluated = total_count;
        return sol;
    }

    PricingSolution sol;
    sol.candidates_evaluated = total_count;
    sol.breakpoints.offered.assign(best.sel.begin(),
                                   best.sel.begin() + best.r);
    sol.breakpoints.cut_users.assign(best.cuts.begin(),
                                     best.cuts.begin() + best.r);
    const auto prices = breakpoint_prices(sol.breakpoints, pop, waits);
    if (!prices)
        throw std::logic_error(
            "optimize_prices: winning candidate must price feasibly");
    sol.menu.prices = *prices;
    if (ctx.undercut)
        for (double& p : sol.menu.prices) p *= 1.0 - kUndercutRel;
    sol.menu.waits.reserve(best.r);
    for (int l : sol.breakpoints.offered) sol.menu.waits.push_back(waits[l]);

    sol.choices.reserve(pop.users.size());
    for (const User& u : pop.users)
        sol.choices.push_back(choose_sla(u, pop.shape, sol.menu));
    const std::vector<double> rates = aggregate_arrivals(pop, sol.menu);
    std::vector<double> menu_caps;
    menu_caps.reserve(best.r);
    for (int l : sol.breakpoints.offered) menu_caps.push_back(ctx.caps[l]);
    sol.plan = plan_capacity(m, rates, sol.menu, menu_caps, model);
    sol.total_unit_revenue = sol.plan.total_unit_revenue;
    return sol;
}

unsigned long long candidate_count(int num_users, int num_levels) {
    if (num_users < 0 || num_levels < 0)
        throw std::domain_error("candidate_count: counts must be >= 0");
    const auto choose = [](int n, int k) -> unsigned long long {
        if (k < 0 || k > n) return 0;
        unsigned long long c = 1;
        for (int i = 1; i <= k; ++i)
            c = c * static_cast<unsigned long long>(n - k + i) /
                static_cast<unsigned long long>(i);
        return c;
    };
    unsigned long long total = 0;
    for (int r = 1; r <= num_levels; ++r)
        total += choose(num_levels, r) * choose(num_users, r);
    return total;
}

}  // namespace qdp
