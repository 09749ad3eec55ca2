#pragma once

#include <cstdint>
#include <vector>

#include "qdprice/market.hpp"
#include "qdprice/planner.hpp"
#include "qdprice/queueing.hpp"

namespace qdp {

// What happens to a job whose queueing delay would exceed the promised
// wait bound phi.
enum class MissPolicy {
    // The job leaves unserved at its deadline and counts as a miss. This
    // matches the closed-form deadline-miss law the admissible-rate curve
    // is built on (a job reneging at arrival + phi consumes no service).
    DropAtDeadline,
    // Every job is served; a miss is simply a job whose delay exceeded
    // phi. The pool is then a plain FCFS queue.
    ServeLate,
};

struct SimConfig {
    double arrival_rate = 0.0;  // pooled Poisson arrival rate
    int servers = 1;
    QueueModel service = QueueModel::exponential(1.0, 0.05);
    // Horizon as a job count, so a fixed (config, seed) pair always
    // measures an identical window.
    long long total_jobs = 1'000'000;
    std::uint64_t seed = 1;
    double warmup = 0.1;  // fraction of initial jobs excluded from stats
    MissPolicy policy = MissPolicy::DropAtDeadline;
    // Collect per-server interarrival gaps (measured window only), e.g.
    // for distribution tests on the dispatcher.
    bool record_interarrivals = false;

    // Throws std::domain_error unless servers >= 1, total_jobs > 0,
    // warmup in [0, 0.5], arrival_rate >= 0, the service model is valid,
    // and the per-server load stays strictly below the stability bound
    // (the service rate, or the heavy-tailed supremum rate).
    void validate() const;
};

struct ServerStats {
    long long jobs = 0;
    double utilization = 0.0;
    double mean_wait = 0.0;
    double miss_fraction = 0.0;
};

// Empirical statistics over the post-warmup window. Confidence half-widths
// are batch means over 20 consecutive-arrival batches with the Student-t
// 97.5% quantile at 19 degrees of freedom, so mean +/- halfwidth is a 95%
// confidence interval.
struct SimStats {
    long long jobs = 0;     // jobs measured after warmup
    double elapsed = 0.0;   // time spanned by the measured arrivals
    double utilization = 0.0;
    double mean_wait = 0.0;
    // Certainty-equivalent wait at the per-server arrival-rate tilt:
    //   -(1/lambda) * log(mean of exp(-lambda * wait)),  lambda = rate/m.
    // For a stationary M/G/1 FCFS queue the Pollaczek-Khinchine workload
    // transform gives E[e^{-lambda W}] = (1 - rho) / E[e^{-lambda S}], so
    // this statistic has a closed form even when the raw mean wait does
    // not converge (heavy-tailed service); it is the quantity the
    // heavy-tailed wait law prices.
    double transform_wait = 0.0;
    double miss_fraction = 0.0;
    double utilization_halfwidth = 0.0;
    double mean_wait_halfwidth = 0.0;
    double transform_wait_halfwidth = 0.0;
    double miss_fraction_halfwidth = 0.0;
    std::vector<ServerStats> per_server;
    // Per-server interarrival gaps, filled when record_interarrivals is
    // set; empty vectors otherwise.
    std::vector<std::vector<double>> interarrivals;
};

// Simulate a pool of identical FCFS servers fed by one Poisson stream:
// each arrival is dispatched to a uniformly random server, service draws
// are i.i.d. from the configured model, and phi is the promised wait used
// for miss accounting (and for reneging under DropAtDeadline). Identical
// (config, phi) inputs produce bit-identical statistics. The arrival and
// routing stream is independent of the per-server service streams, so
// changing the pool size never perturbs the arrival pattern.
SimStats simulate_pool(const SimConfig& cfg, double phi);

struct PlanSimResult {
    std::vector<SimStats> per_level;  // one entry per menu level
    // Revenue per unit time with every arrival charged its level's posted
    // price on submission: sum over levels of price * (jobs / elapsed).
    double realized_revenue = 0.0;
};

// Simulate every staffed level of a capacity plan independently (level l
// runs servers[l] servers at the admitted rate) and report per-level
// statistics plus the realized revenue rate. Levels with no servers or no
// admitted work contribute zero rows. Per-level RNG streams derive from
// `seed` by level position, so results are reproducible level by level.
PlanSimResult simulate_plan(const CapacityPlan& plan, const SlaMenu& menu,
                            const QueueModel& model,
                            long long jobs_per_level, std::uint64_t seed,
                            MissPolicy policy = MissPolicy::DropAtDeadline);

}  // namespace qdp
