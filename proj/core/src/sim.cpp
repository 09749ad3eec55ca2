#include "qdprice/sim.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <variant>
#include <vector>

namespace qdp {

namespace {

constexpr int kBatches = 20;
// Student-t 97.5% quantile at 19 degrees of freedom.
constexpr double kT975Df19 = 2.093024054408263;

// SplitMix64: seeds the draw streams, one 64-bit word per step.
struct SplitMix64 {
    std::uint64_t state;
    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
};

// xoshiro256++: the draw stream. Hand-rolled (like the transforms below)
// so identical seeds give bit-identical runs on any platform.
struct Xoshiro256pp {
    std::array<std::uint64_t, 4> s;

    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    std::uint64_t next() {
        const std::uint64_t result = rotl(s[0] + s[3], 23) + s[0];
        const std::uint64_t t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = rotl(s[3], 45);
        return result;
    }
    // Uniform on [0, 1) with 53 random bits.
    double uniform01() { return (next() >> 11) * 0x1.0p-53; }
};

Xoshiro256pp seeded_stream(SplitMix64& seeder) {
    Xoshiro256pp g;
    for (auto& w : g.s) w = seeder.next();
    return g;
}

double exponential_draw(Xoshiro256pp& g, double rate) {
    // 1 - U lies in (0, 1], so the log is finite.
    return -std::log1p(-g.uniform01()) / rate;
}

double service_draw(Xoshiro256pp& g, const QueueModel& model) {
    if (const auto* e = std::get_if<ExponentialQueueSpec>(&model.spec))
        return exponential_draw(g, e->mu);
    const auto& p = std::get<ParetoQueueSpec>(model.spec);
    // Inverse CDF: tau * U^{-1/alpha} with U in (0, 1].
    return p.min_runtime *
           std::pow(1.0 - g.uniform01(), -1.0 / p.shape_alpha);
}

// Unbiased-enough uniform pick in [0, m): multiply-shift on 64 bits.
int route(Xoshiro256pp& g, int m) {
    return static_cast<int>(
        (static_cast<unsigned __int128>(g.next()) *
         static_cast<unsigned __int128>(static_cast<std::uint32_t>(m))) >>
        64);
}

double stability_bound(const QueueModel& model) {
    if (const auto* e = std::get_if<ExponentialQueueSpec>(&model.spec))
        return e->mu;
    return std::get<ParetoQueueSpec>(model.spec).rate_sup();
}

struct BatchAccumulator {
    std::array<double, kBatches> value{};
    int used = 0;

    void push(double v) { value[used++] = v; }
    // Mean of the batch values; the half-width is the t-scaled standard
    // error across batches (0 when fewer than two batches exist).
    double mean() const {
        double sum = 0.0;
        for (int b = 0; b < used; ++b) sum += value[b];
        return used > 0 ? sum / used : 0.0;
    }
    double halfwidth() const {
        if (used < 2) return 0.0;
        const double m = mean();
        double ss = 0.0;
        for (int b = 0; b < used; ++b)
            ss += (value[b] - m) * (value[b] - m);
        const double sd = std::sqrt(ss / (used - 1));
        return kT975Df19 * sd / std::sqrt(static_cast<double>(used));
    }
};

}  // namespace

void SimConfig::validate() const {
    if (servers < 1)
        throw std::domain_error("SimConfig: servers must be >= 1");
    if (total_jobs <= 0)
        throw std::domain_error("SimConfig: total_jobs must be > 0");
    if (!(warmup >= 0.0 && warmup <= 0.5))
        throw std::domain_error("SimConfig: warmup must lie in [0, 0.5]");
    if (!(arrival_rate >= 0.0))
        throw std::domain_error("SimConfig: arrival_rate must be >= 0");
    service.validate();
    if (arrival_rate > 0.0) {
        const double per_server = arrival_rate / servers;
        if (!(per_server < stability_bound(service)))
            throw std::domain_error(
                "SimConfig: per-server load must stay strictly below the "
                "stability bound");
    }
}

SimStats simulate_pool(const SimConfig& cfg, double phi) {
    cfg.validate();
    if (!(phi >= 0.0))
        throw std::domain_error("simulate_pool: phi must be >= 0");

    SimStats stats;
    stats.per_server.assign(cfg.servers, ServerStats{});
    if (cfg.record_interarrivals) stats.interarrivals.resize(cfg.servers);
    if (cfg.arrival_rate == 0.0) return stats;

    SplitMix64 seeder{cfg.seed};
    Xoshiro256pp arrivals = seeded_stream(seeder);
    std::vector<Xoshiro256pp> service_streams;
    service_streams.reserve(cfg.servers);
    for (int s = 0; s < cfg.servers; ++s)
        service_streams.push_back(seeded_stream(seeder));

    const long long total = cfg.total_jobs;
    const long long warm = static_cast<long long>(
        std::floor(static_cast<double>(total) * cfg.warmup));
    const long long measured = total - warm;
    const int batches =
        static_cast<int>(std::min<long long>(kBatches, measured));
    const long long batch_base = measured / batches;
    const long long batch_extra = measured % batches;

    const double tilt = cfg.arrival_rate / cfg.servers;

    BatchAccumulator util_acc, wait_acc, transform_acc, miss_acc;
    std::vector<double> t_free(cfg.servers, 0.0);
    std::vector<double> server_wait_sum(cfg.servers, 0.0);
    std::vector<double> server_work(cfg.servers, 0.0);
    std::vector<long long> server_miss(cfg.servers, 0);
    std::vector<double> server_last_arrival(cfg.servers, -1.0);

    double t = 0.0;
    double window_start = 0.0, window_end = 0.0;
    double batch_t0 = 0.0;  // spans partition the window: end of prior batch
    long long in_batch = 0;
    long long batch_index = 0;
    double batch_wait = 0.0, batch_transform = 0.0, batch_work = 0.0;
    long long batch_miss = 0;
    double total_wait = 0.0, total_transform = 0.0, total_work = 0.0;
    long long total_miss = 0;

    for (long long i = 0; i < total; ++i) {
        t += exponential_draw(arrivals, cfg.arrival_rate);
        const int s = route(arrivals, cfg.servers);

        const double start = std::max(t, t_free[s]);
        double wait = start - t;
        bool served = true;
        if (cfg.policy == MissPolicy::DropAtDeadline && wait > phi) {
            served = false;
            wait = phi;  // the job waited out its deadline, then left
        }
        const bool miss =
            cfg.policy == MissPolicy::DropAtDeadline ? !served : wait > phi;
        double duration = 0.0;
        if (served) {
            duration = service_draw(service_streams[s], cfg.service);
            t_free[s] = start + duration;
        }

        if (i < warm) continue;
        const long long j = i - warm;
        if (j == 0) window_start = batch_t0 = t;
        window_end = t;

        batch_wait += wait;
        batch_transform += std::exp(-tilt * wait);
        batch_work += duration;
        batch_miss += miss ? 1 : 0;

        stats.per_server[s].jobs += 1;
        server_wait_sum[s] += wait;
        server_work[s] += duration;
        server_miss[s] += miss ? 1 : 0;
        if (cfg.record_interarrivals) {
            if (server_last_arrival[s] >= 0.0)
                stats.interarrivals[s].push_back(t - server_last_arrival[s]);
            server_last_arrival[s] = t;
        }

        ++in_batch;
        const long long batch_size =
            batch_base + (batch_index < batch_extra ? 1 : 0);
        if (in_batch == batch_size) {
            const double span = t - batch_t0;
            batch_t0 = t;
            util_acc.push(span > 0.0
                              ? batch_work / (span * cfg.servers)
                              : 0.0);
            wait_acc.push(batch_wait / in_batch);
            transform_acc.push(
                tilt > 0.0
                    ? -std::log(batch_transform / in_batch) / tilt
                    : 0.0);
            miss_acc.push(static_cast<double>(batch_miss) / in_batch);
            total_wait += batch_wait;
            total_transform += batch_transform;
            total_work += batch_work;
            total_miss += batch_miss;
            batch_wait = batch_transform = batch_work = 0.0;
            batch_miss = 0;
            in_batch = 0;
            ++batch_index;
        }
    }

    stats.jobs = measured;
    stats.elapsed = window_end - window_start;
    stats.mean_wait = total_wait / measured;
    stats.transform_wait =
        tilt > 0.0 ? -std::log(total_transform / measured) / tilt : 0.0;
    stats.miss_fraction = static_cast<double>(total_miss) / measured;
    stats.utilization =
        stats.elapsed > 0.0
            ? total_work / (stats.elapsed * cfg.servers)
            : 0.0;
    stats.utilization_halfwidth = util_acc.halfwidth();
    stats.mean_wait_halfwidth = wait_acc.halfwidth();
    stats.transform_wait_halfwidth = transform_acc.halfwidth();
    stats.miss_fraction_halfwidth = miss_acc.halfwidth();

    for (int s = 0; s < cfg.servers; ++s) {
        ServerStats& ss = stats.per_server[s];
        if (ss.jobs > 0) {
            ss.mean_wait = server_wait_sum[s] / ss.jobs;
            ss.miss_fraction = static_cast<double>(server_miss[s]) / ss.jobs;
        }
        ss.utilization =
            stats.elapsed > 0.0 ? server_work[s] / stats.elapsed : 0.0;
    }
    return stats;
}

PlanSimResult simulate_plan(const CapacityPlan& plan, const SlaMenu& menu,
                            const QueueModel& model,
                            long long jobs_per_level, std::uint64_t seed,
                            MissPolicy policy) {
    menu.validate();
    if (!menu.priced())
        throw std::invalid_argument("simulate_plan: menu carries no prices");
    const std::size_t L = menu.size();
    if (plan.servers.size() != L || plan.accepted_rates.size() != L)
        throw std::invalid_argument(
            "simulate_plan: plan and menu must have the same levels");
    if (jobs_per_level <= 0)
        throw std::domain_error("simulate_plan: jobs_per_level must be > 0");

    PlanSimResult result;
    result.per_level.resize(L);
    SplitMix64 seeder{seed};
    for (std::size_t l = 0; l < L; ++l) {
        // One seed word per level, consumed unconditionally so a level's
        // stream does not depend on which other levels are staffed.
        const std::uint64_t level_seed = seeder.next();
        if (plan.servers[l] == 0 || !(plan.accepted_rates[l] > 0.0))
            continue;
        SimConfig cfg;
        cfg.arrival_rate = plan.accepted_rates[l];
        cfg.servers = plan.servers[l];
        cfg.service = model;
        cfg.total_jobs = jobs_per_level;
        cfg.seed = level_seed;
        cfg.policy = policy;
        result.per_level[l] = simulate_pool(cfg, menu.waits[l]);
        const SimStats& st = result.per_level[l];
        if (st.elapsed > 0.0)
            result.realized_revenue +=
                menu.prices[l] * (static_cast<double>(st.jobs) / st.elapsed);
    }
    return result;
}

}  // namespace qdp
