// Acceptance gate for the shipped guarantees. Each check prints exactly
// one PASS/FAIL line with its measured runtime; tolerances are pinned in
// the code next to the quantities they guard. Golden values are reference
// values computed with 25-digit arbitrary-precision arithmetic.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <string>
#include <vector>

#include "qdprice/market.hpp"
#include "qdprice/planner.hpp"
#include "qdprice/pricer.hpp"
#include "qdprice/queueing.hpp"
#include "qdprice/scenario.hpp"
#include "qdprice/sim.hpp"

#include "support/planner_oracle.hpp"
#include "support/pricer_oracle.hpp"

namespace {

using namespace qdp;

std::string strf(const char* spec, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, spec);
    std::vsnprintf(buf, sizeof buf, spec, ap);
    va_end(ap);
    return buf;
}

bool near(double v, double target, double tol) {
    return std::fabs(v - target) <= tol;
}

double rel_err(double got, double want) {
    if (want == 0.0) return std::fabs(got);
    return std::fabs(got - want) / std::fabs(want);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         t0)
        .count();
}

// Solve one battery cell and its single-level restriction; returns the
// improvement ratio of the full menu over the restriction.
double cell_improvement(const Scenario& sc, WeightScheme scheme, int fleet,
                        double value) {
    const UserPopulation pop = sc.population(scheme, value);
    const auto full = optimize_prices(fleet, pop, sc.menu_waits, sc.model);
    const auto base =
        optimize_prices(fleet, pop, {sc.menu_waits.front()}, sc.model);
    return improvement_ratio(full.total_unit_revenue,
                             base.total_unit_revenue);
}

// ---------------------------------------------------------------------
// Check 1: the largest admissible per-server arrival rate under the
// exponential model (unit service rate, 5% deadline-miss target) at the
// five reference waits, within 5e-4.
bool check_admissible_grid(std::string& detail) {
    const ExponentialQueueSpec spec;  // mu = 1, miss target 0.05
    const double waits[] = {0, 1, 2, 4, 8};
    const double targets[] = {0.05263, 0.1362, 0.2863, 0.5883, 0.8534};
    const double tol = 5e-4;
    for (int k = 0; k < 5; ++k) {
        const double got = exp_lambda_max(spec, waits[k]);
        if (!near(got, targets[k], tol)) {
            detail = strf("wait %g: got %.6f, want %.4f +/- %g", waits[k],
                          got, targets[k], tol);
            return false;
        }
    }
    detail = "5 waits within 5e-4";
    return true;
}

// Check 2: heavy-tail busy fraction at the tightest promised wait. At the
// admissible rate for a promised expected wait of 0.05, the stationary
// busy fraction is 0.3168% within 0.01 percentage points.
bool check_heavy_anchor(std::string& detail) {
    const ParetoQueueSpec spec;  // tail index 1.4, min runtime 1/6
    const double lam = pareto_lambda_max(0.05, spec);
    const double util = pareto_utilization(lam, spec);
    detail = strf("rate %.8f, utilization %.6f%%", lam, 100.0 * util);
    return near(util, 0.003168, 1e-4);
}

// Check 3: the fleet-800 reference cell (compact weights, power shape
// 0.45). The optimizer must return service levels 4 and 5 of the
// five-level list, user cuts (18, 26), prices (57.93, 40.73) +/- 0.02,
// accepted rates exactly (360, 160), servers exactly (612, 188), and a
// revenue improvement of 264.8% +/- 1 percentage point over the
// single-level restriction, whose price must be 178.18 +/- 0.02. Budget:
// 600 s single-threaded, 120 s with eight workers.
bool check_reference_cell_800(std::string& detail) {
    Scenario sc;
    const UserPopulation pop = sc.population(WeightScheme::Compact, 0.45);

    PricingOptions one;
    one.workers = 1;
    auto t0 = std::chrono::steady_clock::now();
    const auto sol = optimize_prices(800, pop, sc.menu_waits, sc.model, one);
    const double t_single = seconds_since(t0);

    PricingOptions eight;
    eight.workers = 8;
    t0 = std::chrono::steady_clock::now();
    const auto sol8 =
        optimize_prices(800, pop, sc.menu_waits, sc.model, eight);
    const double t_eight = seconds_since(t0);

    const auto base =
        optimize_prices(800, pop, {sc.menu_waits.front()}, sc.model, one);
    const double improvement = improvement_ratio(sol.total_unit_revenue,
                                                 base.total_unit_revenue);

    detail = strf("improvement %+.2f%%, single %.2f s, 8-way %.2f s",
                  100.0 * improvement, t_single, t_eight);

    if (sol8.total_unit_revenue != sol.total_unit_revenue) {
        detail += "; worker counts disagree";
        return false;
    }
    if (sol.breakpoints.offered != std::vector<int>{3, 4} ||
        sol.breakpoints.cut_users != std::vector<int>{18, 26}) {
        detail += "; wrong menu structure";
        return false;
    }
    if (!near(sol.menu.prices[0], 57.93, 0.02) ||
        !near(sol.menu.prices[1], 40.73, 0.02)) {
        detail += strf("; prices (%.4f, %.4f)", sol.menu.prices[0],
                       sol.menu.prices[1]);
        return false;
    }
    if (sol.plan.accepted_rates != std::vector<double>{360.0, 160.0}) {
        detail += "; accepted rates not exactly (360, 160)";
        return false;
    }
    if (sol.plan.servers != std::vector<int>{612, 188}) {
        detail += "; servers not exactly (612, 188)";
        return false;
    }
    if (!near(base.menu.prices[0], 178.18, 0.02)) {
        detail += strf("; baseline price %.4f", base.menu.prices[0]);
        return false;
    }
    if (!near(improvement, 2.648, 0.01)) return false;
    if (t_single > 600.0 || t_eight > 120.0) {
        detail += "; runtime budget exceeded";
        return false;
    }
    return true;
}

// Check 4: the fleet-1600 and fleet-2400 reference cells (compact, 0.45):
// cuts and server tuples exactly, prices +/- 0.02. For fleet 1600 the
// first cut is pinned at 9: cut 9 is the unique value consistent with the
// asserted prices and server counts.
bool check_reference_cells_wide(std::string& detail) {
    struct Target {
        int fleet;
        std::vector<int> cuts;
        std::vector<int> servers;
        std::vector<double> prices;
    };
    const std::vector<Target> targets = {
        {1600, {9, 37, 38}, {625, 952, 23}, {69.86, 47.47, 34.21}},
        {2400, {26, 41, 44}, {1817, 510, 71}, {61.64, 43.39, 30.95}},
    };
    Scenario sc;
    const UserPopulation pop = sc.population(WeightScheme::Compact, 0.45);
    for (const auto& t : targets) {
        const auto sol =
            optimize_prices(t.fleet, pop, sc.menu_waits, sc.model);
        if (sol.breakpoints.cut_users != t.cuts) {
            detail = strf("fleet %d: wrong cuts", t.fleet);
            return false;
        }
        if (sol.plan.servers != t.servers) {
            detail = strf("fleet %d: wrong server tuple", t.fleet);
            return false;
        }
        for (std::size_t l = 0; l < t.prices.size(); ++l) {
            if (!near(sol.menu.prices[l], t.prices[l], 0.02)) {
                detail = strf("fleet %d level %zu: price %.4f, want %.2f",
                              t.fleet, l + 1, sol.menu.prices[l],
                              t.prices[l]);
                return false;
            }
        }
    }
    detail = "both cells exact";
    return true;
}

// Check 5: improvement is strictly decreasing in fleet size at (compact,
// 0.45); larger at shape 0.45 than 0.25 for (compact, 1600); larger under
// compact weights than loose weights at (1600, 0.45).
bool check_monotonicity(std::string& detail) {
    Scenario sc;
    const double i800 = cell_improvement(sc, WeightScheme::Compact, 800, 0.45);
    const double i1600 =
        cell_improvement(sc, WeightScheme::Compact, 1600, 0.45);
    const double i2400 =
        cell_improvement(sc, WeightScheme::Compact, 2400, 0.45);
    const double i1600_low =
        cell_improvement(sc, WeightScheme::Compact, 1600, 0.25);
    const double i1600_loose =
        cell_improvement(sc, WeightScheme::Loose, 1600, 0.45);
    detail = strf("fleet: %+.2f%% > %+.2f%% > %+.2f%%; shape %+.2f%% > "
                  "%+.2f%%; weights %+.2f%% > %+.2f%%",
                  100 * i800, 100 * i1600, 100 * i2400, 100 * i1600,
                  100 * i1600_low, 100 * i1600, 100 * i1600_loose);
    return i800 > i1600 && i1600 > i2400 && i1600 > i1600_low &&
           i1600 > i1600_loose;
}

// Check 6: the greedy capacity planner matches brute-force enumeration of
// integer allocations on the full deterministic battery (at least 200
// instances), to 1e-6 relative revenue.
bool check_planner_oracle(std::string& detail) {
    const auto battery = qdp_test::planner_oracle_battery();
    if (battery.size() < 200) {
        detail = strf("only %zu instances", battery.size());
        return false;
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < battery.size(); ++i) {
        const auto& inst = battery[i];
        const auto plan =
            plan_capacity(inst.m, inst.rates, inst.menu, inst.model);
        const double best = qdp_test::planner_oracle_best(inst);
        const double err = rel_err(plan.total_unit_revenue, best);
        worst = std::max(worst, err);
        if (err > 1e-6) {
            detail = strf("instance %zu: rel err %.3e", i, err);
            return false;
        }
    }
    detail = strf("%zu instances, worst rel err %.2e", battery.size(), worst);
    return true;
}

// Check 7: the exhaustive pricing sweep is at least as good as a 400x400
// posted-price grid on every small instance, up to one grid cell of slack.
bool check_pricer_oracle(std::string& detail) {
    const auto instances = testsupport::pricer_oracle_instances();
    if (instances.size() != 20) {
        detail = strf("expected 20 instances, got %zu", instances.size());
        return false;
    }
    for (std::size_t i = 0; i < instances.size(); ++i) {
        const auto& inst = instances[i];
        const auto ref = testsupport::price_grid_best(inst, 400);
        const auto sol =
            optimize_prices(inst.m, inst.pop, inst.waits, inst.model);
        if (sol.total_unit_revenue < ref.best_revenue - ref.slack) {
            detail = strf("instance %zu: sweep %.9f below grid %.9f - %.2e",
                          i, sol.total_unit_revenue, ref.best_revenue,
                          ref.slack);
            return false;
        }
    }
    detail = "20 instances within one grid cell";
    return true;
}

// Check 8: simulation agreement with the closed forms. (a) At the
// admissible rate for each reference wait, the simulated deadline-miss
// fraction over one million post-warmup jobs is 0.05 +/- 0.01. (b) For
// heavy-tailed service at five in-domain arrival rates (10%..50% of the
// stability bound), the tilted-wait statistic lies inside its batch-means
// 95% confidence interval around the expected-wait law.
bool check_simulator(std::string& detail) {
    const ExponentialQueueSpec espec;
    const double waits[] = {0, 1, 2, 4, 8};
    for (int k = 0; k < 5; ++k) {
        SimConfig cfg;
        cfg.arrival_rate = exp_lambda_max(espec, waits[k]);
        cfg.total_jobs = 1'111'111;  // exactly 1e6 measured after warmup
        cfg.seed = 9000 + static_cast<std::uint64_t>(k);
        const SimStats stats = simulate_pool(cfg, waits[k]);
        if (stats.jobs != 1'000'000) {
            detail = strf("wait %g: %lld measured jobs", waits[k],
                          static_cast<long long>(stats.jobs));
            return false;
        }
        if (!near(stats.miss_fraction, 0.05, 0.01)) {
            detail = strf("wait %g: miss fraction %.5f outside 0.05 +/- 0.01",
                          waits[k], stats.miss_fraction);
            return false;
        }
    }

    const ParetoQueueSpec pspec;
    const QueueModel heavy = QueueModel::pareto(pspec.shape_alpha,
                                                pspec.min_runtime);
    double worst_margin = 1e300;
    for (int k = 0; k < 5; ++k) {
        const double lam = 0.1 * (k + 1) * pspec.rate_sup();
        const double law = pareto_expected_wait(lam, pspec);
        SimConfig cfg;
        cfg.arrival_rate = lam;
        cfg.service = heavy;
        cfg.total_jobs = 22'222'222;  // two thousand batches' worth measured
        cfg.seed = 11000 + static_cast<std::uint64_t>(k);
        cfg.policy = MissPolicy::ServeLate;
        const SimStats stats = simulate_pool(cfg, law);
        const double gap = std::fabs(stats.transform_wait - law);
        const double hw = stats.transform_wait_halfwidth;
        worst_margin = std::min(worst_margin, hw - gap);
        if (!(gap <= hw)) {
            detail = strf("rate %.6f: tilted wait %.6f vs law %.6f, CI "
                          "halfwidth %.6f",
                          lam, stats.transform_wait, law, hw);
            return false;
        }
    }
    detail = strf("miss fractions in band; worst CI margin %.4f",
                  worst_margin);
    return true;
}

// Check 9: the full experiment battery. Every grid cell improves on its
// single-level restriction, and within the compact weight class the
// largest improvement sits at fleet 800 with shape value 0.75.
bool check_battery(std::string& detail) {
    Scenario sc;
    const auto records = run_optimal_solutions(sc);
    int grid_cells = 0;
    const RunRecord* extreme = nullptr;
    for (const auto& rec : records) {
        if (rec.probe) continue;
        ++grid_cells;
        if (rec.improvement <= 0.0) {
            detail = strf("cell %s: improvement %+.2f%%", rec.id.c_str(),
                          100.0 * rec.improvement);
            return false;
        }
        if (rec.weights == WeightScheme::Compact &&
            (extreme == nullptr || rec.improvement > extreme->improvement))
            extreme = &rec;
    }
    if (grid_cells != 18) {
        detail = strf("expected 18 grid cells, got %d", grid_cells);
        return false;
    }
    if (extreme == nullptr || extreme->fleet != 800 ||
        extreme->shape_value != 0.75) {
        detail = strf("compact extreme at %s", extreme ? extreme->id.c_str()
                                                       : "(none)");
        return false;
    }
    detail = strf("18 cells positive; compact extreme %s at %+.2f%%",
                  extreme->id.c_str(), 100.0 * extreme->improvement);
    return true;
}

struct Check {
    const char* name;
    double budget_seconds;  // 0 = no budget enforced by the harness
    bool (*run)(std::string&);
};

}  // namespace

int main() {
    const std::vector<Check> checks = {
        {"admissible-rate grid under the 5% deadline-miss target", 1.0,
         check_admissible_grid},
        {"heavy-tail utilization at promised wait 0.05", 1.0,
         check_heavy_anchor},
        {"fleet-800 reference cell: menu, allocation, improvement", 0.0,
         check_reference_cell_800},
        {"fleet-1600/2400 reference cells: cuts, servers, prices", 0.0,
         check_reference_cells_wide},
        {"improvement monotone in fleet, shape value, and weights", 0.0,
         check_monotonicity},
        {"capacity planner equals brute force on the full battery", 30.0,
         check_planner_oracle},
        {"pricing sweep beats a 400x400 price grid within one cell", 120.0,
         check_pricer_oracle},
        {"simulated misses and heavy-tail waits match the laws", 300.0,
         check_simulator},
        {"experiment battery: all improvements positive, extreme cell", 0.0,
         check_battery},
    };

    int failures = 0;
    for (std::size_t i = 0; i < checks.size(); ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        std::string detail;
        bool ok = false;
        try {
            ok = checks[i].run(detail);
        } catch (const std::exception& e) {
            detail = strf("exception: %s", e.what());
            ok = false;
        }
        const double secs = seconds_since(t0);
        if (ok && checks[i].budget_seconds > 0.0 &&
            secs > checks[i].budget_seconds) {
            ok = false;
            detail += strf("; runtime %.2f s over budget %.0f s", secs,
                           checks[i].budget_seconds);
        }
        std::printf("[%zu/9] %s  %s  (%.2f s)%s%s\n", i + 1,
                    ok ? "PASS" : "FAIL", checks[i].name, secs,
                    detail.empty() ? "" : " -- ", detail.c_str());
        std::fflush(stdout);
        if (!ok) ++failures;
    }
    if (failures == 0)
        std::printf("all 9 checks passed\n");
    else
        std::printf("%d of 9 checks FAILED\n", failures);
    return failures == 0 ? 0 : 1;
}
