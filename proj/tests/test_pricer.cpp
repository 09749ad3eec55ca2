#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "qdprice/pricer.hpp"
#include "support/pricer_oracle.hpp"

using namespace qdp;

namespace {

double rel_err(double got, double want) {
    return std::fabs(got - want) / std::max(1.0, std::fabs(want));
}

// Fifty tenant classes with tightly packed weights 100, 99, ..., 51 and a
// shared per-class arrival rate of 20 jobs per unit time.
UserPopulation compact_population(UtilityShape shape) {
    UserPopulation pop;
    pop.shape = shape;
    for (int i = 1; i <= 50; ++i)
        pop.users.push_back({101.0 - i, 20.0});
    return pop;
}

const std::vector<double> kMenuWaits{0.0, 1.0, 2.0, 4.0, 8.0};

}  // namespace

TEST_CASE("breakpoint prices reproduce the reference chains") {
    // Reference values computed with 25-digit arbitrary-precision
    // arithmetic from the indifference recursion.
    const UserPopulation pop = compact_population(UtilityShape::power(0.45));

    SUBCASE("two slow levels, cuts at ranks 18 and 26") {
        const Breakpoints bp{{3, 4}, {18, 26}};
        const auto prices = breakpoint_prices(bp, pop, kMenuWaits);
        REQUIRE(prices.has_value());
        REQUIRE(prices->size() == 2);
        CHECK(rel_err((*prices)[0], 57.926394116228778) < 1e-13);
        CHECK(rel_err((*prices)[1], 40.72538453821646) < 1e-13);
    }
    SUBCASE("three levels, cuts at ranks 9, 37, 38") {
        const Breakpoints bp{{2, 3, 4}, {9, 37, 38}};
        const auto prices = breakpoint_prices(bp, pop, kMenuWaits);
        REQUIRE(prices.has_value());
        REQUIRE(prices->size() == 3);
        CHECK(rel_err((*prices)[0], 69.863203360568605) < 1e-13);
        CHECK(rel_err((*prices)[1], 47.472752084304098) < 1e-13);
        CHECK(rel_err((*prices)[2], 34.209323012101827) < 1e-13);
    }
    SUBCASE("three levels, cuts at ranks 26, 41, 44") {
        const Breakpoints bp{{2, 3, 4}, {26, 41, 44}};
        const auto prices = breakpoint_prices(bp, pop, kMenuWaits);
        REQUIRE(prices.has_value());
        REQUIRE(prices->size() == 3);
        CHECK(rel_err((*prices)[0], 61.638842283797594) < 1e-13);
        CHECK(rel_err((*prices)[1], 43.385757004234137) < 1e-13);
        CHECK(rel_err((*prices)[2], 30.951292249044513) < 1e-13);
    }
}

TEST_CASE("price chain collapses on a malformed wait sequence") {
    UserPopulation pop;
    pop.shape = UtilityShape::power(0.45);
    pop.users = {{10.0, 1.0}, {6.0, 1.0}};
    // Decreasing waits invert the indifference gaps, so the induced chain
    // is not strictly decreasing and the candidate must be rejected.
    const Breakpoints bp{{0, 1}, {1, 2}};
    CHECK_FALSE(breakpoint_prices(bp, pop, {8.0, 4.0}).has_value());
    CHECK(breakpoint_prices(bp, pop, {4.0, 8.0}).has_value());
}

TEST_CASE("breakpoint validation rejects malformed candidates") {
    const UserPopulation pop = compact_population(UtilityShape::power(0.45));
    const auto check_throws = [&](Breakpoints bp) {
        CHECK_THROWS_AS(breakpoint_prices(bp, pop, kMenuWaits),
                        std::invalid_argument);
    };
    check_throws({{}, {}});                 // empty
    check_throws({{0, 1}, {5}});            // length mismatch
    check_throws({{1, 0}, {3, 7}});         // offered not ascending
    check_throws({{0, 5}, {3, 7}});         // offered out of range
    check_throws({{0, 1}, {7, 7}});         // cuts not increasing
    check_throws({{0, 1}, {0, 7}});         // rank zero
    check_throws({{0, 1}, {3, 51}});        // rank beyond the population
}

TEST_CASE("candidate count follows the subset-and-cuts formula") {
    CHECK(candidate_count(50, 5) == 3478760ULL);
    CHECK(candidate_count(6, 3) == 83ULL);
    CHECK(candidate_count(8, 2) == 44ULL);
    CHECK(candidate_count(1, 1) == 1ULL);
    CHECK(candidate_count(3, 5) == 55ULL);
    CHECK(candidate_count(0, 3) == 0ULL);
    CHECK_THROWS_AS(candidate_count(-1, 2), std::domain_error);
}

TEST_CASE("optimizer sweeps the full candidate space") {
    const QueueModel model = QueueModel::exponential(1.0, 0.05);

    UserPopulation pop;
    pop.shape = UtilityShape::power(0.45);
    for (int i = 0; i < 6; ++i)
        pop.users.push_back({30.0 - 4.0 * i, 2.0});
    const auto sol = optimize_prices(10, pop, {0.0, 1.0, 3.0}, model);
    CHECK(sol.candidates_evaluated == candidate_count(6, 3));

    UserPopulation pop8;
    pop8.shape = UtilityShape::logarithmic(0.4);
    for (int i = 0; i < 8; ++i)
        pop8.users.push_back({25.0 - 2.5 * i, 1.5});
    const auto sol8 = optimize_prices(6, pop8, {0.5, 2.0}, model);
    CHECK(sol8.candidates_evaluated == candidate_count(8, 2));
}

TEST_CASE("exact revenue ties resolve toward the simplest menu") {
    // Dyadic construction: beta = 1/2 makes P(0) = 2 and P(3) = 1 exactly,
    // the miss target 0.2 pins the zero-wait admissible rate at 1/4 and
    // the wait-3 admissible rate at 1 (the heavy-traffic corner), and all
    // per-server rates below are dyadic rationals, so three rival
    // candidates earn bitwise-identical revenue 16:
    //   offer {0} cut (1):    price 16, demand 1,      4 servers
    //   offer {0} cut (2):    price 4,  demand 4,     16 servers
    //   offer {0,3} cuts (1,2): prices (10, 2), demands (1, 3), 7 servers
    const QueueModel model = QueueModel::exponential(1.0, 0.2);
    UserPopulation pop;
    pop.shape = UtilityShape::power(0.5);
    pop.users = {{8.0, 1.0}, {2.0, 3.0}};
    const std::vector<double> waits{0.0, 3.0};

    REQUIRE(rel_err(model.lambda_max(0.0), 0.25) < 1e-9);
    REQUIRE(rel_err(model.lambda_max(3.0), 1.0) < 1e-9);
    REQUIRE(pop.shape.value(0.0) == 2.0);
    REQUIRE(pop.shape.value(3.0) == 1.0);

    const double rev_fast_one =
        plan_capacity(32, {1.0}, SlaMenu{{0.0}, {16.0}}, model)
            .total_unit_revenue;
    const double rev_fast_both =
        plan_capacity(32, {4.0}, SlaMenu{{0.0}, {4.0}}, model)
            .total_unit_revenue;
    const double rev_pair =
        plan_capacity(32, {1.0, 3.0}, SlaMenu{{0.0, 3.0}, {10.0, 2.0}}, model)
            .total_unit_revenue;
    REQUIRE(rev_fast_one == 16.0);
    REQUIRE(rev_fast_both == 16.0);
    REQUIRE(rev_pair == 16.0);

    for (const int workers : {1, 3}) {
        const auto sol =
            optimize_prices(32, pop, waits, model, {.workers = workers});
        CHECK(sol.total_unit_revenue == 16.0);
        CHECK(sol.breakpoints.offered == std::vector<int>{0});
        CHECK(sol.breakpoints.cut_users == std::vector<int>{1});
        REQUIRE(sol.menu.prices.size() == 1);
        CHECK(sol.menu.prices[0] == 16.0);
    }
}

TEST_CASE("optimizer matches a dense price grid on small menus") {
    const auto instances = testsupport::pricer_oracle_instances();
    for (std::size_t i = 0; i < 6; ++i) {
        const auto& inst = instances[i];
        CAPTURE(i);
        const auto ref = testsupport::price_grid_best(inst, 120);
        const auto sol =
            optimize_prices(inst.m, inst.pop, inst.waits, inst.model);
        CHECK(sol.total_unit_revenue >= ref.best_revenue - ref.slack);
        CHECK(sol.total_unit_revenue <=
              ref.best_revenue + 2.0 * ref.slack + 1e-9);
    }
}

TEST_CASE("returned solution is self-consistent") {
    const auto instances = testsupport::pricer_oracle_instances();
    for (const std::size_t i : {0u, 3u, 7u, 11u, 14u, 19u}) {
        const auto& inst = instances[i];
        CAPTURE(i);
        const auto sol =
            optimize_prices(inst.m, inst.pop, inst.waits, inst.model);
        REQUIRE_FALSE(sol.breakpoints.offered.empty());
        CHECK_NOTHROW(sol.menu.validate());
        REQUIRE(sol.menu.size() == sol.breakpoints.offered.size());
        for (std::size_t l = 0; l < sol.menu.size(); ++l)
            CHECK(sol.menu.waits[l] == inst.waits[sol.breakpoints.offered[l]]);

        // The published prices are exactly the breakpoint prices of the
        // winning candidate.
        const auto prices =
            breakpoint_prices(sol.breakpoints, inst.pop, inst.waits);
        REQUIRE(prices.has_value());
        for (std::size_t l = 0; l < prices->size(); ++l)
            CHECK(sol.menu.prices[l] == (*prices)[l]);

        // Users re-derive the intended contiguous bands from the prices.
        REQUIRE(sol.choices.size() == inst.pop.users.size());
        std::size_t level = 0;
        for (std::size_t u = 0; u < inst.pop.users.size(); ++u) {
            const int rank = static_cast<int>(u) + 1;
            while (level < sol.breakpoints.cut_users.size() &&
                   rank > sol.breakpoints.cut_users[level])
                ++level;
            const int want = level < sol.breakpoints.cut_users.size()
                                 ? static_cast<int>(level)
                                 : kOptOut;
            CHECK(sol.choices[u] == want);
            CHECK(sol.choices[u] ==
                  choose_sla(inst.pop.users[u], inst.pop.shape, sol.menu));
        }

        // The plan is the capacity plan of the induced demand, and the
        // sweep's streamlined revenue matches the published plan.
        const auto rates = aggregate_arrivals(inst.pop, sol.menu);
        const auto plan = plan_capacity(inst.m, rates, sol.menu, inst.model);
        CHECK(sol.plan.servers == plan.servers);
        CHECK(sol.plan.accepted_rates == plan.accepted_rates);
        CHECK(sol.total_unit_revenue == plan.total_unit_revenue);
        const auto caps = admissible_caps(sol.menu, inst.model);
        CHECK(rel_err(plan_capacity_revenue(inst.m, rates, caps,
                                            sol.menu.prices, inst.model),
                      sol.total_unit_revenue) < 1e-12);
    }
}

TEST_CASE("parallel sweep is deterministic across worker counts") {
    const QueueModel model = QueueModel::exponential(1.0, 0.05);
    UserPopulation pop;
    pop.shape = UtilityShape::power(0.45);
    for (int i = 0; i < 20; ++i)
        pop.users.push_back({60.0 - 2.7 * i, 3.0 + i % 4});
    const std::vector<double> waits{0.0, 0.8, 2.5, 6.0};
    const int m = 120;  // scarce: demand wants far more zero-wait servers

    const auto base = optimize_prices(m, pop, waits, model, {.workers = 1});
    CHECK(base.candidates_evaluated == candidate_count(20, 4));
    for (const int workers : {2, 5, 8}) {
        const auto sol =
            optimize_prices(m, pop, waits, model, {.workers = workers});
        CHECK(sol.breakpoints.offered == base.breakpoints.offered);
        CHECK(sol.breakpoints.cut_users == base.breakpoints.cut_users);
        CHECK(sol.menu.prices == base.menu.prices);
        CHECK(sol.total_unit_revenue == base.total_unit_revenue);
        CHECK(sol.candidates_evaluated == base.candidates_evaluated);
    }
}

TEST_CASE("epsilon undercut shaves prices without changing the winner") {
    const QueueModel model = QueueModel::exponential(1.0, 0.05);
    UserPopulation pop;
    pop.shape = UtilityShape::power(0.45);
    for (int i = 0; i < 20; ++i)
        pop.users.push_back({60.0 - 2.7 * i, 3.0 + i % 4});
    const std::vector<double> waits{0.0, 0.8, 2.5, 6.0};
    const int m = 120;

    const auto exact = optimize_prices(m, pop, waits, model);
    const auto shaved =
        optimize_prices(m, pop, waits, model, {.epsilon_undercut = true});
    CHECK(shaved.breakpoints.offered == exact.breakpoints.offered);
    CHECK(shaved.breakpoints.cut_users == exact.breakpoints.cut_users);
    CHECK(shaved.choices == exact.choices);
    REQUIRE(shaved.menu.prices.size() == exact.menu.prices.size());
    for (std::size_t l = 0; l < exact.menu.prices.size(); ++l)
        CHECK(rel_err(shaved.menu.prices[l],
                      exact.menu.prices[l] * (1.0 - 1e-6)) < 1e-15);
    CHECK(rel_err(shaved.total_unit_revenue, exact.total_unit_revenue) <
          1e-5);
}

TEST_CASE("a fleet of zero servers yields the empty market") {
    const QueueModel model = QueueModel::exponential(1.0, 0.05);
    const UserPopulation pop = compact_population(UtilityShape::power(0.45));
    const auto sol = optimize_prices(0, pop, kMenuWaits, model);
    CHECK(sol.menu.size() == 0);
    CHECK_FALSE(sol.menu.priced());
    CHECK(sol.breakpoints.offered.empty());
    CHECK(sol.total_unit_revenue == 0.0);
    CHECK(sol.candidates_evaluated == 0);
    CHECK(sol.plan.total_servers() == 0);
    REQUIRE(sol.choices.size() == pop.users.size());
    for (int c : sol.choices) CHECK(c == kOptOut);
}

TEST_CASE("single tenant, single level") {
    const QueueModel model = QueueModel::exponential(1.2, 0.05);
    UserPopulation pop;
    pop.shape = UtilityShape::logarithmic(0.25);
    pop.users = {{5.0, 2.0}};
    const auto sol = optimize_prices(3, pop, {1.5}, model);
    CHECK(sol.candidates_evaluated == 1);
    CHECK(sol.breakpoints.offered == std::vector<int>{0});
    CHECK(sol.breakpoints.cut_users == std::vector<int>{1});
    REQUIRE(sol.menu.prices.size() == 1);
    CHECK(sol.menu.prices[0] == 5.0 * pop.shape.value(1.5));
    const auto plan =
        plan_capacity(3, {2.0}, sol.menu, model);
    CHECK(sol.total_unit_revenue == plan.total_unit_revenue);
}

TEST_CASE("optimizer rejects invalid inputs") {
    const QueueModel model = QueueModel::exponential(1.0, 0.05);
    const UserPopulation pop = compact_population(UtilityShape::power(0.45));
    UserPopulation empty;
    CHECK_THROWS_AS(optimize_prices(10, empty, kMenuWaits, model),
                    std::invalid_argument);
    CHECK_THROWS_AS(optimize_prices(10, pop, {}, model),
                    std::domain_error);
    CHECK_THROWS_AS(optimize_prices(10, pop, {0.0, 0.0}, model),
                    std::domain_error);
    CHECK_THROWS_AS(optimize_prices(-1, pop, kMenuWaits, model),
                    std::domain_error);
    CHECK_THROWS_AS(
        optimize_prices(10, pop, kMenuWaits, model, {.workers = 0}),
        std::invalid_argument);
}

TEST_CASE("compact market reference solution at eight hundred servers") {
    // End-to-end sweep over all 3,478,760 candidates. Reference values
    // computed with 25-digit arbitrary-precision arithmetic.
    const QueueModel model = QueueModel::exponential(1.0, 0.05);
    const UserPopulation pop = compact_population(UtilityShape::power(0.45));
    const auto sol =
        optimize_prices(800, pop, kMenuWaits, model, {.workers = 4});

    CHECK(sol.candidates_evaluated == 3478760ULL);
    CHECK(sol.breakpoints.offered == std::vector<int>({3, 4}));
    CHECK(sol.breakpoints.cut_users == std::vector<int>({18, 26}));
    REQUIRE(sol.menu.prices.size() == 2);
    CHECK(rel_err(sol.menu.prices[0], 57.926394116228778) < 1e-13);
    CHECK(rel_err(sol.menu.prices[1], 40.72538453821646) < 1e-13);
    CHECK(sol.plan.servers == std::vector<int>({612, 188}));
    CHECK(sol.plan.accepted_rates == std::vector<double>({360.0, 160.0}));
    CHECK(rel_err(sol.total_unit_revenue, 27369.563408033426) < 1e-11);
    for (int u = 0; u < 18; ++u) CHECK(sol.choices[u] == 0);
    for (int u = 18; u < 26; ++u) CHECK(sol.choices[u] == 1);
    for (int u = 26; u < 50; ++u) CHECK(sol.choices[u] == kOptOut);
}
