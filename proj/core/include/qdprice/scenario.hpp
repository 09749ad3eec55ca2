#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "qdprice/market.hpp"
#include "qdprice/pricer.hpp"
#include "qdprice/queueing.hpp"
#include "qdprice/sim.hpp"

namespace qdp {

// ---------------------------------------------------------------------------
// Synthetic tenant populations.
// ---------------------------------------------------------------------------

enum class WeightScheme { Compact, Loose };

// "compact" / "loose" (used in scenario files, ids, and tables).
const char* weight_scheme_name(WeightScheme scheme);

// Weight of 1-based user i out of num_users:
//   Compact: 2*num_users + 1 - i   (50 users: 100 down to 51, ratio ~2)
//   Loose:   1 + (num_users - i) * 0.4  (50 users: 20.6 down to 1, ratio ~20)
double scheme_weight(WeightScheme scheme, int i, int num_users);

// num_users tenants with scheme weights, a common per-user arrival rate,
// and a shared value curve.
UserPopulation build_population(WeightScheme scheme, int num_users,
                                double rate_per_user,
                                const UtilityShape& shape);

// ---------------------------------------------------------------------------
// Scenario: one experiment configuration, loadable from a text file.
// ---------------------------------------------------------------------------

struct Scenario {
    QueueModel model = QueueModel::exponential(1.0, 0.05);
    std::vector<double> menu_waits{0.0, 1.0, 2.0, 4.0, 8.0};
    int num_users = 50;
    double rate_per_user = 20.0;
    bool log_shape = false;  // value curves: power(v) by default, log(v) else
    std::vector<WeightScheme> weight_schemes{WeightScheme::Compact,
                                             WeightScheme::Loose};
    std::vector<int> fleet_sizes{800, 1600, 2400};
    // Battery grid of curve parameters (beta for power, epsilon for log).
    std::vector<double> shape_values{0.25, 0.45, 0.75};
    // Extra off-grid cells run alongside the battery and labeled as probes.
    std::vector<double> probe_shape_values{0.2, 0.5};
    std::uint64_t seed = 1;
    long long sim_jobs = 200000;  // simulation horizon (jobs, incl. warmup)

    // Throws std::domain_error / std::invalid_argument when any field is
    // outside its module's domain (including menu waits outside the service
    // model's wait domain).
    void validate() const;

    // The scenario's value curve at one grid value.
    UtilityShape make_shape(double shape_value) const;

    // The tenant population for one battery cell.
    UserPopulation population(WeightScheme scheme, double shape_value) const;

    // Parse a line-oriented `key = value` stream. `#` starts a comment,
    // blank lines are skipped, later keys overwrite earlier ones, list
    // values are space-separated. Unknown keys and malformed values throw
    // std::invalid_argument naming the offending line. Keys:
    //   model (exponential|pareto), mu, miss_target, alpha, min_runtime,
    //   waits, users, rate_per_user, shape (power|log), shape_values,
    //   probe_shape_values, weights (compact|loose|both), fleets, seed,
    //   sim_jobs
    static Scenario parse(std::istream& in);

    // parse() on the file's contents; std::invalid_argument when the file
    // cannot be read.
    static Scenario load(const std::string& path);
};

// ---------------------------------------------------------------------------
// Experiment runners.
// ---------------------------------------------------------------------------

// One point of the admissible-load curve.
struct QosPoint {
    double phi = 0.0;
    double lambda_max = 0.0;    // largest admissible per-server rate
    double utilization = 0.0;   // busy fraction at that rate
};

// The admissible-load curve of a service model over a wait grid. Every phi
// must lie in the model's wait domain.
std::vector<QosPoint> run_qos_curve(const QueueModel& model,
                                    const std::vector<double>& phi_grid);

// Result of one battery cell: the optimizer's solution against the
// single-level baseline menu (the strictest wait only).
struct RunRecord {
    std::string id;       // "<weights>-m<fleet>-v<shape value>"
    bool probe = false;   // true for the off-grid sensitivity cells
    WeightScheme weights = WeightScheme::Compact;
    int fleet = 0;
    double shape_value = 0.0;
    PricingSolution solution;
    double baseline_revenue = 0.0;
    double improvement = 0.0;  // solution revenue / baseline revenue - 1
};

// r = ours / baseline - 1. Domain error when baseline is not > 0.
double improvement_ratio(double ours, double baseline);

// Solve every battery cell: the main grid (weight scheme x fleet x shape
// value) in scenario order, then the probe cells. Each cell runs the full
// pricing sweep plus the single-level baseline; `workers` parallelizes the
// per-cell candidate sweep (cell order and results are identical for any
// worker count).
std::vector<RunRecord> run_optimal_solutions(const Scenario& scenario,
                                             int workers = 1);

// Same battery with full control over the sweep options (worker count and
// the epsilon undercut).
std::vector<RunRecord> run_optimal_solutions(const Scenario& scenario,
                                             const PricingOptions& options);

// One law-versus-simulation comparison row.
struct CrosscheckRow {
    std::string unit;      // row label, e.g. "exp-phi2" or "heavy-tail"
    std::uint64_t seed = 0;
    double arrival_rate = 0.0;
    double phi = 0.0;
    int servers = 1;
    // Closed-form values where the law exists for the simulated policy
    // (served-late, so utilization/wait/exceedance laws are exact for the
    // exponential rows; the heavy-tailed row has no exceedance law).
    std::optional<double> analytic_utilization;
    std::optional<double> analytic_wait;
    std::optional<double> analytic_miss;
    // For heavy-tailed service the wait comparison uses the tilted
    // (certainty-equivalent) wait statistic, the functional the wait law
    // describes; for exponential rows it is the plain mean wait.
    bool wait_is_transform = false;
    SimStats sim;

    double simulated_wait() const {
        return wait_is_transform ? sim.transform_wait : sim.mean_wait;
    }
    double simulated_wait_halfwidth() const {
        return wait_is_transform ? sim.transform_wait_halfwidth
                                 : sim.mean_wait_halfwidth;
    }
};

// Simulate one single-server unit per menu wait at its admissible-rate
// limit under the served-late policy (all three laws are closed-form
// there), plus a zero-rate unit and an in-domain heavy-tailed unit, for
// each seed. `jobs` is the per-unit simulation horizon including warmup.
std::vector<CrosscheckRow> run_simulation_crosscheck(
    const Scenario& scenario, const std::vector<std::uint64_t>& seeds,
    long long jobs);

}  // namespace qdp
