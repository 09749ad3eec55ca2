#include "qdprice/scenario.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace qdp {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

[[noreturn]] void fail_line(int line, const std::string& what) {
    throw std::invalid_argument("scenario line " + std::to_string(line) +
                                ": " + what);
}

double parse_double(std::string_view token, int line) {
    double v = 0.0;
    const auto* end = token.data() + token.size();
    const auto res = std::from_chars(token.data(), end, v);
    if (res.ec != std::errc{} || res.ptr != end)
        fail_line(line, "expected a number, got '" + std::string(token) + "'");
    return v;
}

long long parse_integer(std::string_view token, int line) {
    long long v = 0;
    const auto* end = token.data() + token.size();
    const auto res = std::from_chars(token.data(), end, v);
    if (res.ec != std::errc{} || res.ptr != end)
        fail_line(line,
                  "expected an integer, got '" + std::string(token) + "'");
    return v;
}

std::uint64_t parse_u64(std::string_view token, int line) {
    std::uint64_t v = 0;
    const auto* end = token.data() + token.size();
    const auto res = std::from_chars(token.data(), end, v);
    if (res.ec != std::errc{} || res.ptr != end)
        fail_line(line, "expected an unsigned integer, got '" +
                            std::string(token) + "'");
    return v;
}

std::vector<std::string> split_tokens(std::string_view value) {
    std::vector<std::string> tokens;
    std::istringstream in{std::string(value)};
    std::string tok;
    while (in >> tok) tokens.push_back(tok);
    return tokens;
}

std::vector<double> parse_double_list(std::string_view value, int line) {
    std::vector<double> out;
    for (const auto& tok : split_tokens(value))
        out.push_back(parse_double(tok, line));
    return out;
}

std::vector<int> parse_int_list(std::string_view value, int line) {
    std::vector<int> out;
    for (const auto& tok : split_tokens(value))
        out.push_back(static_cast<int>(parse_integer(tok, line)));
    return out;
}

std::string format_value(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

}  // namespace

const char* weight_scheme_name(WeightScheme scheme) {
    return scheme == WeightScheme::Compact ? "compact" : "loose";
}

double scheme_weight(WeightScheme scheme, int i, int num_users) {
    if (num_users < 1)
        throw std::domain_error("scheme_weight: num_users must be >= 1");
    if (i < 1 || i > num_users)
        throw std::domain_error("scheme_weight: user index out of range");
    if (scheme == WeightScheme::Compact)
        return static_cast<double>(2 * num_users + 1 - i);
    return 1.0 + (num_users - i) * 0.4;
}

UserPopulation build_population(WeightScheme scheme, int num_users,
                                double rate_per_user,
                                const UtilityShape& shape) {
    UserPopulation pop;
    pop.shape = shape;
    pop.users.reserve(static_cast<std::size_t>(num_users));
    for (int i = 1; i <= num_users; ++i)
        pop.users.push_back({scheme_weight(scheme, i, num_users),
                             rate_per_user});
    pop.validate();
    return pop;
}

void Scenario::validate() const {
    model.validate();
    SlaMenu{menu_waits, {}}.validate();
    // Every promised wait must lie in the model's wait domain (heavy-tailed
    // service admits no zero-wait promise); the strictest wait suffices
    // since admissible rates are increasing in the wait.
    (void)model.lambda_max(menu_waits.front());
    if (num_users < 1)
        throw std::domain_error("Scenario: users must be >= 1");
    if (!(rate_per_user > 0.0))
        throw std::domain_error("Scenario: rate_per_user must be > 0");
    if (weight_schemes.empty())
        throw std::domain_error("Scenario: at least one weight scheme");
    if (fleet_sizes.empty())
        throw std::domain_error("Scenario: at least one fleet size");
    for (int m : fleet_sizes)
        if (m < 1) throw std::domain_error("Scenario: fleet sizes must be >= 1");
    if (shape_values.empty())
        throw std::domain_error("Scenario: at least one shape value");
    for (double v : shape_values) make_shape(v).validate();
    for (double v : probe_shape_values) make_shape(v).validate();
    if (sim_jobs <= 0)
        throw std::domain_error("Scenario: sim_jobs must be > 0");
}

UtilityShape Scenario::make_shape(double shape_value) const {
    return log_shape ? UtilityShape::logarithmic(shape_value)
                     : UtilityShape::power(shape_value);
}

UserPopulation Scenario::population(WeightScheme scheme,
                                    double shape_value) const {
    return build_population(scheme, num_users, rate_per_user,
                            make_shape(shape_value));
}

Scenario Scenario::parse(std::istream& in) {
    Scenario s;
    bool pareto_model = false;
    double mu = 1.0, miss_target = 0.05;
    double alpha = 1.4, min_runtime = 1.0 / 6.0;

    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        std::string_view text{raw};
        if (const auto hash = text.find('#'); hash != std::string_view::npos)
            text = text.substr(0, hash);
        text = trim(text);
        if (text.empty()) continue;

        const auto eq = text.find('=');
        if (eq == std::string_view::npos)
            fail_line(line, "expected 'key = value'");
        const std::string key{trim(text.substr(0, eq))};
        const std::string_view value = trim(text.substr(eq + 1));

        if (key == "model") {
            if (value == "exponential")
                pareto_model = false;
            else if (value == "pareto")
                pareto_model = true;
            else
                fail_line(line, "model must be 'exponential' or 'pareto'");
        } else if (key == "mu") {
            mu = parse_double(value, line);
        } else if (key == "miss_target") {
            miss_target = parse_double(value, line);
        } else if (key == "alpha") {
            alpha = parse_double(value, line);
        } else if (key == "min_runtime") {
            min_runtime = parse_double(value, line);
        } else if (key == "waits") {
            s.menu_waits = parse_double_list(value, line);
        } else if (key == "users") {
            s.num_users = static_cast<int>(parse_integer(value, line));
        } else if (key == "rate_per_user") {
            s.rate_per_user = parse_double(value, line);
        } else if (key == "shape") {
            if (value == "power")
                s.log_shape = false;
            else if (value == "log")
                s.log_shape = true;
            else
                fail_line(line, "shape must be 'power' or 'log'");
        } else if (key == "shape_values") {
            s.shape_values = parse_double_list(value, line);
        } else if (key == "probe_shape_values") {
            s.probe_shape_values = parse_double_list(value, line);
        } else if (key == "weights") {
            if (value == "compact")
                s.weight_schemes = {WeightScheme::Compact};
            else if (value == "loose")
                s.weight_schemes = {WeightScheme::Loose};
            else if (value == "both")
                s.weight_schemes = {WeightScheme::Compact,
                                    WeightScheme::Loose};
            else
                fail_line(line, "weights must be 'compact', 'loose' or 'both'");
        } else if (key == "fleets") {
            s.fleet_sizes = parse_int_list(value, line);
        } else if (key == "seed") {
            s.seed = parse_u64(value, line);
        } else if (key == "sim_jobs") {
            s.sim_jobs = parse_integer(value, line);
        } else {
            fail_line(line, "unknown key '" + key + "'");
        }
    }

    s.model = pareto_model ? QueueModel::pareto(alpha, min_runtime)
                           : QueueModel::exponential(mu, miss_target);
    return s;
}

Scenario Scenario::load(const std::string& path) {
    std::ifstream in{path};
    if (!in)
        throw std::invalid_argument("cannot read scenario file: " + path);
    return parse(in);
}

std::vector<QosPoint> run_qos_curve(const QueueModel& model,
                                    const std::vector<double>& phi_grid) {
    model.validate();
    std::vector<QosPoint> curve;
    curve.reserve(phi_grid.size());
    for (double phi : phi_grid) {
        const double lam = model.lambda_max(phi);
        curve.push_back({phi, lam, model.utilization(lam)});
    }
    return curve;
}

double improvement_ratio(double ours, double baseline) {
    if (!(baseline > 0.0))
        throw std::domain_error("improvement_ratio: baseline must be > 0");
    return ours / baseline - 1.0;
}

std::vector<RunRecord> run_optimal_solutions(const Scenario& scenario,
                                             int workers) {
    PricingOptions options;
    options.workers = workers;
    return run_optimal_solutions(scenario, options);
}

std::vector<RunRecord> run_optimal_solutions(const Scenario& scenario,
                                             const PricingOptions& options) {
    scenario.validate();
    if (options.workers < 1)
        throw std::invalid_argument("run_optimal_solutions: workers >= 1");

    const std::vector<double> baseline_waits{scenario.menu_waits.front()};

    std::vector<RunRecord> records;
    auto run_cell = [&](WeightScheme scheme, int fleet, double value,
                        bool probe) {
        RunRecord rec;
        rec.probe = probe;
        rec.weights = scheme;
        rec.fleet = fleet;
        rec.shape_value = value;
        rec.id = std::string(weight_scheme_name(scheme)) + "-m" +
                 std::to_string(fleet) + "-v" + format_value(value);
        const UserPopulation pop = scenario.population(scheme, value);
        rec.solution = optimize_prices(fleet, pop, scenario.menu_waits,
                                       scenario.model, options);
        rec.baseline_revenue =
            optimize_prices(fleet, pop, baseline_waits, scenario.model,
                            options)
                .total_unit_revenue;
        rec.improvement = improvement_ratio(rec.solution.total_unit_revenue,
                                            rec.baseline_revenue);
        records.push_back(std::move(rec));
    };

    for (WeightScheme scheme : scenario.weight_schemes)
        for (int fleet : scenario.fleet_sizes)
            for (double value : scenario.shape_values)
                run_cell(scheme, fleet, value, false);
    for (WeightScheme scheme : scenario.weight_schemes)
        for (int fleet : scenario.fleet_sizes)
            for (double value : scenario.probe_shape_values)
                run_cell(scheme, fleet, value, true);
    return records;
}

std::vector<CrosscheckRow> run_simulation_crosscheck(
    const Scenario& scenario, const std::vector<std::uint64_t>& seeds,
    long long jobs) {
    scenario.validate();
    if (seeds.empty())
        throw std::invalid_argument(
            "run_simulation_crosscheck: at least one seed");
    if (jobs <= 0)
        throw std::domain_error("run_simulation_crosscheck: jobs must be > 0");

    std::vector<CrosscheckRow> rows;
    auto simulate_row = [&](CrosscheckRow proto, const QueueModel& model) {
        for (std::uint64_t seed : seeds) {
            CrosscheckRow row = proto;
            row.seed = seed;
            SimConfig cfg;
            cfg.arrival_rate = row.arrival_rate;
            cfg.servers = row.servers;
            cfg.service = model;
            cfg.total_jobs = jobs;
            cfg.seed = seed;
            cfg.policy = MissPolicy::ServeLate;
            row.sim = simulate_pool(cfg, row.phi);
            rows.push_back(std::move(row));
        }
    };

    // One single-server unit per menu wait, loaded at the admissible-rate
    // limit. Under the served-late policy the laws are exact: exponential
    // rows have closed forms for all three statistics; heavy-tailed rows
    // for the busy fraction and the (tilted) wait.
    for (double w : scenario.menu_waits) {
        CrosscheckRow row;
        row.phi = w;
        row.arrival_rate = scenario.model.lambda_max(w);
        if (const auto* e =
                std::get_if<ExponentialQueueSpec>(&scenario.model.spec)) {
            const double rho = row.arrival_rate / e->mu;
            row.unit = "exp-phi" + format_value(w);
            row.analytic_utilization = rho;
            row.analytic_wait = rho / (e->mu - row.arrival_rate);
            row.analytic_miss =
                rho * std::exp(-(e->mu - row.arrival_rate) * w);
        } else {
            row.unit = "heavy-phi" + format_value(w);
            row.analytic_utilization =
                row.arrival_rate * scenario.model.mean_runtime();
            row.analytic_wait = w;  // the admissible limit grants exactly w
            row.wait_is_transform = true;
        }
        simulate_row(row, scenario.model);
    }

    // A zero-rate unit: every statistic is exactly zero.
    {
        CrosscheckRow row;
        row.unit = "idle";
        row.phi = scenario.menu_waits.front();
        row.analytic_utilization = 0.0;
        row.analytic_wait = 0.0;
        row.analytic_miss = 0.0;
        simulate_row(row, scenario.model);
    }

    // A heavy-tailed in-domain unit at 30% busy fraction, promised its own
    // law wait. Included regardless of the scenario model so the table
    // always carries one heavy-tailed comparison.
    {
        const ParetoQueueSpec heavy{1.4, 1.0 / 6.0};
        CrosscheckRow row;
        row.unit = "heavy-tail";
        row.arrival_rate = 0.3 * heavy.rate_sup();
        row.phi = pareto_expected_wait(row.arrival_rate, heavy);
        row.analytic_utilization = row.arrival_rate * heavy.mean_runtime();
        row.analytic_wait = row.phi;
        row.wait_is_transform = true;
        simulate_row(row, QueueModel::pareto(heavy.shape_alpha,
                                             heavy.min_runtime));
    }
    return rows;
}

}  // namespace qdp
