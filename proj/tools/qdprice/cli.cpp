#include "qdprice/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <variant>
#include <vector>

#include "CLI11.hpp"

#include "qdprice/market.hpp"
#include "qdprice/pricer.hpp"
#include "qdprice/queueing.hpp"
#include "qdprice/scenario.hpp"
#include "qdprice/sim.hpp"

namespace qdp::cli {
namespace {

namespace fs = std::filesystem;

std::string fmt(const char* spec, double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

// Full round-trip precision for CSV fields; short form for screen tables.
std::string g17(double v) { return fmt("%.17g", v); }
std::string g6(double v) { return fmt("%.6g", v); }
std::string pct(double ratio) { return fmt("%+.2f", 100.0 * ratio); }

std::string opt_g17(const std::optional<double>& v) {
    return v ? g17(*v) : std::string{};
}

// Fixed-width text table: first column left-aligned, the rest right-aligned.
class Table {
  public:
    explicit Table(std::vector<std::string> header)
        : header_(std::move(header)) {}

    void row(std::vector<std::string> cells) { rows_.push_back(std::move(cells)); }

    void print(std::ostream& out) const {
        std::vector<std::size_t> width(header_.size(), 0);
        auto widen = [&](const std::vector<std::string>& cells) {
            for (std::size_t c = 0; c < cells.size() && c < width.size(); ++c)
                width[c] = std::max(width[c], cells[c].size());
        };
        widen(header_);
        for (const auto& r : rows_) widen(r);

        auto line = [&](const std::vector<std::string>& cells) {
            std::string text = "  ";
            for (std::size_t c = 0; c < width.size(); ++c) {
                const std::string cell = c < cells.size() ? cells[c] : "";
                if (c > 0) text += "  ";
                const std::string pad(width[c] - cell.size(), ' ');
                text += (c == 0) ? cell + pad : pad + cell;
            }
            while (!text.empty() && text.back() == ' ') text.pop_back();
            out << text << '\n';
        };
        line(header_);
        for (const auto& r : rows_) line(r);
    }

  private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

// One CSV output file: a single header row, comma-separated fields, decimal
// points regardless of locale (all numbers are preformatted with snprintf,
// and the C locale is never changed).
class CsvFile {
  public:
    CsvFile(const fs::path& path, const std::string& header)
        : path_(path), file_(path) {
        if (!file_)
            throw std::runtime_error("cannot write " + path.string());
        file_ << header << '\n';
    }

    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i > 0) file_ << ',';
            file_ << cells[i];
        }
        file_ << '\n';
    }

    const fs::path& path() const { return path_; }

  private:
    fs::path path_;
    std::ofstream file_;
};

std::string model_description(const QueueModel& model) {
    if (model.is_exponential()) {
        const auto& s = std::get<ExponentialQueueSpec>(model.spec);
        return "exponential service (rate " + g6(s.mu) +
               ", deadline-miss target " + g6(s.miss_target) + ")";
    }
    const auto& s = std::get<ParetoQueueSpec>(model.spec);
    return "heavy-tailed service (tail index " + g6(s.shape_alpha) +
           ", minimum runtime " + g6(s.min_runtime) + ")";
}

std::string shape_description(const Scenario& sc, double value) {
    return std::string(sc.log_shape ? "log" : "power") + " utility shape " +
           g6(value);
}

// Resolved command settings after flag handling.
struct Options {
    Scenario scenario;
    bool scenario_given = false;
    fs::path out_dir;
    PricingOptions pricing;
    long long jobs = 0;  // simulation horizon per simulated queue
};

// The first cell of the scenario grid (first weight scheme, first fleet
// size, first shape value), solved in full plus its single-level baseline.
struct CellSolve {
    WeightScheme scheme{};
    int fleet = 0;
    double value = 0.0;
    std::string id;
    PricingSolution full;
    PricingSolution single;
};

CellSolve solve_first_cell(const Options& opts) {
    const Scenario& sc = opts.scenario;
    sc.validate();
    CellSolve cell;
    cell.scheme = sc.weight_schemes.front();
    cell.fleet = sc.fleet_sizes.front();
    cell.value = sc.shape_values.front();
    cell.id = std::string(weight_scheme_name(cell.scheme)) + "-m" +
              std::to_string(cell.fleet) + "-v" + g6(cell.value);
    const UserPopulation pop = sc.population(cell.scheme, cell.value);
    cell.full = optimize_prices(cell.fleet, pop, sc.menu_waits, sc.model,
                                opts.pricing);
    cell.single = optimize_prices(cell.fleet, pop, {sc.menu_waits.front()},
                                  sc.model, opts.pricing);
    return cell;
}

void print_cell_header(const Options& opts, const CellSolve& cell,
                       std::ostream& out) {
    const Scenario& sc = opts.scenario;
    const std::size_t grid_cells = sc.weight_schemes.size() *
                                   sc.fleet_sizes.size() *
                                   sc.shape_values.size();
    out << "cell " << cell.id << " (first of " << grid_cells
        << " grid cells): " << sc.num_users << " users, "
        << shape_description(sc, cell.value) << ", fleet " << cell.fleet
        << ", " << model_description(sc.model) << "\n\n";
}

// First and last 1-based user rank buying offered level l.
std::pair<int, int> band(const Breakpoints& bp, std::size_t l) {
    const int first = l == 0 ? 1 : bp.cut_users[l - 1] + 1;
    return {first, bp.cut_users[l]};
}

int cmd_qos_curve(const Options& opts, std::ostream& out) {
    CsvFile csv(opts.out_dir / "qos_curve.csv",
                "model,phi,lambda_max,utilization");

    auto emit = [&](const QueueModel& model, const std::vector<double>& waits) {
        const char* name = model.is_exponential() ? "exponential" : "pareto";
        const auto curve = run_qos_curve(model, waits);
        out << "largest admissible per-server arrival rate, "
            << model_description(model) << "\n\n";
        Table t({"wait", "max rate", "utilization"});
        for (const auto& p : curve)
            t.row({g6(p.phi), g6(p.lambda_max), g6(p.utilization)});
        t.print(out);
        out << '\n';
        for (const auto& p : curve)
            csv.row({name, g17(p.phi), g17(p.lambda_max), g17(p.utilization)});
    };

    if (opts.scenario_given) {
        opts.scenario.validate();
        emit(opts.scenario.model, opts.scenario.menu_waits);
    } else {
        emit(QueueModel::exponential(1.0, 0.05), {0, 1, 2, 4, 8});
        emit(QueueModel::pareto(1.4, 1.0 / 6.0), {0.05, 0.5, 1, 2, 4, 8});
    }
    out << "wrote " << csv.path().string() << '\n';
    return 0;
}

int cmd_price(const Options& opts, std::ostream& out) {
    const CellSolve cell = solve_first_cell(opts);
    const Scenario& sc = opts.scenario;
    print_cell_header(opts, cell, out);

    CsvFile csv(opts.out_dir / "menu.csv",
                "sla,wait,price,first_user,last_user,demand_rate,"
                "accepted_rate");
    Table t({"sla", "wait", "price", "buyers", "demand rate",
             "accepted rate"});
    const auto& bp = cell.full.breakpoints;
    for (std::size_t l = 0; l < bp.offered.size(); ++l) {
        const auto [first, last] = band(bp, l);
        const double demand = (last - first + 1) * sc.rate_per_user;
        const double accepted = cell.full.plan.accepted_rates[l];
        const int sla = bp.offered[l] + 1;
        t.row({std::to_string(sla), g6(cell.full.menu.waits[l]),
               g6(cell.full.menu.prices[l]),
               std::to_string(first) + "-" + std::to_string(last),
               g6(demand), g6(accepted)});
        csv.row({std::to_string(sla), g17(cell.full.menu.waits[l]),
                 g17(cell.full.menu.prices[l]), std::to_string(first),
                 std::to_string(last), g17(demand), g17(accepted)});
    }
    t.print(out);

    const int last_buyer = bp.cut_users.back();
    out << "\nopt-out: " << (sc.num_users - last_buyer) << " of "
        << sc.num_users << " users (ranks " << last_buyer + 1 << "-"
        << sc.num_users << ")\n";
    out << "revenue per unit time:  " << g6(cell.full.total_unit_revenue)
        << '\n';
    out << "single-level baseline:  " << g6(cell.single.total_unit_revenue)
        << "  (price " << g6(cell.single.menu.prices.front()) << " at wait "
        << g6(cell.single.menu.waits.front()) << ")\n";
    out << "improvement:            "
        << pct(improvement_ratio(cell.full.total_unit_revenue,
                                 cell.single.total_unit_revenue))
        << "%\n";
    out << "candidates evaluated:   " << cell.full.candidates_evaluated
        << "\n\n";
    out << "wrote " << csv.path().string() << '\n';
    return 0;
}

int cmd_plan(const Options& opts, std::ostream& out) {
    const CellSolve cell = solve_first_cell(opts);
    print_cell_header(opts, cell, out);

    CsvFile csv(opts.out_dir / "plan.csv",
                "sla,wait,price,accepted_rate,servers,per_server_rate,"
                "utilization,revenue_rate");
    Table t({"sla", "wait", "price", "accepted rate", "servers",
             "rate/server", "utilization", "revenue/time"});
    const auto& plan = cell.full.plan;
    const auto& bp = cell.full.breakpoints;
    for (std::size_t l = 0; l < bp.offered.size(); ++l) {
        const double revenue =
            cell.full.menu.prices[l] * plan.accepted_rates[l];
        t.row({std::to_string(bp.offered[l] + 1),
               g6(cell.full.menu.waits[l]), g6(cell.full.menu.prices[l]),
               g6(plan.accepted_rates[l]), std::to_string(plan.servers[l]),
               g6(plan.per_server_rates[l]), g6(plan.utilizations[l]),
               g6(revenue)});
        csv.row({std::to_string(bp.offered[l] + 1),
                 g17(cell.full.menu.waits[l]), g17(cell.full.menu.prices[l]),
                 g17(plan.accepted_rates[l]), std::to_string(plan.servers[l]),
                 g17(plan.per_server_rates[l]), g17(plan.utilizations[l]),
                 g17(revenue)});
    }
    t.print(out);

    out << "\nservers used: " << plan.total_servers() << " of " << cell.fleet
        << '\n';
    out << "revenue per unit time: " << g6(cell.full.total_unit_revenue)
        << "\n\n";
    out << "wrote " << csv.path().string() << '\n';
    return 0;
}

int cmd_simulate(const Options& opts, std::ostream& out) {
    const CellSolve cell = solve_first_cell(opts);
    const Scenario& sc = opts.scenario;
    print_cell_header(opts, cell, out);

    // Replay the planned allocation: every staffed level runs its own
    // queues with arrivals dropped at the promised deadline.
    const PlanSimResult res =
        simulate_plan(cell.full.plan, cell.full.menu, sc.model, opts.jobs,
                      sc.seed);

    CsvFile sim_csv(opts.out_dir / "simulation.csv",
                    "sla,wait,price,jobs,elapsed,realized_rate,mean_wait,"
                    "mean_wait_halfwidth,miss_fraction,"
                    "miss_fraction_halfwidth,utilization,"
                    "utilization_halfwidth,revenue_rate");
    out << "simulated allocation (" << opts.jobs
        << " jobs per level, seed " << sc.seed << ")\n\n";
    Table t({"sla", "wait", "price", "jobs", "rate", "mean wait", "miss",
             "miss +/-", "utilization"});
    const auto& bp = cell.full.breakpoints;
    for (std::size_t l = 0; l < bp.offered.size(); ++l) {
        const SimStats& s = res.per_level[l];
        const double rate = s.elapsed > 0.0 ? s.jobs / s.elapsed : 0.0;
        const double revenue = cell.full.menu.prices[l] * rate;
        t.row({std::to_string(bp.offered[l] + 1),
               g6(cell.full.menu.waits[l]), g6(cell.full.menu.prices[l]),
               std::to_string(s.jobs), g6(rate), g6(s.mean_wait),
               g6(s.miss_fraction), g6(s.miss_fraction_halfwidth),
               g6(s.utilization)});
        sim_csv.row({std::to_string(bp.offered[l] + 1),
                     g17(cell.full.menu.waits[l]),
                     g17(cell.full.menu.prices[l]), std::to_string(s.jobs),
                     g17(s.elapsed), g17(rate), g17(s.mean_wait),
                     g17(s.mean_wait_halfwidth), g17(s.miss_fraction),
                     g17(s.miss_fraction_halfwidth), g17(s.utilization),
                     g17(s.utilization_halfwidth), g17(revenue)});
    }
    t.print(out);

    const double planned = cell.full.total_unit_revenue;
    out << "\nrealized revenue per unit time: " << g6(res.realized_revenue);
    if (planned > 0.0)
        out << "  (planned " << g6(planned) << ", "
            << pct(res.realized_revenue / planned - 1.0) << "%)";
    out << "\n\n";

    // Single-queue crosscheck: every law the planner relies on against an
    // independent simulation of the same queue.
    const auto rows = run_simulation_crosscheck(sc, {sc.seed}, opts.jobs);
    CsvFile cross_csv(opts.out_dir / "crosscheck.csv",
                      "unit,seed,arrival_rate,phi,servers,"
                      "analytic_utilization,sim_utilization,"
                      "utilization_halfwidth,analytic_wait,sim_wait,"
                      "wait_halfwidth,wait_is_transform,analytic_miss,"
                      "sim_miss,miss_halfwidth");
    out << "law versus simulation (" << opts.jobs << " jobs per unit)\n\n";
    Table ct({"unit", "seed", "statistic", "law", "simulated", "halfwidth",
              "within"});
    auto cmp = [&](const CrosscheckRow& r, const char* label, double law,
                   double sim, double hw) {
        const bool ok = std::abs(sim - law) <= hw + 1e-12;
        ct.row({r.unit, std::to_string(r.seed), label, g6(law), g6(sim),
                g6(hw), ok ? "yes" : "no"});
    };
    for (const auto& r : rows) {
        if (r.analytic_utilization)
            cmp(r, "utilization", *r.analytic_utilization, r.sim.utilization,
                r.sim.utilization_halfwidth);
        if (r.analytic_wait)
            cmp(r, r.wait_is_transform ? "tilted wait" : "mean wait",
                *r.analytic_wait, r.simulated_wait(),
                r.simulated_wait_halfwidth());
        if (r.analytic_miss)
            cmp(r, "miss fraction", *r.analytic_miss, r.sim.miss_fraction,
                r.sim.miss_fraction_halfwidth);
        cross_csv.row({r.unit, std::to_string(r.seed), g17(r.arrival_rate),
                       g17(r.phi), std::to_string(r.servers),
                       opt_g17(r.analytic_utilization),
                       g17(r.sim.utilization),
                       g17(r.sim.utilization_halfwidth),
                       opt_g17(r.analytic_wait), g17(r.simulated_wait()),
                       g17(r.simulated_wait_halfwidth()),
                       r.wait_is_transform ? "1" : "0",
                       opt_g17(r.analytic_miss), g17(r.sim.miss_fraction),
                       g17(r.sim.miss_fraction_halfwidth)});
    }
    ct.print(out);
    out << "\nwrote " << sim_csv.path().string() << '\n';
    out << "wrote " << cross_csv.path().string() << '\n';
    return 0;
}

int cmd_reproduce(const Options& opts, std::ostream& out) {
    const Scenario& sc = opts.scenario;
    const auto start = std::chrono::steady_clock::now();
    const auto records = run_optimal_solutions(sc, opts.pricing);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                      start)
            .count();

    out << "revenue improvement over the best single-level menu (percent)\n";
    for (WeightScheme scheme : sc.weight_schemes) {
        out << '\n' << weight_scheme_name(scheme) << " weights\n";
        std::vector<std::string> header{"fleet"};
        for (double v : sc.shape_values) header.push_back("v=" + g6(v));
        Table t(std::move(header));
        for (int fleet : sc.fleet_sizes) {
            std::vector<std::string> cells{std::to_string(fleet)};
            for (double v : sc.shape_values) {
                for (const auto& rec : records)
                    if (!rec.probe && rec.weights == scheme &&
                        rec.fleet == fleet && rec.shape_value == v)
                        cells.push_back(pct(rec.improvement));
            }
            t.row(std::move(cells));
        }
        t.print(out);
    }

    if (!sc.probe_shape_values.empty()) {
        out << "\noff-grid probe cells\n";
        Table t({"cell", "revenue", "baseline", "improvement"});
        for (const auto& rec : records)
            if (rec.probe)
                t.row({rec.id, g6(rec.solution.total_unit_revenue),
                       g6(rec.baseline_revenue),
                       pct(rec.improvement) + "%"});
        t.print(out);
    }

    CsvFile battery(opts.out_dir / "battery.csv",
                    "id,weights,fleet,shape_value,probe,levels,revenue,"
                    "baseline_revenue,improvement,candidates");
    CsvFile levels(opts.out_dir / "battery_levels.csv",
                   "id,sla,wait,price,cut_user,accepted_rate,servers,"
                   "per_server_rate,utilization");
    for (const auto& rec : records) {
        battery.row({rec.id, weight_scheme_name(rec.weights),
                     std::to_string(rec.fleet), g17(rec.shape_value),
                     rec.probe ? "1" : "0",
                     std::to_string(rec.solution.breakpoints.offered.size()),
                     g17(rec.solution.total_unit_revenue),
                     g17(rec.baseline_revenue), g17(rec.improvement),
                     std::to_string(rec.solution.candidates_evaluated)});
        const auto& bp = rec.solution.breakpoints;
        const auto& plan = rec.solution.plan;
        for (std::size_t l = 0; l < bp.offered.size(); ++l)
            levels.row({rec.id, std::to_string(bp.offered[l] + 1),
                        g17(rec.solution.menu.waits[l]),
                        g17(rec.solution.menu.prices[l]),
                        std::to_string(bp.cut_users[l]),
                        g17(plan.accepted_rates[l]),
                        std::to_string(plan.servers[l]),
                        g17(plan.per_server_rates[l]),
                        g17(plan.utilizations[l])});
    }

    out << "\nsolved " << records.size() << " cells in " << g6(seconds)
        << "s (" << opts.pricing.workers << " worker thread"
        << (opts.pricing.workers == 1 ? "" : "s") << ")\n";
    out << "wrote " << battery.path().string() << '\n';
    out << "wrote " << levels.path().string() << '\n';
    return 0;
}

}  // namespace

int run_cli(std::vector<std::string> args, std::ostream& out,
            std::ostream& err) {
    CLI::App app{"Revenue-optimal QoS-differentiated posted pricing for a "
                 "fixed server fleet",
                 "qdprice"};
    app.require_subcommand(1);

    std::string scenario_path;
    std::string out_dir = "results";
    std::uint64_t seed = 0;
    long long jobs = 0;
    int parallel = std::max(1u, std::thread::hardware_concurrency());
    bool epsilon = false;

    app.add_option("--scenario", scenario_path,
                   "Scenario file (line-oriented 'key = value')")
        ->check(CLI::ExistingFile);
    app.add_option("--out", out_dir, "Directory for CSV output")
        ->capture_default_str();
    auto* seed_opt =
        app.add_option("--seed", seed, "Override the scenario RNG seed");
    auto* jobs_opt = app.add_option(
        "--jobs", jobs,
        "Override the simulation horizon (jobs per simulated queue)");
    jobs_opt->check(CLI::PositiveNumber);
    app.add_option("--parallel", parallel,
                   "Worker threads for the pricing sweep")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app.add_flag("--epsilon-pricing", epsilon,
                 "Shave every price by a relative 1e-6 so cut users "
                 "strictly prefer their level");

    auto* qos = app.add_subcommand(
        "qos-curve", "Tabulate the largest admissible per-server arrival "
                     "rate for each promised wait");
    auto* price = app.add_subcommand(
        "price", "Solve the first scenario cell and print the optimal "
                 "price menu");
    auto* plan = app.add_subcommand(
        "plan", "Solve the first scenario cell and print the server "
                "allocation behind the menu");
    auto* simulate = app.add_subcommand(
        "simulate", "Replay the planned allocation in the discrete-event "
                    "simulator and cross-check the queueing laws");
    auto* reproduce = app.add_subcommand(
        "reproduce", "Run the full experiment battery and write the "
                     "result tables");
    for (auto* sub : {qos, price, plan, simulate, reproduce})
        sub->fallthrough();

    // CLI11 consumes the argument vector back to front.
    std::reverse(args.begin(), args.end());
    try {
        app.parse(std::move(args));
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        Options opts;
        opts.scenario_given = !scenario_path.empty();
        opts.scenario = opts.scenario_given ? Scenario::load(scenario_path)
                                            : Scenario{};
        if (seed_opt->count() > 0) opts.scenario.seed = seed;
        opts.jobs = jobs_opt->count() > 0 ? jobs : opts.scenario.sim_jobs;
        opts.out_dir = out_dir;
        opts.pricing.workers = parallel;
        opts.pricing.epsilon_undercut = epsilon;
        fs::create_directories(opts.out_dir);

        if (app.got_subcommand(qos)) return cmd_qos_curve(opts, out);
        if (app.got_subcommand(price)) return cmd_price(opts, out);
        if (app.got_subcommand(plan)) return cmd_plan(opts, out);
        if (app.got_subcommand(simulate)) return cmd_simulate(opts, out);
        return cmd_reproduce(opts, out);
    } catch (const std::exception& e) {
        err << "qdprice: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace qdp::cli
