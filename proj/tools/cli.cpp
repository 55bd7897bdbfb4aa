#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>
#include <utility>

#include <CLI11.hpp>
#include <Eigen/Eigenvalues>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "qrenet/annealed.hpp"
#include "qrenet/config.hpp"
#include "qrenet/dynamics.hpp"
#include "qrenet/experiments.hpp"
#include "qrenet/nash.hpp"
#include "qrenet/output.hpp"
#include "qrenet/solver.hpp"

namespace qrenet::cli {

namespace {

using nlohmann::json;

// Files are collected and written only once the task has finished, so a
// validation error never leaves partial outputs behind.
class Artifacts {
  public:
    void add(std::string path, std::string text) { files_.emplace_back(std::move(path), std::move(text)); }
    void add_json(const std::string& path, const json& j) { add(path, j.dump(2) + "\n"); }
    void flush(std::ostream& out) {
        for (const auto& [path, text] : files_) {
            write_text(path, text);
            fmt::print(out, "wrote {}\n", path);
        }
        files_.clear();
    }

  private:
    std::vector<std::pair<std::string, std::string>> files_;
};

struct Context {
    RunConfig cfg;
    std::uint64_t seed = 0;
    unsigned threads = 1;
    std::ostream& out;
    std::ostream& err;
    Artifacts artifacts;
    bool seed_reported = false;

    void report_seed() {
        if (!seed_reported)
            fmt::print(out, "seed: {}\n", seed);
        seed_reported = true;
    }
    GameModel game() {
        if (cfg.model.graph.type == "configuration")
            report_seed();
        return cfg.build_game(seed);
    }
};

// Thrown after diagnostics were queued for a non-converged solve.
struct NotConverged {
    std::string message;
};

SolverOptions solver_options(const ConfigNode& task) {
    SolverOptions o;
    o.tol = task.positive_or("tol", o.tol);
    o.max_iter = static_cast<int>(task.count_or("max_iter", static_cast<std::size_t>(o.max_iter)));
    o.newton_max_iter =
        static_cast<int>(task.count_or("newton_max_iter", static_cast<std::size_t>(o.newton_max_iter)));
    if (auto d = task.get("damping")) {
        o.damping = d->number();
        if (!(o.damping > 0.0 && o.damping <= 1.0))
            d->fail("damping must lie in (0, 1]");
    }
    o.classify = task.boolean_or("classify", true);
    return o;
}

MultistartSpec multistart(const ConfigNode& task, const Context& ctx) {
    MultistartSpec s;
    s.random_starts = static_cast<int>(task.count_or("random_starts", static_cast<std::size_t>(s.random_starts)));
    s.deterministic = task.boolean_or("deterministic_starts", true);
    s.dedup_tol = task.positive_or("dedup_tol", s.dedup_tol);
    s.seed = ctx.seed;
    s.threads = ctx.threads;
    return s;
}

Eigen::VectorXd initial_m(const ConfigNode& task, std::string_view key, std::size_t n, double fallback) {
    auto node = task.get(key);
    if (!node)
        return Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), fallback);
    const auto values = node->numbers();
    if (values.size() != 1 && values.size() != n)
        node->fail(fmt::format("needs 1 or {} entries, got {}", n, values.size()));
    for (double v : values)
        if (v < -1.0 || v > 1.0)
            node->fail("local averages lie in [-1, 1]");
    Eigen::VectorXd m(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i)
        m[static_cast<Eigen::Index>(i)] = values.size() == 1 ? values[0] : values[i];
    return m;
}

std::vector<int> initial_profile(const ConfigNode& task, std::size_t n, std::uint64_t seed) {
    auto node = task.get("s0");
    if (!node)
        return std::vector<int>(n, 1);
    if (node->json().is_string()) {
        const std::string s = node->string();
        if (s == "plus") return std::vector<int>(n, 1);
        if (s == "minus") return std::vector<int>(n, -1);
        if (s == "random") {
            std::mt19937_64 rng(seed ^ 0x5eed5eed5eed5eedULL);
            std::vector<int> out(n);
            for (auto& v : out)
                v = (rng() & 1u) ? 1 : -1;
            return out;
        }
        node->fail("s0 is 'plus', 'minus', 'random' or an array of +-1");
    }
    if (node->size() != n)
        node->fail(fmt::format("needs {} entries, got {}", n, node->size()));
    std::vector<int> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const long long v = node->element(i).integer();
        if (v != 1 && v != -1)
            node->element(i).fail("strategies are +1 or -1");
        out[i] = static_cast<int>(v);
    }
    return out;
}

double positive_or_default(const ConfigNode& task, std::string_view key, double fallback) {
    return task.positive_or(key, fallback);
}

void queue_solutions(Context& ctx, const EquilibriumSet& set, bool single) {
    const OutputConfig& o = ctx.cfg.output;
    if (o.json)
        ctx.artifacts.add_json(o.path("equilibria.json"), equilibria_json(set));
    if (o.csv)
        ctx.artifacts.add(o.path("equilibria.csv"),
                          single && !set.solutions.empty() ? solution_csv(set.solutions.front())
                                                           : equilibria_csv(set.solutions));
}

void print_solution(std::ostream& out, std::size_t index, const EquilibriumSolution& sol) {
    fmt::print(out, "equilibrium {}: mean m = {}, residual = {:.3g}, stability = {}\n", index, sol.m.mean(),
               sol.residual, to_string(sol.stability));
    for (const auto& w : sol.warnings)
        fmt::print(out, "  warning: {}\n", w);
}

int cmd_solve(Context& ctx) {
    const ConfigNode task = ctx.cfg.task();
    task.allow_keys({"method", "m0", "tol", "max_iter", "newton_max_iter", "damping", "classify"});
    const std::string method = task.string_or("method", "newton");
    if (method != "newton" && method != "fixed_point")
        task.at("method").fail("method is 'newton' or 'fixed_point'");
    const SolverOptions options = solver_options(task);
    const GameModel model = ctx.game();
    const Eigen::VectorXd m0 = initial_m(task, "m0", model.size(), 1.0);

    EquilibriumSolution sol;
    try {
        sol = method == "newton" ? solve_newton(model, m0, options) : solve_fixed_point(model, m0, options);
    } catch (const ConvergenceError& e) {
        json diag;
        diag["error"] = e.what();
        diag["residual"] = e.residual;
        diag["iterations"] = e.iterations;
        diag["last_iterate"] = std::vector<double>(e.last_iterate.data(), e.last_iterate.data() + e.last_iterate.size());
        ctx.artifacts.add_json(ctx.cfg.output.path("diagnostics.json"), diag);
        throw NotConverged{e.what()};
    }
    EquilibriumSet set;
    set.starts = 1;
    set.solutions.push_back(sol);
    print_solution(ctx.out, 0, sol);
    queue_solutions(ctx, set, true);
    return kOk;
}

int cmd_enumerate(Context& ctx) {
    const ConfigNode task = ctx.cfg.task();
    task.allow_keys({"random_starts", "deterministic_starts", "dedup_tol", "tol", "max_iter", "newton_max_iter",
                     "damping", "classify"});
    const SolverOptions options = solver_options(task);
    const MultistartSpec starts = multistart(task, ctx);
    const GameModel model = ctx.game();
    ctx.report_seed();
    const EquilibriumSet set = enumerate_equilibria(model, starts, options);
    if (set.solutions.empty()) {
        json diag;
        diag["error"] = "no start converged";
        diag["starts"] = set.starts;
        diag["failed_starts"] = set.failed_starts;
        ctx.artifacts.add_json(ctx.cfg.output.path("diagnostics.json"), diag);
        throw NotConverged{fmt::format("none of {} starts converged", set.starts)};
    }
    fmt::print(ctx.out, "{} equilibria from {} starts ({} failed)\n", set.solutions.size(), set.starts,
               set.failed_starts);
    for (std::size_t k = 0; k < set.solutions.size(); ++k)
        print_solution(ctx.out, k, set.solutions[k]);
    queue_solutions(ctx, set, false);
    return kOk;
}

int cmd_nash(Context& ctx) {
    const ConfigNode task = ctx.cfg.task();
    task.allow_keys({"max_agents"});
    const std::size_t max_agents = task.count_or("max_agents", 24);
    const GameModel model = ctx.game();
    if (model.size() > max_agents)
        task.fail(fmt::format("{} agents exceed max_agents = {} for exhaustive search", model.size(), max_agents));
    const auto profiles = pure_nash_bruteforce(model, max_agents);
    const bool symmetric = model.weights().symmetric();
    json j;
    j["profiles"] = json::array();
    for (const auto& p : profiles) {
        json row;
        row["s"] = p;
        if (symmetric)
            row["potential"] = potential(model, p);
        j["profiles"].push_back(std::move(row));
    }
    fmt::print(ctx.out, "{} pure Nash equilibria\n", profiles.size());
    for (const auto& p : profiles) {
        std::string s;
        for (int v : p)
            s += v > 0 ? '+' : '-';
        fmt::print(ctx.out, "  {}\n", s);
    }
    const OutputConfig& o = ctx.cfg.output;
    if (o.json)
        ctx.artifacts.add_json(o.path("nash.json"), j);
    if (o.csv)
        ctx.artifacts.add(o.path("nash.csv"), pure_nash_csv(profiles));
    return kOk;
}

AnnealedModel annealed_model(Context& ctx) {
    const ModelConfig& m = ctx.cfg.model;
    if (m.coupling.mode != CouplingMode::uniform)
        throw ConfigError(m.line, "the annealed reduction needs coupling mode 'uniform'");
    if (m.fields.size() != 1)
        throw ConfigError(m.line, "the annealed reduction needs a scalar H");
    if (m.graph.type == "configuration")
        ctx.report_seed();
    return AnnealedModel{ctx.cfg.degree_distribution(ctx.seed), m.coupling.J, m.fields.front(), ctx.cfg.shared_noise()};
}

int cmd_annealed(Context& ctx) {
    const ConfigNode task = ctx.cfg.task();
    task.allow_keys({"intervals", "compare_n"});
    ScanOptions scan;
    scan.intervals = task.count_or("intervals", scan.intervals);
    if (scan.intervals < 2)
        task.at("intervals").fail("need at least 2 scan intervals");
    const std::size_t compare_n = task.count_or("compare_n", 0);  // 0: no sampled comparison
    const AnnealedModel model = annealed_model(ctx);
    const auto roots = solve_weighted(model, scan);
    const json j = annealed_json(model, roots);
    fmt::print(ctx.out, "roots of the weighted average:");
    for (double r : roots)
        fmt::print(ctx.out, " {}", r);
    fmt::print(ctx.out, "\nJ_star: {}\n", critical_coupling(model.dist, model.noise));
    const OutputConfig& o = ctx.cfg.output;
    ctx.artifacts.add_json(o.path("annealed.json"), j);
    if (compare_n > 0) {
        ctx.report_seed();
        const auto report =
            compare_annealed_sampled(model.dist, compare_n, model.J, model.H, model.noise, ctx.seed);
        fmt::print(ctx.out, "sampled graph: {} nodes, {} edges; max class discrepancy {}; signs agree: {}\n",
                   report.nodes, report.edges, report.max_abs_discrepancy, report.signs_agree ? "yes" : "no");
        ctx.artifacts.add_json(o.path("comparison.json"), comparison_json(report));
    }
    return kOk;
}

int cmd_dynamics(Context& ctx) {
    const ConfigNode task = ctx.cfg.task();
    task.allow_keys({"lambda", "t_end", "m0", "output_interval", "rtol", "atol", "stationary_tol"});
    const double lambda = positive_or_default(task, "lambda", 1.0);
    const double t_end = task.at("t_end").positive();
    OdeOptions opts;
    opts.rtol = task.positive_or("rtol", opts.rtol);
    opts.atol = task.positive_or("atol", opts.atol);
    opts.stationary_tol = task.positive_or("stationary_tol", opts.stationary_tol);
    opts.output_interval = task.number_or("output_interval", 0.0);
    if (opts.output_interval < 0.0)
        task.at("output_interval").fail("must be nonnegative");
    const GameModel model = ctx.game();
    const Eigen::VectorXd m0 = initial_m(task, "m0", model.size(), 1e-3);
    const Trajectory traj = mean_field_ode(model, m0, lambda, t_end, opts);
    fmt::print(ctx.out, "t = {}: mean m = {}, defect = {:.3g}{}\n", traj.times.back(), traj.values.back().mean(),
               traj.final_defect, traj.stationary ? " (stationary)" : "");
    ctx.artifacts.add(ctx.cfg.output.path("trajectory.csv"), trajectory_csv(traj));
    return kOk;
}

int cmd_simulate(Context& ctx) {
    const ConfigNode task = ctx.cfg.task();
    task.allow_keys({"lambda", "t_end", "s0", "burn_in_fraction", "record_events", "sample_interval", "replicas"});
    const double lambda = positive_or_default(task, "lambda", 1.0);
    const double t_end = task.at("t_end").positive();
    CtmcOptions opts;
    if (auto b = task.get("burn_in_fraction")) {
        opts.burn_in_fraction = b->number();
        if (opts.burn_in_fraction < 0.0 || opts.burn_in_fraction >= 1.0)
            b->fail("burn_in_fraction lies in [0, 1)");
    }
    opts.record_events = task.boolean_or("record_events", false);
    opts.sample_interval = task.number_or("sample_interval", 0.0);
    if (opts.sample_interval < 0.0)
        task.at("sample_interval").fail("must be nonnegative");
    const std::size_t replicas = task.count_or("replicas", 0);
    const GameModel model = ctx.game();
    if (replicas > 0 && model.size() > 20)
        task.at("replicas").fail("replica distributions need n <= 20");
    ctx.report_seed();
    const std::vector<int> s0 = initial_profile(task, model.size(), ctx.seed);

    const CtmcRun run = simulate_ctmc(model, s0, lambda, t_end, ctx.seed, opts);
    json summary;
    summary["seed"] = ctx.seed;
    summary["clock_events"] = run.clock_events;
    summary["flips"] = run.flips;
    summary["observed_time"] = run.observed_time;
    summary["time_average_m"] =
        std::vector<double>(run.time_average_m.data(), run.time_average_m.data() + run.time_average_m.size());
    summary["final_state"] = run.final_state;
    fmt::print(ctx.out, "{} clock events, {} flips; time-averaged mean m = {}\n", run.clock_events, run.flips,
               run.time_average_m.mean());
    const OutputConfig& o = ctx.cfg.output;
    ctx.artifacts.add_json(o.path("simulation.json"), summary);
    if (opts.record_events)
        ctx.artifacts.add(o.path("events.csv"), events_csv(run.events));
    if (opts.sample_interval > 0.0)
        ctx.artifacts.add(o.path("samples.csv"), trajectory_csv(run.samples));
    if (!run.occupation.empty())
        ctx.artifacts.add(o.path("occupation.csv"), distribution_csv(run.occupation));
    if (replicas > 0) {
        const auto dist = replica_distribution(model, s0, lambda, t_end, replicas, ctx.seed, ctx.threads);
        ctx.artifacts.add(o.path("replicas.csv"), distribution_csv(dist));
    }
    return kOk;
}

int cmd_master(Context& ctx) {
    const ConfigNode task = ctx.cfg.task();
    task.allow_keys({"lambda", "report_times", "s0", "max_agents"});
    const double lambda = positive_or_default(task, "lambda", 1.0);
    const std::size_t max_agents = task.count_or("max_agents", 16);
    std::vector<double> times;
    if (auto rt = task.get("report_times")) {
        times = rt->numbers();
        for (std::size_t k = 0; k < times.size(); ++k)
            if (times[k] < 0.0 || (k > 0 && times[k] < times[k - 1]))
                rt->fail("report_times must be nonnegative and nondecreasing");
    }
    const GameModel model = ctx.game();
    if (model.size() > max_agents)
        task.fail(fmt::format("{} agents exceed max_agents = {} (state space 2^n)", model.size(), max_agents));
    const std::vector<int> s0 = initial_profile(task, model.size(), ctx.seed);
    if (task.has("s0") && task.at("s0").json().is_string() && task.at("s0").string() == "random")
        ctx.report_seed();

    const Generator gen = build_generator(model, lambda, max_agents);
    const MasterState stationary = master_stationary(gen);
    const Eigen::VectorXd m_stat = master_local_averages(stationary, model.size());
    json summary;
    summary["states"] = gen.states();
    summary["residual"] = stationary_residual(gen, stationary);
    summary["stationary_m"] = std::vector<double>(m_stat.data(), m_stat.data() + m_stat.size());
    fmt::print(ctx.out, "{} states; stationary mean m = {}\n", gen.states(), m_stat.mean());
    const OutputConfig& o = ctx.cfg.output;
    ctx.artifacts.add(o.path("stationary.csv"), distribution_csv(stationary.p));
    if (!times.empty()) {
        const auto states = master_evolve(gen, point_state(model.size(), to_configuration(s0)), times);
        Trajectory traj;
        for (const auto& st : states) {
            traj.times.push_back(st.t);
            traj.values.push_back(master_local_averages(st, model.size()));
        }
        ctx.artifacts.add(o.path("master_trajectory.csv"), trajectory_csv(traj));
    }
    ctx.artifacts.add_json(o.path("master.json"), summary);
    return kOk;
}

SweepParameter parameter_of(const ConfigNode& task, std::string_view fallback) {
    const std::string name = task.string_or("parameter", std::string(fallback));
    try {
        return sweep_parameter_from_string(name);
    } catch (const std::invalid_argument& e) {
        task.at("parameter").fail(e.what());
    }
}

int cmd_sweep(Context& ctx) {
    const ConfigNode task = ctx.cfg.task();
    task.allow_keys({"parameter", "from", "to", "step", "grid", "max_jump", "random_starts", "deterministic_starts",
                     "dedup_tol", "tol", "max_iter", "newton_max_iter", "damping"});
    SweepSpec spec;
    spec.parameter = parameter_of(task, "J");
    if (task.has("grid")) {
        if (task.has("from") || task.has("to") || task.has("step"))
            task.fail("give either 'grid' or 'from'/'to'/'step'");
        spec.grid = task.at("grid").numbers();
    } else {
        const double from = task.at("from").number();
        const double to = task.at("to").number();
        const double step = task.at("step").positive();
        if (to < from)
            task.at("to").fail("'to' must not be below 'from'");
        spec.grid = grid_range(from, to, step);
    }
    for (std::size_t k = 1; k < spec.grid.size(); ++k)
        if (!(spec.grid[k] > spec.grid[k - 1]))
            task.at("grid").fail("grid must be strictly increasing");
    spec.max_jump = task.positive_or("max_jump", spec.max_jump);
    spec.solver = solver_options(task);
    spec.starts = multistart(task, ctx);
    spec.threads = ctx.threads;
    if (spec.parameter == SweepParameter::J && ctx.cfg.model.coupling.mode == CouplingMode::full_matrix)
        throw ConfigError(ctx.cfg.model.line, "J cannot be swept with a full coupling matrix");
    if (spec.parameter == SweepParameter::beta && ctx.cfg.shared_noise().kind() != NoiseKind::logistic_difference)
        throw ConfigError(ctx.cfg.model.line, "beta sweeps need logistic noise");
    if (ctx.cfg.model.graph.type == "configuration")
        ctx.report_seed();
    spec.model = ctx.cfg.build_template(ctx.seed);
    ctx.report_seed();

    const auto records = sweep(spec);
    std::size_t failed = 0;
    for (const auto& rec : records) {
        if (rec.failed()) {
            ++failed;
            fmt::print(ctx.err, "{} = {}: {}\n", to_string(spec.parameter), rec.parameter, rec.error);
        }
    }
    fmt::print(ctx.out, "{} grid points, {} failed\n", records.size(), failed);
    const OutputConfig& o = ctx.cfg.output;
    if (o.json)
        ctx.artifacts.add_json(o.path("bifurcation.json"), bifurcation_json(records));
    if (o.csv)
        ctx.artifacts.add(o.path("bifurcation.csv"), bifurcation_csv(records));
    if (failed == records.size())
        throw NotConverged{"every grid point failed"};
    return kOk;
}

int cmd_transition(Context& ctx) {
    const ConfigNode task = ctx.cfg.task();
    task.allow_keys({"parameter", "bracket", "target", "rel_tol", "J", "random_starts", "deterministic_starts",
                     "dedup_tol", "tol", "max_iter", "newton_max_iter", "damping", "intervals"});
    const ModelConfig& m = ctx.cfg.model;
    TransitionSpec spec;
    spec.parameter = parameter_of(task, "J");
    if (spec.parameter == SweepParameter::H)
        task.at("parameter").fail("transitions are located in J or beta");
    spec.rel_tol = task.positive_or("rel_tol", spec.rel_tol);
    spec.noise = ctx.cfg.shared_noise();
    spec.coupling = task.number_or("J", m.coupling.J);
    spec.scan.intervals = task.count_or("intervals", spec.scan.intervals);
    spec.solver = solver_options(task);
    spec.starts = multistart(task, ctx);
    if (spec.parameter == SweepParameter::beta && spec.noise.kind() != NoiseKind::logistic_difference)
        throw ConfigError(m.line, "beta transitions need logistic noise");

    std::string target = task.string_or("target", "auto");
    const std::string& type = m.graph.type;
    if (target == "auto")
        target = type == "annealed" || type == "configuration" ? "annealed" : type == "complete" ? "complete_limit" : "graph";
    if (target == "complete_limit") {
        spec.target = TransitionTarget::complete_limit;
    } else if (target == "annealed") {
        spec.target = TransitionTarget::annealed;
        if (m.graph.type == "configuration")
            ctx.report_seed();
        spec.dist = ctx.cfg.degree_distribution(ctx.seed);
    } else if (target == "graph") {
        spec.target = TransitionTarget::full_model;
        if (!ctx.cfg.has_nodes())
            throw ConfigError(m.graph.line, "target 'graph' needs a graph with explicit nodes");
        if (spec.parameter == SweepParameter::J && m.coupling.mode == CouplingMode::full_matrix)
            throw ConfigError(m.line, "J cannot be bisected with a full coupling matrix");
        spec.model = ctx.cfg.build_template(ctx.seed);
        if (spec.parameter == SweepParameter::beta)
            spec.model->coupling.J = spec.coupling;
        ctx.report_seed();
    } else {
        task.at("target").fail("target is 'auto', 'complete_limit', 'annealed' or 'graph'");
    }

    if (auto b = task.get("bracket")) {
        if (b->size() != 2)
            b->fail("bracket is [lo, hi]");
        spec.lo = b->element(0).number();
        spec.hi = b->element(1).number();
        if (!(spec.lo < spec.hi))
            b->fail("bracket needs lo < hi");
    } else {
        const auto guess = analytic_transition(spec);
        if (!guess)
            task.fail("no analytic estimate available; give 'bracket'");
        spec.lo = 0.5 * *guess;
        spec.hi = 2.0 * *guess;
    }

    TransitionResult result;
    try {
        result = find_transition(spec);
    } catch (const std::invalid_argument& e) {
        if (auto b = task.get("bracket"))
            b->fail(e.what());
        task.fail(e.what());
    }
    fmt::print(ctx.out, "{}_c = {}", result.parameter_name, result.value);
    if (result.analytic)
        fmt::print(ctx.out, " (analytic {}, relative difference {:.3g})", *result.analytic,
                   std::abs(result.value - *result.analytic) / std::abs(*result.analytic));
    fmt::print(ctx.out, "\n");
    const OutputConfig& o = ctx.cfg.output;
    if (o.json)
        ctx.artifacts.add_json(o.path("transition.json"), transition_json(result));
    if (o.csv)
        ctx.artifacts.add(o.path("transition.csv"), transition_csv(result));
    return kOk;
}

bool coupling_vanishes(const CouplingSpec& c) {
    if (c.mode != CouplingMode::full_matrix)
        return c.J == 0.0;
    return std::all_of(c.entries.begin(), c.entries.end(), [](const CouplingEntry& e) { return e.value == 0.0; });
}

int cmd_describe(Context& ctx) {
    // the task block belongs to whichever subcommand the config was written for
    const ModelConfig& m = ctx.cfg.model;
    std::ostream& out = ctx.out;
    const GraphConfig& g = m.graph;
    fmt::print(out, "graph: {}\n", g.type);
    DegreeDistribution dist;
    if (ctx.cfg.has_nodes()) {
        if (g.type == "configuration")
            ctx.report_seed();
        const GraphSpec graph = ctx.cfg.build_graph(ctx.seed);
        fmt::print(out, "nodes: {}\nedges: {}\n", graph.num_nodes(), graph.edge_count());
        if (graph.directed())
            fmt::print(out, "directed: yes\n");
        dist = degree_distribution(graph);
    } else {
        dist = *g.degree;
    }
    fmt::print(out, "degree_mean: {}\ndegree_second_moment: {}\n", dist.mean(), dist.second_moment());
    if (m.coupling.mode == CouplingMode::full_matrix)
        fmt::print(out, "coupling: matrix ({} entries)\n", m.coupling.entries.size());
    else
        fmt::print(out, "coupling: {} J={}\n", to_string(m.coupling.mode), m.coupling.J);
    if (m.fields.size() == 1)
        fmt::print(out, "H: {}\n", m.fields.front());
    else
        fmt::print(out, "H: per-node ({} values)\n", m.fields.size());
    if (m.noise.size() == 1) {
        fmt::print(out, "noise: {}\nf(0): {}\n", m.noise.front().describe(), m.noise.front().density_at_zero());
    } else {
        fmt::print(out, "noise: per-node ({} models)\n", m.noise.size());
    }

    if (m.noise.size() == 1) {
        const NoiseModel& noise = m.noise.front();
        if (!ctx.cfg.has_nodes() || g.type == "configuration")
            fmt::print(out, "critical_coupling_annealed: {}\n", critical_coupling(dist, noise));
        if (g.type == "complete")
            fmt::print(out, "critical_coupling_complete_limit: {}\n", 1.0 / (4.0 * noise.density_at_zero()));
        if (ctx.cfg.has_nodes() && m.coupling.mode != CouplingMode::full_matrix) {
            TransitionSpec spec;
            spec.target = TransitionTarget::full_model;
            spec.noise = noise;
            spec.model = ctx.cfg.build_template(ctx.seed);
            if (auto jc = analytic_transition(spec))
                fmt::print(out, "critical_coupling: {}\n", *jc);
        }
    }
    if (coupling_vanishes(m.coupling))
        fmt::print(out, "no interaction: closed-form equilibrium\n");
    return kOk;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Quantal response equilibria and their dynamics on graphs", "qrenet"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    Overrides overrides;
    std::optional<double> J, H, beta;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<unsigned> threads;
    app.add_option("-c,--config", config_path, "JSON config file")->required();
    app.add_option("--J", J, "override the coupling strength");
    app.add_option("--H", H, "override the field (uniform)");
    app.add_option("--beta", beta, "override the logistic slope");
    app.add_option("--seed", seed, "override the seed");
    app.add_option("--out", out_dir, "override the output directory");
    app.add_option("--threads", threads, "worker threads (default: all cores)");

    using Handler = int (*)(Context&);
    const std::vector<std::tuple<std::string, std::string, Handler>> commands = {
        {"solve", "one equilibrium from a start point", cmd_solve},
        {"enumerate", "all equilibria found by multistart", cmd_enumerate},
        {"nash", "pure Nash equilibria by exhaustive search", cmd_nash},
        {"annealed", "annealed degree-class reduction", cmd_annealed},
        {"dynamics", "mean-field ODE trajectory", cmd_dynamics},
        {"simulate", "event simulation of the revision process", cmd_simulate},
        {"master", "exact master equation", cmd_master},
        {"sweep", "bifurcation diagram over a parameter grid", cmd_sweep},
        {"transition", "critical coupling by bisection", cmd_transition},
        {"describe", "model summary", cmd_describe},
    };
    for (const auto& [name, help, fn] : commands)
        app.add_subcommand(name, help);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        app.exit(e, out, err);
        return kOk;
    } catch (const CLI::CallForAllHelp& e) {
        app.exit(e, out, err);
        return kOk;
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kInvalid;
    }
    overrides.J = J;
    overrides.H = H;
    overrides.beta = beta;
    overrides.seed = seed;
    overrides.out = out_dir;
    overrides.threads = threads;

    Handler handler = nullptr;
    for (const auto& [name, help, fn] : commands)
        if (app.got_subcommand(name))
            handler = fn;

    std::optional<Context> ctx;
    try {
        RunConfig cfg = RunConfig::load(config_path);
        cfg.apply(overrides);
        const std::uint64_t effective_seed = cfg.seed ? *cfg.seed : std::random_device{}();
        unsigned workers = cfg.threads.value_or(0);
        if (workers == 0)
            workers = std::max(1u, std::thread::hardware_concurrency());
        ctx.emplace(Context{std::move(cfg), effective_seed, workers, out, err, {}, false});
        const int code = handler(*ctx);
        ctx->artifacts.flush(out);
        return code;
    } catch (const ConfigError& e) {
        fmt::print(err, "error: {}\n", e.what());
        return kInvalid;
    } catch (const NotConverged& e) {
        fmt::print(err, "error: {}\n", e.message);
        try {
            ctx->artifacts.flush(out);
        } catch (const std::exception& w) {
            fmt::print(err, "error: {}\n", w.what());
        }
        return kNoConvergence;
    } catch (const ConvergenceError& e) {
        fmt::print(err, "error: {} (residual {:.3g} after {} iterations)\n", e.what(), e.residual, e.iterations);
        return kNoConvergence;
    } catch (const std::exception& e) {
        fmt::print(err, "error: {}\n", e.what());
        return kFailure;
    }
}

} // namespace qrenet::cli
