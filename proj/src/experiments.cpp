#include "qrenet/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <tuple>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include "qrenet/detail/parallel.hpp"
#include "qrenet/reductions.hpp"

namespace qrenet {

std::string_view to_string(SweepParameter p) {
    switch (p) {
    case SweepParameter::J: return "J";
    case SweepParameter::H: return "H";
    case SweepParameter::beta: return "beta";
    }
    return "unknown";
}

SweepParameter sweep_parameter_from_string(std::string_view name) {
    if (name == "J") return SweepParameter::J;
    if (name == "H") return SweepParameter::H;
    if (name == "beta") return SweepParameter::beta;
    throw std::invalid_argument(fmt::format("unknown sweep parameter '{}'", name));
}

std::string_view to_string(TransitionTarget t) {
    switch (t) {
    case TransitionTarget::complete_limit: return "complete_limit";
    case TransitionTarget::annealed: return "annealed";
    case TransitionTarget::full_model: return "graph";
    }
    return "unknown";
}

NoiseModel with_scale(const NoiseModel& noise, double scale) {
    switch (noise.kind()) {
    case NoiseKind::logistic_difference: return NoiseModel::logistic(scale);
    case NoiseKind::gaussian: return NoiseModel::gaussian(scale);
    case NoiseKind::uniform: return NoiseModel::uniform(scale);
    case NoiseKind::custom_density: break;
    }
    throw std::invalid_argument("custom noise densities cannot be rescaled");
}

GameModel ModelTemplate::build() const { return GameModel::on_graph(graph, coupling, fields, {noise}); }

ModelTemplate ModelTemplate::with(SweepParameter parameter, double value) const {
    ModelTemplate out = *this;
    switch (parameter) {
    case SweepParameter::J:
        if (coupling.mode == CouplingMode::full_matrix)
            throw std::invalid_argument("J cannot be swept with full-matrix couplings");
        out.coupling.J = value;
        break;
    case SweepParameter::H:
        out.fields = {value};
        break;
    case SweepParameter::beta:
        if (noise.kind() != NoiseKind::logistic_difference)
            throw std::invalid_argument("beta is only defined for logistic noise");
        out.noise = NoiseModel::logistic(value);
        break;
    }
    return out;
}

std::vector<double> grid_range(double from, double to, double step) {
    if (!(step > 0.0) || to < from)
        throw std::invalid_argument("grid_range: need from <= to and step > 0");
    std::vector<double> grid;
    const auto count = static_cast<std::size_t>(std::floor((to - from) / step + 1e-9));
    for (std::size_t k = 0; k <= count; ++k)
        grid.push_back(from + step * static_cast<double>(k));
    return grid;
}

namespace {

struct PointResult {
    std::vector<EquilibriumSolution> solutions;
    std::string error;
};

PointResult evaluate_point(const SweepSpec& spec, double value, const std::vector<Eigen::VectorXd>& seeds) {
    PointResult out;
    try {
        const GameModel model = spec.model.with(spec.parameter, value).build();
        MultistartSpec starts = spec.starts;
        starts.extra.insert(starts.extra.end(), seeds.begin(), seeds.end());
        starts.threads = 1;
        auto set = enumerate_equilibria(model, starts, spec.solver);
        if (set.solutions.empty())
            out.error = fmt::format("no start converged ({} starts)", set.starts);
        out.solutions = std::move(set.solutions);
    } catch (const std::exception& e) {
        out.error = e.what();
    }
    return out;
}

} // namespace

std::vector<BifurcationRecord> sweep(const SweepSpec& spec) {
    if (spec.grid.empty())
        throw std::invalid_argument("sweep: empty grid");
    for (std::size_t k = 1; k < spec.grid.size(); ++k)
        if (!(spec.grid[k] > spec.grid[k - 1]) && !(spec.grid[k] < spec.grid[k - 1]))
            throw std::invalid_argument("sweep: grid must be strictly monotone");
    const bool increasing = spec.grid.size() < 2 || spec.grid[1] > spec.grid[0];
    for (std::size_t k = 1; k < spec.grid.size(); ++k)
        if ((spec.grid[k] > spec.grid[k - 1]) != increasing)
            throw std::invalid_argument("sweep: grid must be strictly monotone");

    std::vector<PointResult> points(spec.grid.size());
    if (detail::resolve_threads(spec.threads) > 1) {
        detail::parallel_for(spec.grid.size(), spec.threads,
                             [&](std::size_t k) { points[k] = evaluate_point(spec, spec.grid[k], {}); });
    } else {
        std::vector<Eigen::VectorXd> seeds;
        for (std::size_t k = 0; k < spec.grid.size(); ++k) {
            points[k] = evaluate_point(spec, spec.grid[k], seeds);
            if (!points[k].error.empty())
                continue;
            seeds.clear();
            for (const auto& sol : points[k].solutions)
                seeds.push_back(sol.m);
        }
    }

    std::vector<BifurcationRecord> records(spec.grid.size());
    std::vector<std::pair<int, Eigen::VectorXd>> previous;
    int next_id = 0;
    for (std::size_t k = 0; k < spec.grid.size(); ++k) {
        BifurcationRecord& rec = records[k];
        rec.parameter = spec.grid[k];
        rec.error = points[k].error;
        if (rec.failed())
            continue;
        const auto& sols = points[k].solutions;

        std::vector<std::tuple<double, std::size_t, std::size_t>> pairs;
        for (std::size_t p = 0; p < previous.size(); ++p)
            for (std::size_t c = 0; c < sols.size(); ++c) {
                const double d = (previous[p].second - sols[c].m).lpNorm<Eigen::Infinity>();
                if (d <= spec.max_jump)
                    pairs.emplace_back(d, p, c);
            }
        std::sort(pairs.begin(), pairs.end());
        std::vector<int> assigned(sols.size(), -1);
        std::vector<bool> used(previous.size(), false);
        for (const auto& [d, p, c] : pairs) {
            if (used[p] || assigned[c] >= 0)
                continue;
            used[p] = true;
            assigned[c] = previous[p].first;
        }
        for (std::size_t p = 0; p < previous.size(); ++p)
            if (!used[p])
                rec.deaths.push_back(previous[p].first);

        std::vector<std::pair<int, Eigen::VectorXd>> current;
        for (std::size_t c = 0; c < sols.size(); ++c) {
            if (assigned[c] < 0) {
                assigned[c] = next_id++;
                rec.births.push_back(assigned[c]);
            }
            BranchPoint bp;
            bp.branch_id = assigned[c];
            bp.m = sols[c].m;
            bp.m_min = sols[c].m.minCoeff();
            bp.m_max = sols[c].m.maxCoeff();
            bp.m_mean = sols[c].m.mean();
            bp.stability = sols[c].stability;
            rec.equilibria.push_back(std::move(bp));
            current.emplace_back(assigned[c], sols[c].m);
        }
        std::sort(rec.equilibria.begin(), rec.equilibria.end(),
                  [](const BranchPoint& a, const BranchPoint& b) { return a.branch_id < b.branch_id; });
        std::sort(rec.births.begin(), rec.births.end());
        std::sort(rec.deaths.begin(), rec.deaths.end());
        previous = std::move(current);
    }
    return records;
}

int equilibrium_count(const TransitionSpec& spec, double value) {
    const bool slope = spec.parameter == SweepParameter::beta;
    if (spec.parameter == SweepParameter::H)
        throw std::invalid_argument("transitions are located in J or beta at zero field");
    switch (spec.target) {
    case TransitionTarget::complete_limit: {
        const NoiseModel noise = slope ? with_scale(spec.noise, value) : spec.noise;
        const double J = slope ? spec.coupling : value;
        return static_cast<int>(curie_weiss_roots(noise, J, 0.0, spec.scan).size());
    }
    case TransitionTarget::annealed: {
        if (!spec.dist)
            throw std::invalid_argument("annealed transition needs a degree distribution");
        AnnealedModel model{*spec.dist, slope ? spec.coupling : value, 0.0,
                            slope ? with_scale(spec.noise, value) : spec.noise};
        return static_cast<int>(solve_weighted(model, spec.scan).size());
    }
    case TransitionTarget::full_model: {
        if (!spec.model)
            throw std::invalid_argument("graph transition needs a model template");
        const GameModel model = spec.model->with(SweepParameter::H, 0.0).with(spec.parameter, value).build();
        SolverOptions options = spec.solver;
        options.classify = false;
        return static_cast<int>(enumerate_equilibria(model, spec.starts, options).solutions.size());
    }
    }
    return 0;
}

std::optional<double> analytic_transition(const TransitionSpec& spec) {
    const bool slope = spec.parameter == SweepParameter::beta;
    if (slope && spec.noise.kind() != NoiseKind::logistic_difference)
        return std::nullopt;
    // For logistic noise f(0) = beta / 4, so "4 J f(0) c = 1" reads beta J c = 1.
    auto solve_for = [&](double c) -> std::optional<double> {
        if (!(c > 0.0))
            return std::nullopt;
        if (slope)
            return 1.0 / (spec.coupling * c);
        return 1.0 / (4.0 * spec.noise.density_at_zero() * c);
    };
    switch (spec.target) {
    case TransitionTarget::complete_limit:
        return solve_for(1.0);
    case TransitionTarget::annealed:
        if (!spec.dist)
            return std::nullopt;
        return solve_for(spec.dist->second_moment() / spec.dist->mean());
    case TransitionTarget::full_model: {
        if (!spec.model || spec.model->coupling.mode == CouplingMode::full_matrix)
            return std::nullopt;
        if (spec.model->graph.num_nodes() > 2000)
            return std::nullopt;
        const ModelTemplate unit = spec.model->with(SweepParameter::J, 1.0);
        const GameModel model = unit.build();
        if (!model.weights().symmetric())
            return std::nullopt;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(model.weights().dense(), Eigen::EigenvaluesOnly);
        const double mu_max = eig.eigenvalues().maxCoeff();
        if (slope) {
            TransitionSpec copy = spec;
            copy.noise = spec.model->noise;
            if (copy.noise.kind() != NoiseKind::logistic_difference)
                return std::nullopt;
            return 1.0 / (spec.model->coupling.J * mu_max);
        }
        return 1.0 / (4.0 * spec.model->noise.density_at_zero() * mu_max);
    }
    }
    return std::nullopt;
}

TransitionResult find_transition(const TransitionSpec& spec) {
    if (!(spec.hi > spec.lo))
        throw std::invalid_argument("find_transition: bracket must satisfy lo < hi");
    if (!(spec.rel_tol > 0.0))
        throw std::invalid_argument("find_transition: rel_tol must be positive");
    TransitionResult result;
    result.parameter_name = std::string(to_string(spec.parameter));
    result.bracket_lo = spec.lo;
    result.bracket_hi = spec.hi;

    auto ordered = [&](double v) {
        ++result.evaluations;
        return equilibrium_count(spec, v) > 1;
    };
    double lo = spec.lo;
    double hi = spec.hi;
    const bool at_lo = ordered(lo);
    const bool at_hi = ordered(hi);
    if (at_lo == at_hi)
        throw std::invalid_argument(
            fmt::format("find_transition: equilibrium-count predicate does not change on [{}, {}]", lo, hi));
    while (hi - lo > spec.rel_tol * std::max(std::abs(lo), std::abs(hi))) {
        const double mid = 0.5 * (lo + hi);
        if (ordered(mid) == at_lo)
            lo = mid;
        else
            hi = mid;
    }
    result.value = 0.5 * (lo + hi);
    result.analytic = analytic_transition(spec);
    return result;
}

AnnealedComparison compare_annealed_sampled(const DegreeDistribution& dist, std::size_t n, double J, double H,
                                            const NoiseModel& noise, std::uint64_t seed,
                                            const SolverOptions& solver) {
    AnnealedComparison report;
    const AnnealedModel annealed{dist, J, H, noise};
    report.roots = solve_weighted(annealed);
    if (report.roots.empty())
        throw std::runtime_error("annealed equation has no root");
    report.m_w = report.roots.back();
    report.J_star = critical_coupling(dist, noise);

    const GraphSpec graph = configuration_model_sample(dist, n, seed);
    report.nodes = graph.num_nodes();
    report.edges = graph.edge_count();
    const GameModel model = GameModel::on_graph(graph, CouplingSpec::uniform(J), {H}, {noise});
    SolverOptions options = solver;
    options.classify = false;
    const double start = report.m_w < 0.0 ? -1.0 : 1.0;
    const auto sol = solve_newton(model, Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), start), options);

    std::map<int, std::pair<double, std::size_t>> by_class;
    for (std::size_t i = 0; i < n; ++i) {
        auto& slot = by_class[static_cast<int>(graph.degree(i))];
        slot.first += sol.m[static_cast<Eigen::Index>(i)];
        ++slot.second;
    }
    for (const auto& [k, acc] : by_class) {
        DegreeClassComparison row;
        row.k = k;
        row.nodes = acc.second;
        row.annealed = degree_class_average(annealed, k, report.m_w);
        row.sampled = acc.first / static_cast<double>(acc.second);
        row.abs_diff = std::abs(row.annealed - row.sampled);
        report.max_abs_discrepancy = std::max(report.max_abs_discrepancy, row.abs_diff);
        constexpr double kZero = 1e-8;
        const bool both_zero = std::abs(row.annealed) < kZero && std::abs(row.sampled) < kZero;
        if (!both_zero && (row.annealed > 0.0) != (row.sampled > 0.0))
            report.signs_agree = false;
        report.classes.push_back(row);
    }
    return report;
}

} // namespace qrenet
