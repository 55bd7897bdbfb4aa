#include "qrenet/output.hpp"

#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <fmt/format.h>

namespace qrenet {

namespace {

using nlohmann::json;

json vector_json(const Eigen::VectorXd& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i)
        out.push_back(v[i]);
    return out;
}

std::string optional_number(const std::optional<double>& v) { return v ? fmt::format("{}", *v) : std::string(); }

} // namespace

std::string solution_csv(const EquilibriumSolution& sol) {
    std::string out = "node_id,m\n";
    for (Eigen::Index i = 0; i < sol.m.size(); ++i)
        out += fmt::format("{},{}\n", i, sol.m[i]);
    return out;
}

std::string equilibria_csv(const std::vector<EquilibriumSolution>& sols) {
    std::string out = "equilibrium_id,node_id,m\n";
    for (std::size_t e = 0; e < sols.size(); ++e)
        for (Eigen::Index i = 0; i < sols[e].m.size(); ++i)
            out += fmt::format("{},{},{}\n", e, i, sols[e].m[i]);
    return out;
}

json solution_json(const EquilibriumSolution& sol) {
    json out;
    out["m"] = vector_json(sol.m);
    out["m_mean"] = sol.m.size() ? sol.m.mean() : 0.0;
    out["residual"] = sol.residual;
    out["stability"] = std::string(to_string(sol.stability));
    out["eigen_min_real"] = sol.eigen_min_real;
    out["iterations"] = sol.iterations;
    out["method"] = sol.method;
    out["warnings"] = sol.warnings;
    return out;
}

json equilibria_json(const EquilibriumSet& set) {
    json out;
    out["starts"] = set.starts;
    out["failed_starts"] = set.failed_starts;
    out["equilibria"] = json::array();
    for (const auto& sol : set.solutions)
        out["equilibria"].push_back(solution_json(sol));
    return out;
}

std::string pure_nash_csv(const std::vector<std::vector<int>>& profiles) {
    std::string out = "profile_id,node_id,s\n";
    for (std::size_t p = 0; p < profiles.size(); ++p)
        for (std::size_t i = 0; i < profiles[p].size(); ++i)
            out += fmt::format("{},{},{}\n", p, i, profiles[p][i]);
    return out;
}

std::string bifurcation_csv(const std::vector<BifurcationRecord>& records) {
    std::string out = "param,branch_id,m_min,m_max,m_mean,stability\n";
    for (const auto& rec : records)
        for (const auto& bp : rec.equilibria)
            out += fmt::format("{},{},{},{},{},{}\n", rec.parameter, bp.branch_id, bp.m_min, bp.m_max, bp.m_mean,
                               to_string(bp.stability));
    return out;
}

json bifurcation_json(const std::vector<BifurcationRecord>& records) {
    json out = json::array();
    for (const auto& rec : records) {
        json r;
        r["param"] = rec.parameter;
        r["equilibria"] = json::array();
        for (const auto& bp : rec.equilibria)
            r["equilibria"].push_back({{"branch_id", bp.branch_id},
                                       {"m_min", bp.m_min},
                                       {"m_max", bp.m_max},
                                       {"m_mean", bp.m_mean},
                                       {"stability", std::string(to_string(bp.stability))}});
        r["births"] = rec.births;
        r["deaths"] = rec.deaths;
        if (rec.failed())
            r["error"] = rec.error;
        out.push_back(std::move(r));
    }
    return out;
}

std::string transition_csv(const TransitionResult& result) {
    return fmt::format("param_name,bracket_lo,bracket_hi,value,analytic_value\n{},{},{},{},{}\n",
                       result.parameter_name, result.bracket_lo, result.bracket_hi, result.value,
                       optional_number(result.analytic));
}

json transition_json(const TransitionResult& result) {
    json out;
    out["param_name"] = result.parameter_name;
    out["bracket_lo"] = result.bracket_lo;
    out["bracket_hi"] = result.bracket_hi;
    out["value"] = result.value;
    out["analytic_value"] = result.analytic ? json(*result.analytic) : json(nullptr);
    out["evaluations"] = result.evaluations;
    return out;
}

json annealed_json(const AnnealedModel& model, const std::vector<double>& roots) {
    json out;
    out["roots"] = roots;
    json table = json::array();
    for (double m_w : roots) {
        json row;
        row["m_w"] = m_w;
        json classes = json::object();
        for (const auto& [k, m] : degree_class_averages(model, m_w))
            classes[std::to_string(k)] = m;
        row["m_k"] = std::move(classes);
        table.push_back(std::move(row));
    }
    out["m_k"] = std::move(table);
    out["J_star"] = critical_coupling(model.dist, model.noise);
    return out;
}

json comparison_json(const AnnealedComparison& report) {
    json out;
    out["roots"] = report.roots;
    out["m_w"] = report.m_w;
    out["J_star"] = report.J_star;
    out["nodes"] = report.nodes;
    out["edges"] = report.edges;
    out["max_abs_discrepancy"] = report.max_abs_discrepancy;
    out["signs_agree"] = report.signs_agree;
    out["classes"] = json::array();
    for (const auto& c : report.classes)
        out["classes"].push_back({{"k", c.k},
                                  {"nodes", c.nodes},
                                  {"annealed", c.annealed},
                                  {"sampled", c.sampled},
                                  {"abs_diff", c.abs_diff}});
    return out;
}

std::string trajectory_csv(const Trajectory& traj) {
    std::string out = "t";
    const Eigen::Index n = traj.values.empty() ? 0 : traj.values.front().size();
    for (Eigen::Index i = 0; i < n; ++i)
        out += fmt::format(",m_{}", i);
    out += '\n';
    for (std::size_t r = 0; r < traj.times.size(); ++r) {
        out += fmt::format("{}", traj.times[r]);
        for (Eigen::Index i = 0; i < n; ++i)
            out += fmt::format(",{}", traj.values[r][i]);
        out += '\n';
    }
    return out;
}

std::string events_csv(const std::vector<FlipEvent>& events) {
    std::string out = "t,agent,new_s\n";
    for (const auto& e : events)
        out += fmt::format("{},{},{}\n", e.t, e.agent, e.new_s);
    return out;
}

std::string distribution_csv(const std::vector<double>& p) {
    std::string out = "bitmask,probability\n";
    for (std::size_t c = 0; c < p.size(); ++c)
        out += fmt::format("{},{}\n", c, p[c]);
    return out;
}

std::string distribution_csv(const Eigen::VectorXd& p) {
    return distribution_csv(std::vector<double>(p.data(), p.data() + p.size()));
}

void write_text(const std::string& path, const std::string& text) {
    const std::filesystem::path target(path);
    if (target.has_parent_path())
        std::filesystem::create_directories(target.parent_path());
    std::ofstream out(target, std::ios::binary);
    if (!out)
        throw std::runtime_error(fmt::format("cannot write '{}'", path));
    out << text;
    if (!out)
        throw std::runtime_error(fmt::format("error while writing '{}'", path));
}

} // namespace qrenet
