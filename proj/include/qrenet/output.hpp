#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "qrenet/annealed.hpp"
#include "qrenet/dynamics.hpp"
#include "qrenet/experiments.hpp"
#include "qrenet/solver.hpp"

namespace qrenet {

// Every writer prints doubles in shortest round-trip form, so identical
// inputs give byte-identical text.

std::string solution_csv(const EquilibriumSolution& sol);                    // node_id,m
std::string equilibria_csv(const std::vector<EquilibriumSolution>& sols);   // equilibrium_id,node_id,m
nlohmann::json solution_json(const EquilibriumSolution& sol);
nlohmann::json equilibria_json(const EquilibriumSet& set);

std::string pure_nash_csv(const std::vector<std::vector<int>>& profiles);  // profile_id,node_id,s

std::string bifurcation_csv(const std::vector<BifurcationRecord>& records);
nlohmann::json bifurcation_json(const std::vector<BifurcationRecord>& records);
std::string transition_csv(const TransitionResult& result);
nlohmann::json transition_json(const TransitionResult& result);

nlohmann::json annealed_json(const AnnealedModel& model, const std::vector<double>& roots);
nlohmann::json comparison_json(const AnnealedComparison& report);

std::string trajectory_csv(const Trajectory& traj);                          // t,m_0,...
std::string events_csv(const std::vector<FlipEvent>& events);               // t,agent,new_s
std::string distribution_csv(const std::vector<double>& p);                 // bitmask,probability
std::string distribution_csv(const Eigen::VectorXd& p);

// Writes `text` to `path`, creating parent directories.
void write_text(const std::string& path, const std::string& text);

} // namespace qrenet
