#pragma once

#include <map>
#include <vector>

#include <Eigen/Dense>

#include "qrenet/game.hpp"
#include "qrenet/graph.hpp"
#include "qrenet/noise.hpp"
#include "qrenet/rootfind.hpp"

namespace qrenet {

// Annealed approximation: adjacency replaced by k_i k_j / (N <k>), so nodes of
// equal degree share one average m_k and everything closes on the weighted
// average m_w = sum_k (k pi_k / <k>) m_k.
struct AnnealedModel {
    DegreeDistribution dist;
    double J = 0.0;
    double H = 0.0;
    NoiseModel noise = NoiseModel::logistic(1.0);
};

// m_k = 2 F(2H + 2 J k m_w) - 1
double degree_class_average(const AnnealedModel& model, int k, double m_w);
std::map<int, double> degree_class_averages(const AnnealedModel& model, double m_w);

// sum_k (k pi_k / <k>) 2 F(2H + 2 J k m_w) - 1 - m_w
double weighted_defect(const AnnealedModel& model, double m_w);
// Same right-hand side with the "-1" kept inside the degree sum.
double weighted_defect_inner(const AnnealedModel& model, double m_w);

// All roots of the weighted-average equation in [-1, 1].
std::vector<double> solve_weighted(const AnnealedModel& model, const ScanOptions& scan = {});

// J* = <k> / (4 <k^2> f(0)); the condition holds at zero field only.
double critical_coupling(const DegreeDistribution& dist, const NoiseModel& noise);

// Dense k_i k_j / (N <k>) including the diagonal, so row i sums to k_i.
Eigen::MatrixXd annealed_adjacency(const GraphSpec& graph, std::size_t max_nodes = 4096);

// The dense annealed weights (times J) as a game on the graph's nodes.
GameModel annealed_game(const GraphSpec& graph, double J, double H, const NoiseModel& noise,
                        std::size_t max_nodes = 4096);

} // namespace qrenet
