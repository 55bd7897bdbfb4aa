#include "qrenet/annealed.hpp"

#include <stdexcept>

#include <fmt/format.h>

namespace qrenet {

double degree_class_average(const AnnealedModel& model, int k, double m_w) {
    return 2.0 * model.noise.cdf_diff(2.0 * model.H + 2.0 * model.J * k * m_w) - 1.0;
}

std::map<int, double> degree_class_averages(const AnnealedModel& model, double m_w) {
    std::map<int, double> out;
    for (int k : model.dist.support())
        out[k] = degree_class_average(model, k, m_w);
    return out;
}

double weighted_defect(const AnnealedModel& model, double m_w) {
    const auto& support = model.dist.support();
    const auto& probs = model.dist.probs();
    double acc = 0.0;
    for (std::size_t s = 0; s < support.size(); ++s) {
        const double weight = support[s] * probs[s] / model.dist.mean();
        acc += weight * 2.0 * model.noise.cdf_diff(2.0 * model.H + 2.0 * model.J * support[s] * m_w);
    }
    return acc - 1.0 - m_w;
}

double weighted_defect_inner(const AnnealedModel& model, double m_w) {
    const auto& support = model.dist.support();
    const auto& probs = model.dist.probs();
    double acc = 0.0;
    for (std::size_t s = 0; s < support.size(); ++s) {
        const double weight = support[s] * probs[s] / model.dist.mean();
        acc += weight * degree_class_average(model, support[s], m_w);
    }
    return acc - m_w;
}

std::vector<double> solve_weighted(const AnnealedModel& model, const ScanOptions& scan) {
    return scan_roots([&](double m) { return weighted_defect(model, m); }, -1.0, 1.0, scan);
}

double critical_coupling(const DegreeDistribution& dist, const NoiseModel& noise) {
    if (!(dist.second_moment() > 0.0))
        throw std::invalid_argument("critical coupling: <k^2> must be positive");
    const double f0 = noise.density_at_zero();
    if (!(f0 > 0.0))
        throw std::invalid_argument("critical coupling: f(0) must be positive");
    return dist.mean() / (4.0 * dist.second_moment() * f0);
}

Eigen::MatrixXd annealed_adjacency(const GraphSpec& graph, std::size_t max_nodes) {
    const std::size_t n = graph.num_nodes();
    if (n > max_nodes)
        throw std::invalid_argument(fmt::format("annealed adjacency: {} nodes exceed the dense limit {}", n, max_nodes));
    Eigen::VectorXd k(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i)
        k[static_cast<Eigen::Index>(i)] = static_cast<double>(graph.degree(i));
    const double stubs = k.sum();
    if (!(stubs > 0.0))
        throw std::invalid_argument("annealed adjacency: graph has no edges");
    // N <k> is the stub total.
    return (k * k.transpose()) / stubs;
}

GameModel annealed_game(const GraphSpec& graph, double J, double H, const NoiseModel& noise, std::size_t max_nodes) {
    const Eigen::MatrixXd A = annealed_adjacency(graph, max_nodes);
    std::vector<WeightEntry> weights;
    weights.reserve(static_cast<std::size_t>(A.size()));
    for (Eigen::Index i = 0; i < A.rows(); ++i)
        for (Eigen::Index j = 0; j < A.cols(); ++j)
            if (A(i, j) != 0.0)
                weights.push_back({static_cast<std::size_t>(i), static_cast<std::size_t>(j), J * A(i, j)});
    return GameModel::from_weights(graph.num_nodes(), std::move(weights), {H}, {noise});
}

} // namespace qrenet
