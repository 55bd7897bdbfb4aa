#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "qrenet/graph.hpp"
#include "qrenet/noise.hpp"

namespace qrenet {

struct WeightEntry {
    std::size_t i;
    std::size_t j;
    double w;
};

// Sparse row storage of the effective interaction weights w_ij = g_ij J_ij.
class InteractionMatrix {
  public:
    InteractionMatrix() = default;
    InteractionMatrix(std::size_t n, std::vector<WeightEntry> entries);

    std::size_t size() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }
    std::size_t nonzeros() const { return cols_.size(); }

    std::span<const std::size_t> row_cols(std::size_t i) const {
        return {cols_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
    }
    std::span<const double> row_weights(std::size_t i) const {
        return {weights_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
    }
    // Column view: rows i that read node j, with w_ij.
    std::span<const std::size_t> col_rows(std::size_t j) const {
        return {t_rows_.data() + t_offsets_[j], t_offsets_[j + 1] - t_offsets_[j]};
    }
    std::span<const double> col_weights(std::size_t j) const {
        return {t_weights_.data() + t_offsets_[j], t_offsets_[j + 1] - t_offsets_[j]};
    }

    double max_abs() const;
    double max_abs_row_sum() const;
    bool symmetric(double tol = 1e-14) const;
    bool has_diagonal() const;
    Eigen::MatrixXd dense() const;

  private:
    std::vector<std::size_t> offsets_;
    std::vector<std::size_t> cols_;
    std::vector<double> weights_;
    std::vector<std::size_t> t_offsets_;
    std::vector<std::size_t> t_rows_;
    std::vector<double> t_weights_;
};

// A full game instance: agents, interaction weights, idiosyncratic fields and
// noise.  Agent i's utility advantage for s_i = +1 is 2 H_i + 2 sum_j w_ij <s_j>.
//
// Games normally come from a graph plus a coupling rule (on_graph).  Weighted
// systems that are not simple graphs (dense annealed weights, an aggregated
// node that feels its own average) use from_weights.
class GameModel {
  public:
    // `fields` and `noise` have length 1 (shared) or n.
    static GameModel on_graph(GraphSpec graph, const CouplingSpec& coupling, std::vector<double> fields,
                              std::vector<NoiseModel> noise);
    static GameModel from_weights(std::size_t n, std::vector<WeightEntry> weights, std::vector<double> fields,
                                  std::vector<NoiseModel> noise);

    std::size_t size() const { return fields_.size(); }
    const InteractionMatrix& weights() const { return weights_; }
    const Eigen::VectorXd& fields() const { return fields_; }
    double field(std::size_t i) const { return fields_[static_cast<Eigen::Index>(i)]; }
    const NoiseModel& noise(std::size_t i) const { return noise_.size() == 1 ? noise_[0] : noise_[i]; }
    bool shared_noise() const;
    const std::optional<GraphSpec>& graph() const { return graph_; }
    bool interacting() const { return weights_.nonzeros() > 0 && weights_.max_abs() > 0.0; }

  private:
    GameModel() = default;
    void init_fields_and_noise(std::size_t n, std::vector<double> fields, std::vector<NoiseModel> noise);

    InteractionMatrix weights_;
    Eigen::VectorXd fields_;
    std::vector<NoiseModel> noise_;
    std::optional<GraphSpec> graph_;
};

} // namespace qrenet
