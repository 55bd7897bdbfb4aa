#include "qrenet/game.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <tuple>

#include <fmt/format.h>

namespace qrenet {

InteractionMatrix::InteractionMatrix(std::size_t n, std::vector<WeightEntry> entries) {
    for (const auto& e : entries) {
        if (e.i >= n || e.j >= n)
            throw std::invalid_argument(fmt::format("weight ({}, {}) out of range for {} nodes", e.i, e.j, n));
        if (!std::isfinite(e.w))
            throw std::invalid_argument(fmt::format("weight ({}, {}) is not finite", e.i, e.j));
    }
    std::sort(entries.begin(), entries.end(),
              [](const WeightEntry& a, const WeightEntry& b) { return std::tie(a.i, a.j) < std::tie(b.i, b.j); });
    for (std::size_t k = 1; k < entries.size(); ++k)
        if (entries[k].i == entries[k - 1].i && entries[k].j == entries[k - 1].j)
            throw std::invalid_argument(fmt::format("weight ({}, {}) given twice", entries[k].i, entries[k].j));

    offsets_.assign(n + 1, 0);
    for (const auto& e : entries) ++offsets_[e.i + 1];
    for (std::size_t i = 0; i < n; ++i) offsets_[i + 1] += offsets_[i];
    cols_.reserve(entries.size());
    weights_.reserve(entries.size());
    for (const auto& e : entries) {
        cols_.push_back(e.j);
        weights_.push_back(e.w);
    }

    t_offsets_.assign(n + 1, 0);
    for (const auto& e : entries) ++t_offsets_[e.j + 1];
    for (std::size_t j = 0; j < n; ++j) t_offsets_[j + 1] += t_offsets_[j];
    t_rows_.resize(entries.size());
    t_weights_.resize(entries.size());
    std::vector<std::size_t> fill(t_offsets_.begin(), t_offsets_.end() - 1);
    for (const auto& e : entries) {
        t_rows_[fill[e.j]] = e.i;
        t_weights_[fill[e.j]] = e.w;
        ++fill[e.j];
    }
}

double InteractionMatrix::max_abs() const {
    double best = 0.0;
    for (double w : weights_) best = std::max(best, std::abs(w));
    return best;
}

double InteractionMatrix::max_abs_row_sum() const {
    double best = 0.0;
    for (std::size_t i = 0; i < size(); ++i) {
        double row = 0.0;
        for (double w : row_weights(i)) row += std::abs(w);
        best = std::max(best, row);
    }
    return best;
}

bool InteractionMatrix::symmetric(double tol) const {
    for (std::size_t i = 0; i < size(); ++i) {
        auto cols = row_cols(i);
        auto ws = row_weights(i);
        auto tcols = col_rows(i);
        auto tws = col_weights(i);
        if (cols.size() != tcols.size())
            return false;
        // Both views are sorted by the other index.
        for (std::size_t k = 0; k < cols.size(); ++k)
            if (cols[k] != tcols[k] || std::abs(ws[k] - tws[k]) > tol * std::max(1.0, std::abs(ws[k])))
                return false;
    }
    return true;
}

bool InteractionMatrix::has_diagonal() const {
    for (std::size_t i = 0; i < size(); ++i)
        for (std::size_t j : row_cols(i))
            if (j == i)
                return true;
    return false;
}

Eigen::MatrixXd InteractionMatrix::dense() const {
    const auto n = static_cast<Eigen::Index>(size());
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t i = 0; i < size(); ++i) {
        auto cols = row_cols(i);
        auto ws = row_weights(i);
        for (std::size_t k = 0; k < cols.size(); ++k)
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(cols[k])) = ws[k];
    }
    return out;
}

void GameModel::init_fields_and_noise(std::size_t n, std::vector<double> fields, std::vector<NoiseModel> noise) {
    if (n == 0)
        throw std::invalid_argument("game: at least one agent required");
    if (fields.size() != 1 && fields.size() != n)
        throw std::invalid_argument(fmt::format("game: {} fields given for {} agents", fields.size(), n));
    if (noise.size() != 1 && noise.size() != n)
        throw std::invalid_argument(fmt::format("game: {} noise models given for {} agents", noise.size(), n));
    fields_.resize(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const double h = fields.size() == 1 ? fields[0] : fields[i];
        if (!std::isfinite(h))
            throw std::invalid_argument(fmt::format("game: field of agent {} is not finite", i));
        fields_[static_cast<Eigen::Index>(i)] = h;
    }
    noise_ = std::move(noise);
}

GameModel GameModel::on_graph(GraphSpec graph, const CouplingSpec& coupling, std::vector<double> fields,
                              std::vector<NoiseModel> noise) {
    const std::size_t n = graph.num_nodes();
    if (!std::isfinite(coupling.J))
        throw std::invalid_argument("game: coupling J is not finite");
    std::vector<WeightEntry> weights;
    switch (coupling.mode) {
    case CouplingMode::uniform:
    case CouplingMode::uniform_over_n: {
        const double w = coupling.mode == CouplingMode::uniform ? coupling.J : coupling.J / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j : graph.neighbors(i))
                weights.push_back({i, j, w});
        break;
    }
    case CouplingMode::full_matrix: {
        std::map<std::pair<std::size_t, std::size_t>, double> given;
        for (const auto& e : coupling.entries) {
            if (!graph.has_edge(e.i, e.j))
                throw std::invalid_argument(fmt::format("game: coupling ({}, {}) is not an edge of the graph", e.i, e.j));
            given[{e.i, e.j}] = e.value;
            if (!graph.directed())
                given.try_emplace({e.j, e.i}, e.value);
        }
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j : graph.neighbors(i)) {
                auto it = given.find({i, j});
                if (it == given.end())
                    throw std::invalid_argument(fmt::format("game: edge ({}, {}) has no coupling", i, j));
                weights.push_back({i, j, it->second});
            }
        break;
    }
    }
    GameModel model;
    model.weights_ = InteractionMatrix(n, std::move(weights));
    model.init_fields_and_noise(n, std::move(fields), std::move(noise));
    model.graph_ = std::move(graph);
    return model;
}

GameModel GameModel::from_weights(std::size_t n, std::vector<WeightEntry> weights, std::vector<double> fields,
                                  std::vector<NoiseModel> noise) {
    GameModel model;
    model.weights_ = InteractionMatrix(n, std::move(weights));
    model.init_fields_and_noise(n, std::move(fields), std::move(noise));
    return model;
}

bool GameModel::shared_noise() const { return noise_.size() == 1; }

} // namespace qrenet
