#pragma once

// Seeded random models for property-style tests.

#include <algorithm>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "qrenet/game.hpp"
#include "qrenet/graph.hpp"
#include "qrenet/noise.hpp"

namespace fixture {

struct RandomModel {
    qrenet::GameModel model;
    std::string label;
};

inline qrenet::NoiseModel random_noise(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    switch (rng() % 3) {
    case 0: return qrenet::NoiseModel::logistic(0.5 + 2.5 * u(rng));
    case 1: return qrenet::NoiseModel::gaussian(0.3 + 1.5 * u(rng));
    default: return qrenet::NoiseModel::uniform(0.5 + 1.5 * u(rng));
    }
}

inline qrenet::GraphSpec random_graph(std::mt19937_64& rng, std::size_t n, std::string& label) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    switch (rng() % 5) {
    case 0: label = fmt::format("complete({})", n); return qrenet::complete_graph(n);
    case 1: label = fmt::format("star({})", n); return qrenet::star_graph(n);
    case 2:
        if (n >= 3) {
            label = fmt::format("cycle({})", n);
            return qrenet::cycle_graph(n);
        }
        [[fallthrough]];
    case 3: {
        std::vector<qrenet::Edge> edges;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                if (u(rng) < 0.25)
                    edges.emplace_back(i, j);
        label = fmt::format("gnp({}, 0.25)", n);
        return qrenet::GraphSpec(n, edges);
    }
    default: {
        std::vector<qrenet::Edge> edges;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (i != j && u(rng) < 0.2)
                    edges.emplace_back(i, j);
        label = fmt::format("directed gnp({}, 0.2)", n);
        return qrenet::GraphSpec(n, edges, true);
    }
    }
}

// `contraction` scales J so that 4 f(0) max_i sum_j |w_ij| <= 0.8, which makes
// the QRE map a contraction (the difference densities used here peak at 0).
inline RandomModel random_model(std::uint64_t seed, std::size_t max_n, bool contraction) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const std::size_t n = 2 + rng() % (max_n - 1);
    std::string label;
    qrenet::GraphSpec graph = random_graph(rng, n, label);

    std::vector<qrenet::NoiseModel> noise;
    if (rng() % 3 == 0) {
        for (std::size_t i = 0; i < n; ++i)
            noise.push_back(random_noise(rng));
    } else {
        noise.push_back(random_noise(rng));
    }
    double f0 = 0.0;
    for (const auto& nz : noise)
        f0 = std::max(f0, nz.density_at_zero());

    std::size_t max_deg = 1;
    for (std::size_t i = 0; i < n; ++i)
        max_deg = std::max(max_deg, graph.neighbors(i).size());
    const double contraction_J = 0.8 / (4.0 * f0 * static_cast<double>(max_deg));
    const double J = contraction ? contraction_J * u(rng) : contraction_J * 3.0 * u(rng);

    std::vector<double> fields;
    if (rng() % 2) {
        fields.push_back(0.0);
    } else {
        for (std::size_t i = 0; i < n; ++i)
            fields.push_back(0.6 * u(rng) - 0.3);
    }
    label += fmt::format(", J={:.4f}, noise={}{}", J, noise.size() == 1 ? "" : "per-node ", noise.front().describe());
    return {qrenet::GameModel::on_graph(std::move(graph), qrenet::CouplingSpec::uniform(J), std::move(fields),
                                        std::move(noise)),
            label};
}

} // namespace fixture
