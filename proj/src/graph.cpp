#include "qrenet/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include <fmt/format.h>

namespace qrenet {

GraphSpec::GraphSpec(std::size_t n, const std::vector<Edge>& edges, bool directed)
    : directed_(directed), neighbors_(n) {
    for (const auto& [i, j] : edges) {
        if (i >= n || j >= n)
            throw std::invalid_argument(fmt::format("graph: edge ({}, {}) out of range for {} nodes", i, j, n));
        if (i == j)
            throw std::invalid_argument(fmt::format("graph: self-loop at node {}", i));
        neighbors_[i].push_back(j);
        if (!directed)
            neighbors_[j].push_back(i);
    }
    for (auto& list : neighbors_) {
        std::sort(list.begin(), list.end());
        list.erase(std::unique(list.begin(), list.end()), list.end());
    }
}

std::size_t GraphSpec::edge_count() const {
    std::size_t total = 0;
    for (const auto& list : neighbors_)
        total += list.size();
    return directed_ ? total : total / 2;
}

bool GraphSpec::has_edge(std::size_t i, std::size_t j) const {
    const auto& list = neighbors_.at(i);
    return std::binary_search(list.begin(), list.end(), j);
}

std::vector<Edge> GraphSpec::edges() const {
    std::vector<Edge> out;
    for (std::size_t i = 0; i < neighbors_.size(); ++i)
        for (std::size_t j : neighbors_[i])
            if (directed_ || i < j)
                out.emplace_back(i, j);
    return out;
}

GraphSpec complete_graph(std::size_t n) {
    if (n < 2)
        throw std::invalid_argument("complete graph needs n >= 2");
    std::vector<Edge> edges;
    edges.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            edges.emplace_back(i, j);
    return GraphSpec(n, edges);
}

GraphSpec star_graph(std::size_t n) {
    if (n < 2)
        throw std::invalid_argument("star graph needs n >= 2");
    std::vector<Edge> edges;
    for (std::size_t j = 1; j < n; ++j)
        edges.emplace_back(0, j);
    return GraphSpec(n, edges);
}

GraphSpec cycle_graph(std::size_t n) {
    if (n < 3)
        throw std::invalid_argument("cycle graph needs n >= 3");
    std::vector<Edge> edges;
    for (std::size_t i = 0; i < n; ++i)
        edges.emplace_back(i, (i + 1) % n);
    return GraphSpec(n, edges);
}

GraphSpec parse_edge_list(std::string_view text, bool directed, std::size_t num_nodes) {
    std::vector<Edge> edges;
    std::size_t max_index = 0;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#')
            continue;
        std::istringstream fields(line);
        long long i = -1;
        long long j = -1;
        std::string trailing;
        if (!(fields >> i >> j) || (fields >> trailing))
            throw std::invalid_argument(fmt::format("edge list line {}: expected 'i j'", line_no));
        if (i < 0 || j < 0)
            throw std::invalid_argument(fmt::format("edge list line {}: negative node index", line_no));
        if (i == j)
            throw std::invalid_argument(fmt::format("edge list line {}: self-loop at node {}", line_no, i));
        const auto ui = static_cast<std::size_t>(i);
        const auto uj = static_cast<std::size_t>(j);
        if (num_nodes != 0 && (ui >= num_nodes || uj >= num_nodes))
            throw std::invalid_argument(
                fmt::format("edge list line {}: index out of range for {} nodes", line_no, num_nodes));
        max_index = std::max({max_index, ui, uj});
        edges.emplace_back(ui, uj);
    }
    if (edges.empty() && num_nodes == 0)
        throw std::invalid_argument("edge list is empty");
    const std::size_t n = num_nodes != 0 ? num_nodes : max_index + 1;
    return GraphSpec(n, edges, directed);
}

GraphSpec load_edge_list(const std::string& path, bool directed, std::size_t num_nodes) {
    std::ifstream in(path);
    if (!in)
        throw std::invalid_argument(fmt::format("cannot open edge list '{}'", path));
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_edge_list(buffer.str(), directed, num_nodes);
}

std::string_view to_string(CouplingMode mode) {
    switch (mode) {
    case CouplingMode::uniform: return "uniform";
    case CouplingMode::uniform_over_n: return "uniform_over_n";
    case CouplingMode::full_matrix: return "matrix";
    }
    return "unknown";
}

CouplingMode coupling_mode_from_string(std::string_view name) {
    if (name == "uniform") return CouplingMode::uniform;
    if (name == "uniform_over_n") return CouplingMode::uniform_over_n;
    if (name == "matrix") return CouplingMode::full_matrix;
    throw std::invalid_argument(fmt::format("unknown coupling mode '{}'", name));
}

DegreeDistribution::DegreeDistribution(std::vector<int> support, std::vector<double> probs)
    : support_(std::move(support)), probs_(std::move(probs)) {
    if (support_.empty() || support_.size() != probs_.size())
        throw std::invalid_argument("degree distribution: support and probabilities must be nonempty and aligned");
    double total = 0.0;
    for (std::size_t s = 0; s < support_.size(); ++s) {
        if (support_[s] < 0)
            throw std::invalid_argument("degree distribution: negative degree");
        if (!std::isfinite(probs_[s]) || probs_[s] < 0.0)
            throw std::invalid_argument("degree distribution: probabilities must be nonnegative");
        if (s > 0 && support_[s] <= support_[s - 1])
            throw std::invalid_argument("degree distribution: support must be strictly increasing");
        total += probs_[s];
        mean_ += probs_[s] * support_[s];
        second_ += probs_[s] * static_cast<double>(support_[s]) * support_[s];
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw std::invalid_argument(fmt::format("degree distribution: probabilities sum to {}", total));
    if (!(mean_ > 0.0))
        throw std::invalid_argument("degree distribution: mean degree must be positive");
}

DegreeDistribution DegreeDistribution::from_weights(const std::map<int, double>& weights) {
    double total = 0.0;
    for (const auto& [k, w] : weights) {
        if (!std::isfinite(w) || w < 0.0)
            throw std::invalid_argument("degree distribution: weights must be nonnegative");
        total += w;
    }
    if (!(total > 0.0))
        throw std::invalid_argument("degree distribution: weights sum to zero");
    std::vector<int> support;
    std::vector<double> probs;
    for (const auto& [k, w] : weights) {
        if (w == 0.0)
            continue;
        support.push_back(k);
        probs.push_back(w / total);
    }
    // Push the rounding residue into the largest class so the sum is one.
    double sum = 0.0;
    for (double p : probs) sum += p;
    auto largest = std::max_element(probs.begin(), probs.end());
    *largest += 1.0 - sum;
    return DegreeDistribution(std::move(support), std::move(probs));
}

int DegreeDistribution::max_degree() const { return support_.back(); }

double DegreeDistribution::prob(int k) const {
    auto it = std::lower_bound(support_.begin(), support_.end(), k);
    if (it == support_.end() || *it != k)
        return 0.0;
    return probs_[static_cast<std::size_t>(it - support_.begin())];
}

double total_variation(const DegreeDistribution& a, const DegreeDistribution& b) {
    std::map<int, double> diff;
    for (std::size_t s = 0; s < a.size(); ++s) diff[a.support()[s]] += a.probs()[s];
    for (std::size_t s = 0; s < b.size(); ++s) diff[b.support()[s]] -= b.probs()[s];
    double tv = 0.0;
    for (const auto& [k, d] : diff) tv += std::abs(d);
    return 0.5 * tv;
}

DegreeDistribution parse_degree_pmf(std::string_view text) {
    std::map<int, double> weights;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#')
            continue;
        std::istringstream fields(line);
        int k = -1;
        double p = 0.0;
        std::string trailing;
        if (!(fields >> k >> p) || (fields >> trailing))
            throw std::invalid_argument(fmt::format("degree pmf line {}: expected 'k pi_k'", line_no));
        if (k < 0 || p < 0.0)
            throw std::invalid_argument(fmt::format("degree pmf line {}: negative entry", line_no));
        if (weights.count(k))
            throw std::invalid_argument(fmt::format("degree pmf line {}: degree {} repeated", line_no, k));
        weights[k] = p;
    }
    double total = 0.0;
    for (const auto& [k, p] : weights) total += p;
    if (std::abs(total - 1.0) > 1e-6)
        throw std::invalid_argument(fmt::format("degree pmf: probabilities sum to {}", total));
    return DegreeDistribution::from_weights(weights);
}

DegreeDistribution load_degree_pmf(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::invalid_argument(fmt::format("cannot open degree pmf '{}'", path));
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_degree_pmf(buffer.str());
}

DegreeDistribution degree_distribution(const GraphSpec& graph) {
    if (graph.num_nodes() == 0)
        throw std::invalid_argument("degree distribution of an empty graph");
    std::map<int, double> counts;
    for (std::size_t i = 0; i < graph.num_nodes(); ++i)
        counts[static_cast<int>(graph.degree(i))] += 1.0;
    return DegreeDistribution::from_weights(counts);
}

namespace {

std::uint64_t edge_key(std::size_t a, std::size_t b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint64_t>(b);
}

} // namespace

GraphSpec configuration_model_sample(const DegreeDistribution& dist, std::size_t n, std::uint64_t seed) {
    if (n < 2)
        throw std::invalid_argument("configuration model needs n >= 2");
    if (static_cast<double>(dist.max_degree()) >= static_cast<double>(n))
        throw std::invalid_argument("configuration model: maximum degree must be below n");
    const double expected_stubs = dist.mean() * static_cast<double>(n);
    if (expected_stubs > 2e8)
        throw std::invalid_argument("configuration model: n <k> exceeds the memory budget");

    std::mt19937_64 rng(seed);
    std::discrete_distribution<std::size_t> pick_class(dist.probs().begin(), dist.probs().end());
    std::uniform_int_distribution<std::size_t> pick_node(0, n - 1);

    constexpr int kMaxRestarts = 20;
    for (int restart = 0; restart < kMaxRestarts; ++restart) {
        std::vector<int> degree(n);
        long long total = 0;
        for (auto& k : degree) {
            k = dist.support()[pick_class(rng)];
            total += k;
        }
        for (int attempt = 0; total % 2 != 0; ++attempt) {
            if (attempt > 10000)
                throw std::runtime_error("configuration model: cannot draw an even stub total");
            const std::size_t v = pick_node(rng);
            total -= degree[v];
            degree[v] = dist.support()[pick_class(rng)];
            total += degree[v];
        }

        std::vector<std::size_t> stubs;
        stubs.reserve(static_cast<std::size_t>(total));
        for (std::size_t v = 0; v < n; ++v)
            stubs.insert(stubs.end(), static_cast<std::size_t>(degree[v]), v);
        std::shuffle(stubs.begin(), stubs.end(), rng);

        const std::size_t m = stubs.size() / 2;
        if (m == 0)
            return GraphSpec(n, {});
        std::vector<Edge> edges(m);
        std::unordered_map<std::uint64_t, int> multiplicity;
        multiplicity.reserve(2 * m);
        for (std::size_t e = 0; e < m; ++e) {
            edges[e] = {stubs[2 * e], stubs[2 * e + 1]};
            ++multiplicity[edge_key(edges[e].first, edges[e].second)];
        }
        auto is_bad = [&](const Edge& e) {
            return e.first == e.second || multiplicity[edge_key(e.first, e.second)] > 1;
        };

        std::uniform_int_distribution<std::size_t> pick_edge(0, m - 1);
        std::bernoulli_distribution coin(0.5);
        const std::size_t budget = 200 * m + 10000;
        std::size_t swaps = 0;
        bool simple = false;
        while (swaps < budget) {
            std::vector<std::size_t> bad;
            for (std::size_t e = 0; e < m; ++e)
                if (is_bad(edges[e]))
                    bad.push_back(e);
            if (bad.empty()) {
                simple = true;
                break;
            }
            for (std::size_t e : bad) {
                if (!is_bad(edges[e]))
                    continue;
                for (int tries = 0; tries < 64 && swaps < budget; ++tries, ++swaps) {
                    const std::size_t f = pick_edge(rng);
                    if (f == e)
                        continue;
                    auto [a, b] = edges[e];
                    auto [c, d] = edges[f];
                    if (coin(rng)) std::swap(c, d);
                    if (a == c || b == d)
                        continue;
                    if (multiplicity[edge_key(a, c)] > 0 || multiplicity[edge_key(b, d)] > 0)
                        continue;
                    if (edge_key(a, c) == edge_key(b, d))
                        continue;
                    --multiplicity[edge_key(a, b)];
                    --multiplicity[edge_key(edges[f].first, edges[f].second)];
                    edges[e] = {a, c};
                    edges[f] = {b, d};
                    ++multiplicity[edge_key(a, c)];
                    ++multiplicity[edge_key(b, d)];
                    break;
                }
            }
        }
        if (simple)
            return GraphSpec(n, edges);
    }
    throw std::runtime_error("configuration model: no simple graph found for this degree sequence");
}

} // namespace qrenet
