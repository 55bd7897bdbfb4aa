#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace qrenet {

using Edge = std::pair<std::size_t, std::size_t>;

// Interaction graph.  g(i, j) = 1 means agent i observes agent j (edge j -> i);
// neighbors(i) lists every such j.  Undirected graphs store both directions.
class GraphSpec {
  public:
    GraphSpec() = default;
    // Throws std::invalid_argument on self-loops or out-of-range indices.
    // Duplicate edges collapse; undirected edges are symmetrised.
    GraphSpec(std::size_t n, const std::vector<Edge>& edges, bool directed = false);

    std::size_t num_nodes() const { return neighbors_.size(); }
    bool directed() const { return directed_; }
    // Undirected graphs count each {i, j} once.
    std::size_t edge_count() const;
    std::size_t degree(std::size_t i) const { return neighbors_.at(i).size(); }
    const std::vector<std::size_t>& neighbors(std::size_t i) const { return neighbors_.at(i); }
    bool has_edge(std::size_t i, std::size_t j) const;
    // Each edge once; (i, j) with i < j when undirected.
    std::vector<Edge> edges() const;

  private:
    bool directed_ = false;
    std::vector<std::vector<std::size_t>> neighbors_;
};

GraphSpec complete_graph(std::size_t n);
// Node 0 is the hub.
GraphSpec star_graph(std::size_t n);
GraphSpec cycle_graph(std::size_t n);

// "i j" per line, 0-based; '#' comments and blank lines allowed.  When
// `num_nodes` is zero the node count is one plus the largest index seen.
GraphSpec parse_edge_list(std::string_view text, bool directed = false, std::size_t num_nodes = 0);
GraphSpec load_edge_list(const std::string& path, bool directed = false, std::size_t num_nodes = 0);

enum class CouplingMode { uniform, uniform_over_n, full_matrix };

std::string_view to_string(CouplingMode mode);
CouplingMode coupling_mode_from_string(std::string_view name);

struct CouplingEntry {
    std::size_t i;
    std::size_t j;
    double value;
};

// uniform:        J_ij = J on every edge
// uniform_over_n: J_ij = J / n
// full_matrix:    J_ij given per edge; `entries` must cover exactly the edges of g
struct CouplingSpec {
    CouplingMode mode = CouplingMode::uniform;
    double J = 0.0;
    std::vector<CouplingEntry> entries;

    static CouplingSpec uniform(double J) { return {CouplingMode::uniform, J, {}}; }
    static CouplingSpec uniform_over_n(double J) { return {CouplingMode::uniform_over_n, J, {}}; }
    static CouplingSpec matrix(std::vector<CouplingEntry> entries) {
        return {CouplingMode::full_matrix, 0.0, std::move(entries)};
    }
};

// Finite-support degree pmf.
class DegreeDistribution {
  public:
    DegreeDistribution() = default;
    // Requires sum(probs) == 1 within 1e-12, nonnegative probabilities and <k> > 0.
    DegreeDistribution(std::vector<int> support, std::vector<double> probs);
    // Normalises arbitrary nonnegative weights.
    static DegreeDistribution from_weights(const std::map<int, double>& weights);
    static DegreeDistribution point_mass(int k) { return DegreeDistribution({k}, {1.0}); }

    const std::vector<int>& support() const { return support_; }
    const std::vector<double>& probs() const { return probs_; }
    std::size_t size() const { return support_.size(); }
    double mean() const { return mean_; }
    double second_moment() const { return second_; }
    int max_degree() const;
    double prob(int k) const;

  private:
    std::vector<int> support_;
    std::vector<double> probs_;
    double mean_ = 0.0;
    double second_ = 0.0;
};

double total_variation(const DegreeDistribution& a, const DegreeDistribution& b);

// Two-column "k pi_k" text.  Totals within 1e-6 of one are renormalised.
DegreeDistribution parse_degree_pmf(std::string_view text);
DegreeDistribution load_degree_pmf(const std::string& path);

// In-degree pmf of the graph.
DegreeDistribution degree_distribution(const GraphSpec& graph);

// Configuration model: i.i.d. degrees from `dist` (one node is redrawn while the
// stub total is odd), random stub matching, then degree-preserving double edge
// swaps remove self-loops and multi-edges.  Throws std::runtime_error when no
// simple graph is found after the bounded number of retries.
GraphSpec configuration_model_sample(const DegreeDistribution& dist, std::size_t n, std::uint64_t seed);

} // namespace qrenet
