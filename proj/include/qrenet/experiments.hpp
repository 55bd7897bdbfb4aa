#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "qrenet/annealed.hpp"
#include "qrenet/game.hpp"
#include "qrenet/graph.hpp"
#include "qrenet/noise.hpp"
#include "qrenet/solver.hpp"

namespace qrenet {

enum class SweepParameter { J, H, beta };

std::string_view to_string(SweepParameter p);
SweepParameter sweep_parameter_from_string(std::string_view name);

// Rebuilds the noise with a new scale; custom densities cannot be rescaled.
NoiseModel with_scale(const NoiseModel& noise, double scale);

// A game with one scalar knob per swept parameter.
struct ModelTemplate {
    GraphSpec graph;
    CouplingSpec coupling;
    std::vector<double> fields{0.0};
    NoiseModel noise = NoiseModel::logistic(1.0);

    GameModel build() const;
    // J rescales uniform couplings, H sets a uniform field, beta the logistic slope.
    ModelTemplate with(SweepParameter parameter, double value) const;
};

std::vector<double> grid_range(double from, double to, double step);

struct SweepSpec {
    ModelTemplate model;
    SweepParameter parameter = SweepParameter::J;
    std::vector<double> grid;
    SolverOptions solver;
    MultistartSpec starts;
    double max_jump = 0.2;  // max-norm distance for pairing branches across points
    unsigned threads = 1;   // > 1 evaluates points in parallel without continuation
};

struct BranchPoint {
    int branch_id = -1;
    double m_min = 0.0;
    double m_max = 0.0;
    double m_mean = 0.0;
    Stability stability = Stability::unknown;
    Eigen::VectorXd m;
};

struct BifurcationRecord {
    double parameter = 0.0;
    std::vector<BranchPoint> equilibria;
    std::vector<int> births;
    std::vector<int> deaths;
    std::string error;
    bool failed() const { return !error.empty(); }
};

// Enumerates equilibria at every grid point.  Sequential sweeps seed each
// point with the previous point's equilibria.  Branches are paired by greedy
// nearest-neighbour matching in max-norm (within max_jump); unmatched
// equilibria start new branches, unmatched previous branches end.
std::vector<BifurcationRecord> sweep(const SweepSpec& spec);

enum class TransitionTarget { complete_limit, annealed, full_model };

std::string_view to_string(TransitionTarget t);

struct TransitionSpec {
    TransitionTarget target = TransitionTarget::complete_limit;
    SweepParameter parameter = SweepParameter::J;
    double lo = 0.0;
    double hi = 0.0;
    double rel_tol = 1e-6;
    double coupling = 1.0;  // fixed J when the slope beta is bisected
    NoiseModel noise = NoiseModel::logistic(1.0);
    std::optional<DegreeDistribution> dist;  // annealed
    std::optional<ModelTemplate> model;      // full_model
    SolverOptions solver;
    MultistartSpec starts;
    ScanOptions scan;
};

struct TransitionResult {
    std::string parameter_name;
    double bracket_lo = 0.0;
    double bracket_hi = 0.0;
    double value = 0.0;
    std::optional<double> analytic;
    int evaluations = 0;
};

// Number of equilibria at zero field for the given parameter value.
int equilibrium_count(const TransitionSpec& spec, double value);

// Bisection on "more than one equilibrium at H = 0" to relative tolerance
// rel_tol.  Throws std::invalid_argument when the predicate agrees at both
// bracket ends.
TransitionResult find_transition(const TransitionSpec& spec);

// Analytic location when one is known: 1 / (4 f(0)) for the complete-graph
// limit, <k> / (4 <k^2> f(0)) for the annealed reduction, and
// 1 / (4 f(0) mu_max) for symmetric weights with largest eigenvalue mu_max.
std::optional<double> analytic_transition(const TransitionSpec& spec);

struct DegreeClassComparison {
    int k = 0;
    std::size_t nodes = 0;
    double annealed = 0.0;
    double sampled = 0.0;
    double abs_diff = 0.0;
};

struct AnnealedComparison {
    std::vector<double> roots;
    double m_w = 0.0;                 // annealed branch compared against
    double J_star = 0.0;
    std::vector<DegreeClassComparison> classes;
    double max_abs_discrepancy = 0.0;
    bool signs_agree = true;
    std::size_t nodes = 0;
    std::size_t edges = 0;
};

// Annealed prediction for `dist` against the full solver on one configuration
// model sample.  The largest annealed root is compared with the full solution
// reached from all +1 (all -1 when that root is negative).
AnnealedComparison compare_annealed_sampled(const DegreeDistribution& dist, std::size_t n, double J, double H,
                                            const NoiseModel& noise, std::uint64_t seed,
                                            const SolverOptions& solver = {});

} // namespace qrenet
