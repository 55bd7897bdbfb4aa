#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "qrenet/game.hpp"

namespace qrenet {

// `unknown` is reported when classification was skipped or the system is too
// large for a dense eigen-decomposition.
enum class Stability { stable, unstable, marginal, unknown };

std::string_view to_string(Stability s);

struct SolverOptions {
    double tol = 1e-10;
    int max_iter = 20000;        // damped fixed-point iterations
    int newton_max_iter = 200;
    double damping = 0.5;        // m <- (1 - damping) m + damping T(m)
    double stability_margin = 1e-8;
    bool classify = true;
};

struct EquilibriumSolution {
    Eigen::VectorXd m;
    double residual = 0.0;       // max |m - T(m)|
    Stability stability = Stability::unknown;
    double eigen_min_real = 0.0; // smallest real part of the stability-matrix spectrum
    int iterations = 0;
    std::string method;
    std::vector<std::string> warnings;
};

// Thrown when an iteration budget is exhausted; carries the last iterate.
class ConvergenceError : public std::runtime_error {
  public:
    ConvergenceError(const std::string& what, Eigen::VectorXd last, double residual, int iterations)
        : std::runtime_error(what), last_iterate(std::move(last)), residual(residual), iterations(iterations) {}

    Eigen::VectorXd last_iterate;
    double residual;
    int iterations;
};

// h_i = 2 H_i + 2 sum_j w_ij m_j
Eigen::VectorXd local_field(const GameModel& model, const Eigen::VectorXd& m);
// T(m)_i = 2 F_i(h_i) - 1; maps [-1, 1]^n into itself.
Eigen::VectorXd qre_map(const GameModel& model, const Eigen::VectorXd& m);
double fixed_point_residual(const GameModel& model, const Eigen::VectorXd& m);

EquilibriumSolution solve_fixed_point(const GameModel& model, const Eigen::VectorXd& m0,
                                      const SolverOptions& options = {});

// Newton on D(m) = m - T(m), whose Jacobian is the stability matrix.  A
// singular Jacobian triggers damped fixed-point steps (recorded in
// `warnings` and in `method`); an ill-conditioned Jacobian at the solution is
// reported as a warning.
EquilibriumSolution solve_newton(const GameModel& model, const Eigen::VectorXd& m0,
                                 const SolverOptions& options = {});

struct MultistartSpec {
    bool deterministic = true;      // all -1, all 0, all +1
    int random_starts = 16;
    std::uint64_t seed = 0;
    std::vector<Eigen::VectorXd> extra; // tried first, e.g. for continuation
    double dedup_tol = 1e-6;
    unsigned threads = 1;
};

struct EquilibriumSet {
    std::vector<EquilibriumSolution> solutions; // sorted by mean of m
    int starts = 0;
    int failed_starts = 0;
    bool all_failed() const { return starts > 0 && failed_starts == starts; }
};

EquilibriumSet enumerate_equilibria(const GameModel& model, const MultistartSpec& starts = {},
                                    const SolverOptions& options = {});

// S_ij = delta_ij - 4 f_i(h_i) w_ij
Eigen::MatrixXd stability_matrix(const GameModel& model, const Eigen::VectorXd& m);

struct StabilityReport {
    Stability stability = Stability::unknown;
    double min_real = 0.0;
};

// Stable iff every eigenvalue of S has real part above `margin`, marginal if
// the smallest real part lies within +-margin.
StabilityReport classify_stability(const Eigen::MatrixXd& S, double margin = 1e-8);

// Same classification evaluated at m; uses a symmetric eigen-solver when the
// weights are symmetric.  Returns `unknown` above the dense size limit.
StabilityReport assess_stability(const GameModel& model, const Eigen::VectorXd& m, double margin = 1e-8);

} // namespace qrenet
