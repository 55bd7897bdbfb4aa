#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "qrenet/game.hpp"
#include "qrenet/solver.hpp"

namespace qrenet {

// Configurations are bitmasks: bit i set <=> s_i = +1.
using Configuration = std::uint32_t;

inline int spin(Configuration c, std::size_t i) { return (c >> i) & 1u ? 1 : -1; }
Configuration to_configuration(std::span<const int> profile);
std::vector<int> to_profile(Configuration c, std::size_t n);

// Myopic revision: agent i, given the chance, switches with probability
//   F_i(-[2 H_i + 2 sum_j w_ij s_j] s_i).
double flip_probability(const GameModel& model, std::span<const int> profile, std::size_t i);
double flip_probability(const GameModel& model, Configuration c, std::size_t i);

// Generator of the continuous-time chain on all 2^n configurations: every
// agent revises at Poisson rate lambda, so Q[s -> s^(i)] = lambda p_flip(s, i)
// and dP/dt = Q^T P is the master equation.  Stored implicitly (each state
// has exactly n neighbours).
class Generator {
  public:
    std::size_t agents() const { return agents_; }
    std::size_t states() const { return exit_.size(); }
    double lambda() const { return lambda_; }
    double rate(Configuration from, std::size_t i) const { return rates_[from * agents_ + i]; }
    double exit_rate(Configuration from) const { return exit_[from]; }
    double max_exit_rate() const;
    bool all_rates_positive() const;

    // Q^T p, i.e. dP/dt at P = p.
    Eigen::VectorXd apply_transpose(const Eigen::VectorXd& p) const;
    // Explicit Q (row = source state, diagonal = -exit rate).
    Eigen::SparseMatrix<double> matrix() const;

  private:
    friend Generator build_generator(const GameModel& model, double lambda, std::size_t max_agents);

    std::size_t agents_ = 0;
    double lambda_ = 0.0;
    std::vector<double> rates_;
    std::vector<double> exit_;
};

Generator build_generator(const GameModel& model, double lambda, std::size_t max_agents = 16);

struct MasterState {
    Eigen::VectorXd p;
    double t = 0.0;
};

MasterState point_state(std::size_t n, Configuration c, double t = 0.0);
// Factorised law with <s_i> = m_i.
MasterState product_state(const Eigen::VectorXd& m, double t = 0.0);
// <s_i> under P.
Eigen::VectorXd master_local_averages(const MasterState& state, std::size_t n);
// d<s_i>/dt = -2 lambda <s_i p_flip(s, i)>, evaluated by summing over P.
Eigen::VectorXd master_moment_derivative(const GameModel& model, double lambda, const MasterState& state);

// Exact evolution by uniformisation, reported at each of `report_times`
// (nondecreasing, none before p0.t).
std::vector<MasterState> master_evolve(const Generator& generator, const MasterState& p0,
                                       std::span<const double> report_times);

// Unique P with Q^T P = 0.  Direct sparse LU up to 2^12 states, Gauss-Seidel
// sweeps beyond.  Throws std::runtime_error if the residual stays above 1e-10.
MasterState master_stationary(const Generator& generator);
double stationary_residual(const Generator& generator, const MasterState& state);

double total_variation(std::span<const double> p, std::span<const double> q);

struct Trajectory {
    std::vector<double> times;
    std::vector<Eigen::VectorXd> values;
    double final_defect = 0.0; // max-norm of the right-hand side at the last state
    bool stationary = false;   // stopped early because the right-hand side vanished
};

struct OdeOptions {
    double rtol = 1e-8;
    double atol = 1e-10;
    double stationary_tol = 1e-10;
    double output_interval = 0.0; // 0 records every accepted step
    double initial_step = 1e-3;
    std::size_t max_steps = 10'000'000;
};

// dm_i/dt = -lambda { m_i - [2 F_i(2 H_i + 2 sum_j w_ij m_j) - 1] }
Eigen::VectorXd mean_field_rhs(const GameModel& model, const Eigen::VectorXd& m, double lambda);
// Adaptive Dormand-Prince integration; stops early once the right-hand side
// max-norm drops below `stationary_tol`.
Trajectory mean_field_ode(const GameModel& model, const Eigen::VectorXd& m0, double lambda, double t_end,
                          const OdeOptions& options = {});

// Max-norm of the mean-field right-hand side at an equilibrium.
double verify_stationarity(const GameModel& model, const EquilibriumSolution& solution, double lambda = 1.0);

struct FlipEvent {
    double t;
    std::size_t agent;
    int new_s;
};

struct CtmcOptions {
    double burn_in_fraction = 0.5; // statistics ignore [0, burn_in_fraction * t_end)
    bool record_events = false;
    bool occupation = true;        // time-weighted configuration histogram (n <= 20)
    double sample_interval = 0.0;  // > 0 samples the configuration on a grid
};

struct CtmcRun {
    std::vector<FlipEvent> events;
    Trajectory samples;            // configurations as +-1 vectors
    std::vector<int> final_state;
    std::uint64_t clock_events = 0;
    std::uint64_t flips = 0;
    double observed_time = 0.0;    // length of the post burn-in window
    Eigen::VectorXd time_average_m;
    std::vector<double> occupation; // normalised; empty unless requested and n <= 20
};

// Event simulation of the same chain: global clock at rate n lambda, a
// uniformly chosen agent revises with probability flip_probability.
CtmcRun simulate_ctmc(const GameModel& model, std::span<const int> s0, double lambda, double t_end,
                      std::uint64_t seed, const CtmcOptions& options = {});

// Empirical law of the configuration at time t over independent replicas
// (replica r uses a seed derived from (seed, r)).  Requires n <= 20.
std::vector<double> replica_distribution(const GameModel& model, std::span<const int> s0, double lambda, double t,
                                         std::size_t replicas, std::uint64_t seed, unsigned threads = 0);

} // namespace qrenet
