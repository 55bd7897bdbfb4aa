#include "qrenet/dynamics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <stdexcept>

#include <boost/numeric/odeint.hpp>
#include <Eigen/SparseLU>
#include <fmt/format.h>

#include "qrenet/detail/parallel.hpp"

namespace qrenet {

namespace {

constexpr std::size_t kDirectStationaryAgents = 12;
constexpr std::size_t kOccupationAgents = 20;
constexpr double kStationaryResidual = 1e-10;

void require_agent(const GameModel& model, std::size_t i) {
    if (i >= model.size())
        throw std::invalid_argument(fmt::format("agent {} out of range for {} agents", i, model.size()));
}

// Utility advantage of s_i = +1 over s_i = -1, halved: H_i + sum_j w_ij s_j.
template <class SpinOf>
double incentive(const GameModel& model, std::size_t i, SpinOf&& spin_of) {
    const auto& W = model.weights();
    auto cols = W.row_cols(i);
    auto ws = W.row_weights(i);
    double u = model.field(i);
    for (std::size_t k = 0; k < cols.size(); ++k)
        u += ws[k] * spin_of(cols[k]);
    return u;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    std::array<std::uint32_t, 2> out{};
    seq.generate(out.begin(), out.end());
    return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

} // namespace

Configuration to_configuration(std::span<const int> profile) {
    if (profile.size() > 32)
        throw std::invalid_argument("configuration bitmask holds at most 32 agents");
    Configuration c = 0;
    for (std::size_t i = 0; i < profile.size(); ++i) {
        if (profile[i] != 1 && profile[i] != -1)
            throw std::invalid_argument("profile entries must be -1 or +1");
        if (profile[i] == 1)
            c |= Configuration{1} << i;
    }
    return c;
}

std::vector<int> to_profile(Configuration c, std::size_t n) {
    std::vector<int> out(n);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = spin(c, i);
    return out;
}

double flip_probability(const GameModel& model, std::span<const int> profile, std::size_t i) {
    require_agent(model, i);
    if (profile.size() != model.size())
        throw std::invalid_argument("profile length does not match the model");
    const double u = incentive(model, i, [&](std::size_t j) { return static_cast<double>(profile[j]); });
    return model.noise(i).cdf_diff(-2.0 * u * profile[i]);
}

double flip_probability(const GameModel& model, Configuration c, std::size_t i) {
    require_agent(model, i);
    const double u = incentive(model, i, [&](std::size_t j) { return static_cast<double>(spin(c, j)); });
    return model.noise(i).cdf_diff(-2.0 * u * spin(c, i));
}

double Generator::max_exit_rate() const { return exit_.empty() ? 0.0 : *std::max_element(exit_.begin(), exit_.end()); }

bool Generator::all_rates_positive() const {
    return std::all_of(rates_.begin(), rates_.end(), [](double r) { return r > 0.0; });
}

Eigen::VectorXd Generator::apply_transpose(const Eigen::VectorXd& p) const {
    const std::size_t N = states();
    if (static_cast<std::size_t>(p.size()) != N)
        throw std::invalid_argument("probability vector size does not match the generator");
    Eigen::VectorXd out(p.size());
    for (std::size_t s = 0; s < N; ++s) {
        double inflow = 0.0;
        for (std::size_t i = 0; i < agents_; ++i) {
            const std::size_t from = s ^ (std::size_t{1} << i);
            inflow += rates_[from * agents_ + i] * p[static_cast<Eigen::Index>(from)];
        }
        out[static_cast<Eigen::Index>(s)] = inflow - exit_[s] * p[static_cast<Eigen::Index>(s)];
    }
    return out;
}

Eigen::SparseMatrix<double> Generator::matrix() const {
    const std::size_t N = states();
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(N * (agents_ + 1));
    for (std::size_t s = 0; s < N; ++s) {
        triplets.emplace_back(static_cast<int>(s), static_cast<int>(s), -exit_[s]);
        for (std::size_t i = 0; i < agents_; ++i)
            triplets.emplace_back(static_cast<int>(s), static_cast<int>(s ^ (std::size_t{1} << i)),
                                  rates_[s * agents_ + i]);
    }
    Eigen::SparseMatrix<double> Q(static_cast<int>(N), static_cast<int>(N));
    Q.setFromTriplets(triplets.begin(), triplets.end());
    return Q;
}

Generator build_generator(const GameModel& model, double lambda, std::size_t max_agents) {
    const std::size_t n = model.size();
    if (n > max_agents || n > 24)
        throw std::invalid_argument(fmt::format("master equation limited to {} agents, got {}", max_agents, n));
    if (!(lambda > 0.0) || !std::isfinite(lambda))
        throw std::invalid_argument("revision rate lambda must be positive");
    Generator g;
    g.agents_ = n;
    g.lambda_ = lambda;
    const std::size_t N = std::size_t{1} << n;
    g.rates_.resize(N * n);
    g.exit_.assign(N, 0.0);
    for (std::size_t s = 0; s < N; ++s) {
        for (std::size_t i = 0; i < n; ++i) {
            const double r = lambda * flip_probability(model, static_cast<Configuration>(s), i);
            g.rates_[s * n + i] = r;
            g.exit_[s] += r;
        }
    }
    return g;
}

MasterState point_state(std::size_t n, Configuration c, double t) {
    MasterState state;
    state.p = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(std::size_t{1} << n));
    state.p[static_cast<Eigen::Index>(c)] = 1.0;
    state.t = t;
    return state;
}

MasterState product_state(const Eigen::VectorXd& m, double t) {
    const auto n = static_cast<std::size_t>(m.size());
    MasterState state;
    state.t = t;
    state.p.resize(static_cast<Eigen::Index>(std::size_t{1} << n));
    for (std::size_t s = 0; s < (std::size_t{1} << n); ++s) {
        double prob = 1.0;
        for (std::size_t i = 0; i < n; ++i)
            prob *= 0.5 * (1.0 + spin(static_cast<Configuration>(s), i) * m[static_cast<Eigen::Index>(i)]);
        state.p[static_cast<Eigen::Index>(s)] = prob;
    }
    return state;
}

Eigen::VectorXd master_local_averages(const MasterState& state, std::size_t n) {
    if (static_cast<std::size_t>(state.p.size()) != (std::size_t{1} << n))
        throw std::invalid_argument("state size does not match the agent count");
    Eigen::VectorXd m = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    for (std::size_t s = 0; s < static_cast<std::size_t>(state.p.size()); ++s)
        for (std::size_t i = 0; i < n; ++i)
            m[static_cast<Eigen::Index>(i)] += spin(static_cast<Configuration>(s), i) * state.p[static_cast<Eigen::Index>(s)];
    return m;
}

Eigen::VectorXd master_moment_derivative(const GameModel& model, double lambda, const MasterState& state) {
    const std::size_t n = model.size();
    if (static_cast<std::size_t>(state.p.size()) != (std::size_t{1} << n))
        throw std::invalid_argument("state size does not match the agent count");
    Eigen::VectorXd d = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    for (std::size_t s = 0; s < static_cast<std::size_t>(state.p.size()); ++s) {
        const double ps = state.p[static_cast<Eigen::Index>(s)];
        if (ps == 0.0)
            continue;
        const auto c = static_cast<Configuration>(s);
        for (std::size_t i = 0; i < n; ++i)
            d[static_cast<Eigen::Index>(i)] += spin(c, i) * flip_probability(model, c, i) * ps;
    }
    return -2.0 * lambda * d;
}

std::vector<MasterState> master_evolve(const Generator& generator, const MasterState& p0,
                                       std::span<const double> report_times) {
    if (static_cast<std::size_t>(p0.p.size()) != generator.states())
        throw std::invalid_argument("initial state size does not match the generator");
    if ((p0.p.array() < -1e-12).any() || std::abs(p0.p.sum() - 1.0) > 1e-10)
        throw std::invalid_argument("initial state is not a probability vector");
    const double Lambda = generator.max_exit_rate();
    // Per-chunk Poisson mean; keeps exp(-a) far from underflow.
    constexpr double kChunk = 20.0;

    std::vector<MasterState> out;
    out.reserve(report_times.size());
    MasterState current = p0;
    for (double t_report : report_times) {
        if (!std::isfinite(t_report) || t_report < current.t)
            throw std::invalid_argument("report times must be finite, nondecreasing and not before p0.t");
        double remaining = t_report - current.t;
        while (remaining > 0.0 && Lambda > 0.0) {
            const double dt = std::min(remaining, kChunk / Lambda);
            const double a = Lambda * dt;
            Eigen::VectorXd v = current.p;
            double weight = std::exp(-a);
            double cumulative = weight;
            Eigen::VectorXd acc = weight * v;
            const int k_max = static_cast<int>(a + 12.0 * std::sqrt(a) + 40.0);
            for (int k = 1; k <= k_max && cumulative < 1.0 - 1e-16; ++k) {
                v += generator.apply_transpose(v) / Lambda;
                weight *= a / k;
                cumulative += weight;
                acc += weight * v;
            }
            if (!acc.allFinite())
                throw std::runtime_error("master_evolve: uniformisation step produced non-finite values");
            current.p = acc / cumulative;
            remaining -= dt;
        }
        current.t = t_report;
        out.push_back(current);
    }
    return out;
}

double stationary_residual(const Generator& generator, const MasterState& state) {
    return generator.apply_transpose(state.p).lpNorm<Eigen::Infinity>();
}

MasterState master_stationary(const Generator& generator) {
    const std::size_t N = generator.states();
    const std::size_t n = generator.agents();
    MasterState state;
    state.t = 0.0;

    if (n <= kDirectStationaryAgents) {
        // Q^T P = 0 with the first balance equation replaced by sum(P) = 1.
        Eigen::SparseMatrix<double> A = generator.matrix().transpose();
        std::vector<Eigen::Triplet<double>> triplets;
        triplets.reserve(static_cast<std::size_t>(A.nonZeros()) + N);
        for (int col = 0; col < A.outerSize(); ++col)
            for (Eigen::SparseMatrix<double>::InnerIterator it(A, col); it; ++it)
                if (it.row() != 0)
                    triplets.emplace_back(static_cast<int>(it.row()), col, it.value());
        for (std::size_t s = 0; s < N; ++s)
            triplets.emplace_back(0, static_cast<int>(s), 1.0);
        Eigen::SparseMatrix<double> B(static_cast<int>(N), static_cast<int>(N));
        B.setFromTriplets(triplets.begin(), triplets.end());
        Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
        lu.compute(B);
        if (lu.info() != Eigen::Success)
            throw std::runtime_error("master_stationary: generator is rank deficient (chain not irreducible?)");
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(N));
        rhs[0] = 1.0;
        state.p = lu.solve(rhs);
        // One step of iterative refinement.
        Eigen::VectorXd r = rhs - B * state.p;
        state.p += lu.solve(r);
    } else {
        // Gauss-Seidel on the balance equations exit(s) P(s) = inflow(s).
        state.p = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(N), 1.0 / static_cast<double>(N));
        for (int sweep = 0; sweep < 200000; ++sweep) {
            for (std::size_t s = 0; s < N; ++s) {
                double inflow = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    const std::size_t from = s ^ (std::size_t{1} << i);
                    inflow += generator.rate(static_cast<Configuration>(from), i) * state.p[static_cast<Eigen::Index>(from)];
                }
                const double out = generator.exit_rate(static_cast<Configuration>(s));
                if (out > 0.0)
                    state.p[static_cast<Eigen::Index>(s)] = inflow / out;
            }
            state.p /= state.p.sum();
            if (sweep % 10 == 9 && stationary_residual(generator, state) < 0.01 * kStationaryResidual)
                break;
        }
    }

    if (!state.p.allFinite())
        throw std::runtime_error("master_stationary: solution is not finite");
    if ((state.p.array() < -1e-12).any())
        throw std::runtime_error("master_stationary: solution has negative entries (numerical rank issue)");
    state.p = state.p.cwiseMax(0.0);
    state.p /= state.p.sum();
    const double residual = stationary_residual(generator, state);
    if (residual >= kStationaryResidual)
        throw std::runtime_error(fmt::format("master_stationary: residual {:.3e} above tolerance", residual));
    return state;
}

double total_variation(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size())
        throw std::invalid_argument("total_variation: size mismatch");
    double acc = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k)
        acc += std::abs(p[k] - q[k]);
    return 0.5 * acc;
}

Eigen::VectorXd mean_field_rhs(const GameModel& model, const Eigen::VectorXd& m, double lambda) {
    return -lambda * (m - qre_map(model, m));
}

Trajectory mean_field_ode(const GameModel& model, const Eigen::VectorXd& m0, double lambda, double t_end,
                          const OdeOptions& options) {
    namespace odeint = boost::numeric::odeint;
    using State = std::vector<double>;
    if (static_cast<std::size_t>(m0.size()) != model.size())
        throw std::invalid_argument("initial state size does not match the model");
    if ((m0.array().abs() > 1.0).any())
        throw std::invalid_argument("initial local averages must lie in [-1, 1]");
    if (!(t_end > 0.0) || !(lambda > 0.0))
        throw std::invalid_argument("t_end and lambda must be positive");

    const auto n = m0.size();
    auto to_eigen = [n](const State& x) { return Eigen::Map<const Eigen::VectorXd>(x.data(), n).eval(); };
    auto clamp = [](Eigen::VectorXd v) { return v.cwiseMax(-1.0).cwiseMin(1.0).eval(); };
    auto system = [&](const State& x, State& dxdt, double) {
        const Eigen::VectorXd d = mean_field_rhs(model, to_eigen(x), lambda);
        dxdt.assign(d.data(), d.data() + n);
    };

    Trajectory traj;
    auto record = [&](double t, const Eigen::VectorXd& m) {
        if (!traj.times.empty() && t <= traj.times.back())
            return;
        traj.times.push_back(t);
        traj.values.push_back(clamp(m));
    };

    record(0.0, m0);
    traj.final_defect = mean_field_rhs(model, m0, lambda).lpNorm<Eigen::Infinity>();
    if (traj.final_defect < options.stationary_tol) {
        traj.stationary = true;
        return traj;
    }

    auto stepper = odeint::make_dense_output(options.atol, options.rtol, odeint::runge_kutta_dopri5<State>());
    State x(m0.data(), m0.data() + n);
    stepper.initialize(x, 0.0, std::min(options.initial_step, t_end));
    double next_output = options.output_interval;
    State probe(static_cast<std::size_t>(n));

    for (std::size_t step = 0;; ++step) {
        if (step >= options.max_steps)
            throw std::runtime_error("mean_field_ode: step budget exhausted");
        stepper.do_step(system);
        const double t_now = stepper.current_time();
        if (!(stepper.current_time_step() > 0.0) || !std::isfinite(t_now))
            throw std::runtime_error("mean_field_ode: integrator failure");

        if (options.output_interval > 0.0) {
            while (next_output <= std::min(t_now, t_end)) {
                stepper.calc_state(next_output, probe);
                record(next_output, to_eigen(probe));
                next_output += options.output_interval;
            }
        }
        if (t_now >= t_end) {
            stepper.calc_state(t_end, probe);
            const Eigen::VectorXd m = to_eigen(probe);
            record(t_end, m);
            traj.final_defect = mean_field_rhs(model, clamp(m), lambda).lpNorm<Eigen::Infinity>();
            return traj;
        }
        const Eigen::VectorXd m = to_eigen(stepper.current_state());
        const double defect = mean_field_rhs(model, m, lambda).lpNorm<Eigen::Infinity>();
        if (options.output_interval <= 0.0 || defect < options.stationary_tol)
            record(t_now, m);
        if (defect < options.stationary_tol) {
            traj.final_defect = defect;
            traj.stationary = true;
            return traj;
        }
    }
}

double verify_stationarity(const GameModel& model, const EquilibriumSolution& solution, double lambda) {
    return mean_field_rhs(model, solution.m, lambda).lpNorm<Eigen::Infinity>();
}

CtmcRun simulate_ctmc(const GameModel& model, std::span<const int> s0, double lambda, double t_end,
                      std::uint64_t seed, const CtmcOptions& options) {
    const std::size_t n = model.size();
    if (s0.size() != n)
        throw std::invalid_argument("initial profile length does not match the model");
    for (int s : s0)
        if (s != 1 && s != -1)
            throw std::invalid_argument("profile entries must be -1 or +1");
    if (!(lambda > 0.0) || !(t_end > 0.0))
        throw std::invalid_argument("lambda and t_end must be positive");
    if (options.burn_in_fraction < 0.0 || options.burn_in_fraction >= 1.0)
        throw std::invalid_argument("burn_in_fraction must lie in [0, 1)");

    const auto& W = model.weights();
    std::vector<int> s(s0.begin(), s0.end());
    std::vector<double> u(n);
    for (std::size_t i = 0; i < n; ++i)
        u[i] = incentive(model, i, [&](std::size_t j) { return static_cast<double>(s[j]); });

    const bool track_occupation = options.occupation && n <= kOccupationAgents;
    Configuration mask = track_occupation ? to_configuration(s) : 0;

    CtmcRun run;
    if (track_occupation)
        run.occupation.assign(std::size_t{1} << n, 0.0);
    const double burn = options.burn_in_fraction * t_end;
    run.observed_time = t_end - burn;

    // Per-agent integral of s_i over the observation window, updated lazily.
    std::vector<double> integral(n, 0.0);
    std::vector<double> since(n, burn);

    std::mt19937_64 rng(seed);
    std::exponential_distribution<double> clock(lambda * static_cast<double>(n));
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::uniform_real_distribution<double> coin(0.0, 1.0);

    double next_sample = 0.0;
    auto sample_until = [&](double t_limit) {
        if (options.sample_interval <= 0.0)
            return;
        while (next_sample <= t_limit && next_sample <= t_end) {
            Eigen::VectorXd v(static_cast<Eigen::Index>(n));
            for (std::size_t i = 0; i < n; ++i) v[static_cast<Eigen::Index>(i)] = s[i];
            run.samples.times.push_back(next_sample);
            run.samples.values.push_back(std::move(v));
            next_sample += options.sample_interval;
        }
    };

    double t = 0.0;
    while (true) {
        const double t_next = t + clock(rng);
        const double lo = std::max(t, burn);
        const double hi = std::min(t_next, t_end);
        if (track_occupation && hi > lo)
            run.occupation[mask] += hi - lo;
        if (t_next >= t_end) {
            sample_until(t_end);
            break;
        }
        sample_until(std::nextafter(t_next, 0.0));
        t = t_next;
        ++run.clock_events;
        const std::size_t i = pick(rng);
        const double p_flip = model.noise(i).cdf_diff(-2.0 * u[i] * s[i]);
        if (coin(rng) < p_flip) {
            if (t > burn) {
                integral[i] += s[i] * (t - since[i]);
                since[i] = t;
            }
            const int delta = -2 * s[i];
            s[i] = -s[i];
            if (track_occupation)
                mask ^= Configuration{1} << i;
            auto rows = W.col_rows(i);
            auto ws = W.col_weights(i);
            for (std::size_t r = 0; r < rows.size(); ++r)
                u[rows[r]] += ws[r] * delta;
            ++run.flips;
            if (options.record_events)
                run.events.push_back({t, i, s[i]});
        }
    }

    run.time_average_m.resize(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        integral[i] += s[i] * (t_end - since[i]);
        run.time_average_m[static_cast<Eigen::Index>(i)] = integral[i] / run.observed_time;
    }
    if (track_occupation)
        for (double& v : run.occupation)
            v /= run.observed_time;
    run.final_state = std::move(s);
    return run;
}

std::vector<double> replica_distribution(const GameModel& model, std::span<const int> s0, double lambda, double t,
                                         std::size_t replicas, std::uint64_t seed, unsigned threads) {
    const std::size_t n = model.size();
    if (n > kOccupationAgents)
        throw std::invalid_argument("replica_distribution is limited to 20 agents");
    if (replicas == 0)
        throw std::invalid_argument("replica_distribution needs at least one replica");
    std::vector<Configuration> finals(replicas);
    CtmcOptions options;
    options.burn_in_fraction = 0.0;
    options.occupation = false;
    detail::parallel_for(replicas, threads, [&](std::size_t r) {
        const auto run = simulate_ctmc(model, s0, lambda, t, derive_seed(seed, r), options);
        finals[r] = to_configuration(run.final_state);
    });
    std::vector<double> hist(std::size_t{1} << n, 0.0);
    for (Configuration c : finals)
        hist[c] += 1.0;
    for (double& h : hist)
        h /= static_cast<double>(replicas);
    return hist;
}

} // namespace qrenet
