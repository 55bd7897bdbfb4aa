#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "qrenet/dynamics.hpp"
#include "qrenet/solver.hpp"

using namespace qrenet;

namespace {

const NoiseModel kLogit = NoiseModel::logistic(1.0);

GameModel complete_over_n(std::size_t n, double J, double H = 0.0) {
    return GameModel::on_graph(complete_graph(n), CouplingSpec::uniform_over_n(J), {H}, {kLogit});
}

Eigen::MatrixXd dense_oracle(const GameModel& model, double lambda) {
    return oracle::dense_generator(model.weights().dense(), model.fields(),
                                   [&](std::size_t i, double z) { return model.noise(i).cdf_diff(z); }, lambda);
}

std::vector<double> as_vector(const Eigen::VectorXd& p) { return {p.data(), p.data() + p.size()}; }

// ODE for the complete graph written as a single scalar, fixed-step RK4.
double scalar_rk4(double m, double J, double lambda, double t, int steps) {
    auto f = [&](double x) { return -lambda * (x - std::tanh(J * x)); };
    const double h = t / steps;
    for (int k = 0; k < steps; ++k) {
        const double k1 = f(m), k2 = f(m + 0.5 * h * k1), k3 = f(m + 0.5 * h * k2), k4 = f(m + h * k3);
        m += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    return m;
}

} // namespace

TEST_CASE("flip probability") {
    const GameModel alone = GameModel::on_graph(GraphSpec(1, {}), CouplingSpec::uniform(0.0), {0.4}, {kLogit});
    CHECK(flip_probability(alone, std::vector<int>{1}, 0) < 0.5);
    CHECK(flip_probability(alone, std::vector<int>{1}, 0) == doctest::Approx(kLogit.cdf_diff(-0.8)).epsilon(1e-15));

    // agent 0 sees one +1 and one -1 neighbour
    const GameModel path = GameModel::on_graph(parse_edge_list("0 1\n0 2"), CouplingSpec::uniform(1.0), {0.0}, {kLogit});
    CHECK(flip_probability(path, std::vector<int>{1, 1, -1}, 0) == 0.5);

    // field 2 (2/3), probability 1 / (1 + e^{4/3})
    const GameModel k3 = GameModel::on_graph(complete_graph(3), CouplingSpec::uniform_over_n(1.0), {0.0}, {kLogit});
    CHECK(std::abs(flip_probability(k3, std::vector<int>{1, 1, 1}, 0) - 0.208608527326044940) < 1e-15);
    CHECK(flip_probability(k3, Configuration{7}, 2) == flip_probability(k3, std::vector<int>{1, 1, 1}, 2));
    CHECK_THROWS_AS(flip_probability(k3, std::vector<int>{1, 1, 1}, 3), std::invalid_argument);
}

TEST_CASE("configuration bitmasks") {
    const std::vector<int> s{1, -1, -1, 1};
    CHECK(to_configuration(s) == 0b1001u);
    CHECK(to_profile(0b1001u, 4) == s);
    CHECK(spin(0b1001u, 3) == 1);
    CHECK(spin(0b1001u, 1) == -1);
}

TEST_CASE("two-state generator") {
    const double H = 0.3, lambda = 1.7;
    const GameModel alone = GameModel::on_graph(GraphSpec(1, {}), CouplingSpec::uniform(0.0), {H}, {kLogit});
    const Generator gen = build_generator(alone, lambda);
    CHECK(gen.states() == 2);
    CHECK(gen.rate(1, 0) == doctest::Approx(lambda * kLogit.cdf_diff(-2 * H)).epsilon(1e-15));
    CHECK(gen.rate(0, 0) == doctest::Approx(lambda * kLogit.cdf_diff(2 * H)).epsilon(1e-15));
    const MasterState st = master_stationary(gen);
    CHECK(std::abs(st.p[1] - kLogit.cdf_diff(2 * H)) < 1e-12);
}

TEST_CASE("generator matches a dense oracle and rows sum to zero") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const auto rm = fixture::random_model(seed, 7, false);
        CAPTURE(rm.label);
        const double lambda = 0.5 + 0.1 * double(seed % 7);
        const Generator gen = build_generator(rm.model, lambda);
        const Eigen::MatrixXd Q(gen.matrix());
        const Eigen::MatrixXd ref = dense_oracle(rm.model, lambda);
        CHECK((Q - ref).cwiseAbs().maxCoeff() < 1e-14);
        CHECK(Q.rowwise().sum().cwiseAbs().maxCoeff() < 1e-12);
        bool bounded = false;
        for (std::size_t i = 0; i < rm.model.size(); ++i)
            bounded = bounded || rm.model.noise(i).kind() == NoiseKind::uniform;
        if (!bounded)  // bounded support can give exact zeros
            CHECK(gen.all_rates_positive());
        Eigen::VectorXd p = Eigen::VectorXd::Random(Q.rows()).cwiseAbs();
        p /= p.sum();
        CHECK((gen.apply_transpose(p) - Q.transpose() * p).cwiseAbs().maxCoeff() < 1e-13);
    }
    CHECK_THROWS_AS(build_generator(complete_over_n(17, 1.0), 1.0), std::invalid_argument);
    CHECK_THROWS_AS(build_generator(complete_over_n(5, 1.0), 1.0, 4), std::invalid_argument);
}

TEST_CASE("two agents: stationary law is flip symmetric") {
    const GameModel model = GameModel::on_graph(complete_graph(2), CouplingSpec::uniform(0.9), {0.0}, {kLogit});
    const Generator gen = build_generator(model, 1.0);
    const MasterState st = master_stationary(gen);
    const Eigen::VectorXd ref = oracle::null_distribution(dense_oracle(model, 1.0));
    CHECK((st.p - ref).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(std::abs(st.p[0] - st.p[3]) < 1e-12);
    CHECK(std::abs(st.p[1] - st.p[2]) < 1e-12);
}

TEST_CASE("stationary law of symmetric models is flip invariant") {
    for (std::size_t n : {4, 8, 13}) {
        const Generator gen = build_generator(complete_over_n(n, 1.2), 1.0);
        const MasterState st = master_stationary(gen);
        const Configuration all = (Configuration{1} << n) - 1;
        double worst = 0.0;
        for (Configuration c = 0; c <= all; ++c)
            worst = std::max(worst, std::abs(st.p[c] - st.p[all ^ c]));
        CAPTURE(n);
        CHECK(worst < 1e-10);
        CHECK(std::abs(st.p.sum() - 1.0) < 1e-10);
        CHECK(st.p.minCoeff() >= 0.0);
        CHECK(stationary_residual(gen, st) < 1e-10);
    }
}

TEST_CASE("master evolution") {
    const GameModel model = GameModel::on_graph(cycle_graph(5), CouplingSpec::uniform(0.6), {0.1, -0.2, 0.0, 0.3, 0.05},
                                                {kLogit});
    const Generator gen = build_generator(model, 1.0);
    const MasterState st = master_stationary(gen);

    const std::vector<double> times{0.5, 2.0, 10.0};
    for (const auto& s : master_evolve(gen, st, times))
        CHECK((s.p - st.p).cwiseAbs().maxCoeff() < 1e-12);

    const MasterState start = point_state(5, 0b10110);
    const Eigen::MatrixXd Q = dense_oracle(model, 1.0);
    const auto traj = master_evolve(gen, start, std::vector<double>{0.0, 0.25, 1.0, 3.0, 200.0});
    for (const auto& s : traj) {
        CHECK(std::abs(s.p.sum() - 1.0) < 1e-9);
        CHECK(s.p.minCoeff() >= -1e-12);
        if (s.t > 0.0 && s.t < 100.0)
            CHECK((s.p - oracle::evolve(Q, start.p, s.t)).cwiseAbs().maxCoeff() < 1e-10);
    }
    CHECK(total_variation(as_vector(traj.back().p), as_vector(oracle::null_distribution(Q))) < 1e-6);

    // twice the rate over half the time
    const Generator fast = build_generator(model, 2.0);
    const auto a = master_evolve(fast, start, std::vector<double>{0.7});
    const auto b = master_evolve(gen, start, std::vector<double>{1.4});
    CHECK((a[0].p - b[0].p).cwiseAbs().maxCoeff() < 1e-12);

    CHECK_THROWS_AS(master_evolve(gen, start, std::vector<double>{1.0, 0.5}), std::invalid_argument);
}

TEST_CASE("moment equation holds exactly under the master equation") {
    for (std::uint64_t seed = 100; seed < 115; ++seed) {
        const auto rm = fixture::random_model(seed, 10, false);
        CAPTURE(rm.label);
        const std::size_t n = rm.model.size();
        const double lambda = 1.3;
        const Generator gen = build_generator(rm.model, lambda);
        const auto states = master_evolve(gen, point_state(n, 0), std::vector<double>{0.4});
        const MasterState& P = states[0];
        // d<s_i>/dt from the linear flow
        const Eigen::VectorXd exact = master_local_averages(MasterState{gen.apply_transpose(P.p), P.t}, n);
        CHECK((master_moment_derivative(rm.model, lambda, P) - exact).cwiseAbs().maxCoeff() < 1e-8);
        // and from a centred difference of the evolved local averages
        const double h = 1e-4;
        const auto around = master_evolve(gen, P, std::vector<double>{P.t + h, P.t + 2 * h});
        const auto back = master_evolve(gen, point_state(n, 0), std::vector<double>{0.4 - h});
        const Eigen::VectorXd fd =
            (master_local_averages(around[0], n) - master_local_averages(back[0], n)) / (2 * h);
        CHECK((fd - exact).cwiseAbs().maxCoeff() < 1e-7);
    }
}

TEST_CASE("large systems use the iterative stationary solver") {
    const GameModel model = GameModel::on_graph(cycle_graph(14), CouplingSpec::uniform(0.3), {0.05}, {kLogit});
    const Generator gen = build_generator(model, 1.0);
    const MasterState st = master_stationary(gen);
    CHECK(stationary_residual(gen, st) < 1e-10);
    CHECK(std::abs(st.p.sum() - 1.0) < 1e-10);
    // translation invariance of the cycle
    const Eigen::VectorXd m = master_local_averages(st, 14);
    CHECK((m.array() - m[0]).abs().maxCoeff() < 1e-9);
    CHECK(m[0] > 0.0);
}

TEST_CASE("simulation without interaction") {
    const std::size_t n = 8;
    const GameModel model = GameModel::on_graph(GraphSpec(n, {}), CouplingSpec::uniform(0.0), {0.0}, {kLogit});
    const double t = 20000.0, lambda = 1.0;
    const CtmcRun run = simulate_ctmc(model, std::vector<int>(n, 1), lambda, t, 17);
    // every revision redraws the action, so s_i decorrelates at rate lambda
    const double sigma = std::sqrt(1.0 / (2.0 * lambda * run.observed_time));
    for (std::size_t i = 0; i < n; ++i) {
        const double frac = 0.5 * (1.0 + run.time_average_m[static_cast<Eigen::Index>(i)]);
        CHECK(std::abs(frac - 0.5) < 3.0 * sigma);
    }
}

TEST_CASE("single agent occupation matches the two-state balance") {
    const double H = 0.4, lambda = 1.0, t = 40000.0;
    const GameModel alone = GameModel::on_graph(GraphSpec(1, {}), CouplingSpec::uniform(0.0), {H}, {kLogit});
    const CtmcRun run = simulate_ctmc(alone, std::vector<int>{-1}, lambda, t, 3);
    const double p = kLogit.cdf_diff(2 * H);
    const double sigma = std::sqrt(2.0 * p * (1.0 - p) / (lambda * run.observed_time));
    REQUIRE(run.occupation.size() == 2);
    CHECK(std::abs(run.occupation[1] - p) < 3.0 * sigma);
    CHECK(std::abs(run.occupation[0] + run.occupation[1] - 1.0) < 1e-12);
}

TEST_CASE("eight agents: simulated occupation matches the stationary law") {
    const GameModel model = complete_over_n(8, 0.8);
    const MasterState exact = master_stationary(build_generator(model, 1.0));
    CtmcOptions opts;
    opts.burn_in_fraction = 0.01;
    // 10^6 clock events at global rate n lambda
    const CtmcRun run = simulate_ctmc(model, std::vector<int>(8, 1), 1.0, 125000.0, 5, opts);
    CHECK(run.clock_events > 900000);
    CHECK(total_variation(run.occupation, as_vector(exact.p)) < 0.02);
}

TEST_CASE("stationary moments agree with long simulations") {
    const GameModel model = complete_over_n(8, 0.5, 0.1);
    const Eigen::VectorXd m = master_local_averages(master_stationary(build_generator(model, 1.0)), 8);
    const int runs = 20;
    CtmcOptions opts;
    opts.occupation = false;
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(8), sq = Eigen::VectorXd::Zero(8);
    for (int r = 0; r < runs; ++r) {
        const CtmcRun run = simulate_ctmc(model, std::vector<int>(8, -1), 1.0, 2000.0, 1000 + r, opts);
        sum += run.time_average_m;
        sq += run.time_average_m.cwiseProduct(run.time_average_m);
    }
    const Eigen::VectorXd mean = sum / runs;
    const Eigen::VectorXd var = (sq / runs - mean.cwiseProduct(mean)) * runs / (runs - 1.0);
    for (Eigen::Index i = 0; i < 8; ++i) {
        const double se = std::sqrt(var[i] / runs);
        CHECK(std::abs(mean[i] - m[i]) < 4.0 * se);
    }
}

TEST_CASE("simulation is reproducible by seed") {
    const GameModel model = complete_over_n(6, 1.1, -0.05);
    CtmcOptions opts;
    opts.record_events = true;
    const auto a = simulate_ctmc(model, std::vector<int>(6, 1), 1.0, 50.0, 42, opts);
    const auto b = simulate_ctmc(model, std::vector<int>(6, 1), 1.0, 50.0, 42, opts);
    const auto c = simulate_ctmc(model, std::vector<int>(6, 1), 1.0, 50.0, 43, opts);
    REQUIRE(a.events.size() == b.events.size());
    for (std::size_t k = 0; k < a.events.size(); ++k) {
        CHECK(a.events[k].t == b.events[k].t);
        CHECK(a.events[k].agent == b.events[k].agent);
    }
    CHECK(a.final_state == b.final_state);
    CHECK((a.events.size() != c.events.size() || a.final_state != c.final_state ||
           a.events.front().t != c.events.front().t));
    CHECK(a.flips == a.events.size());
    for (const auto& e : a.events)
        CHECK((e.new_s == 1 || e.new_s == -1));
}

TEST_CASE("sampled trajectories") {
    CtmcOptions opts;
    opts.sample_interval = 0.5;
    const auto run = simulate_ctmc(complete_over_n(5, 0.9), std::vector<int>(5, 1), 1.0, 10.0, 8, opts);
    REQUIRE(run.samples.times.size() >= 20);
    for (std::size_t k = 1; k < run.samples.times.size(); ++k)
        CHECK(run.samples.times[k] > run.samples.times[k - 1]);
    for (const auto& v : run.samples.values)
        CHECK(v.cwiseAbs().minCoeff() == 1.0);
}

TEST_CASE("replicas and the master equation give the same law at fixed time") {
    const GameModel model = complete_over_n(8, 0.8, 0.05);
    const std::vector<int> s0(8, 1);
    const double t = 1.5;
    const auto empirical = replica_distribution(model, s0, 1.0, t, 100000, 9, 4);
    const auto exact = master_evolve(build_generator(model, 1.0), point_state(8, to_configuration(s0)),
                                     std::vector<double>{t});
    CHECK(total_variation(empirical, as_vector(exact[0].p)) < 0.03);
    // thread count does not change the result
    CHECK(replica_distribution(model, s0, 1.0, t, 2000, 9, 1) == replica_distribution(model, s0, 1.0, t, 2000, 9, 3));
}

TEST_CASE("mean-field ODE rests at equilibria") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto rm = fixture::random_model(seed, 20, false);
        CAPTURE(rm.label);
        const auto set = enumerate_equilibria(rm.model, MultistartSpec{true, 4, seed, {}, 1e-6, 1});
        for (const auto& sol : set.solutions) {
            const Trajectory tr = mean_field_ode(rm.model, sol.m, 1.0, 20.0);
            for (const auto& v : tr.values)
                CHECK((v - sol.m).cwiseAbs().maxCoeff() < 1e-8);
            CHECK(verify_stationarity(rm.model, sol) < 1e-9);
        }
    }
}

TEST_CASE("supercritical complete graph leaves the origin") {
    const std::size_t n = 50;
    const GameModel model = GameModel::on_graph(complete_graph(n), CouplingSpec::uniform(2.0 / (n - 1)), {0.0}, {kLogit});
    const Trajectory tr = mean_field_ode(model, Eigen::VectorXd::Constant(n, 1e-3), 1.0, 80.0);
    const double m_star = oracle::tanh_root(2.0);
    CHECK((tr.values.back().array() - m_star).abs().maxCoeff() < 1e-6);
    CHECK(tr.values.back().minCoeff() > 0.5);
}

TEST_CASE("complete graph agrees with the scalar population equation") {
    const std::size_t n = 20;
    const double J = 1.4, lambda = 0.8;
    const GameModel model = GameModel::on_graph(complete_graph(n), CouplingSpec::uniform(J / (n - 1)), {0.0}, {kLogit});
    OdeOptions opts;
    opts.output_interval = 0.5;
    opts.stationary_tol = 0.0;
    const Trajectory tr = mean_field_ode(model, Eigen::VectorXd::Constant(n, -0.05), lambda, 12.0, opts);
    REQUIRE(tr.times.size() >= 20);
    for (std::size_t k = 0; k < tr.times.size(); ++k) {
        const double ref = scalar_rk4(-0.05, J, lambda, tr.times[k], 4000);
        CHECK((tr.values[k].array() - ref).abs().maxCoeff() < 1e-6);
    }
}

TEST_CASE("ODE trajectories stay in the cube") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const auto rm = fixture::random_model(seed, 25, false);
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        Eigen::VectorXd m0(static_cast<Eigen::Index>(rm.model.size()));
        for (auto& v : m0)
            v = seed % 2 ? u(rng) : (u(rng) > 0 ? 1.0 : -1.0);
        const Trajectory tr = mean_field_ode(rm.model, m0, 1.0, 15.0);
        for (std::size_t k = 0; k < tr.values.size(); ++k) {
            CHECK(tr.values[k].cwiseAbs().maxCoeff() <= 1.0);
            if (k > 0)
                CHECK(tr.times[k] > tr.times[k - 1]);
        }
    }
}

TEST_CASE("stationarity defect") {
    const GameModel model = GameModel::on_graph(star_graph(6), CouplingSpec::uniform(0.7), {0.1}, {kLogit});
    const EquilibriumSolution sol = solve_newton(model, Eigen::VectorXd::Ones(6));
    CHECK(verify_stationarity(model, sol) < 1e-9);

    const double lambda = 1.6;
    Eigen::VectorXd delta(6);
    delta << 2e-6, -1e-6, 3e-6, 0.5e-6, -2e-6, 1e-6;
    EquilibriumSolution moved = sol;
    moved.m += delta;
    const Eigen::VectorXd linear = -lambda * stability_matrix(model, sol.m) * delta;
    CHECK((mean_field_rhs(model, moved.m, lambda) - linear).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(verify_stationarity(model, moved, lambda) == doctest::Approx(linear.cwiseAbs().maxCoeff()).epsilon(1e-3));

    const GameModel free = GameModel::on_graph(GraphSpec(3, {}), CouplingSpec::uniform(0.0), {0.2, -0.5, 1.1},
                                               {NoiseModel::logistic(1.7)});
    EquilibriumSolution closed;
    closed.m = Eigen::VectorXd(3);
    for (Eigen::Index i = 0; i < 3; ++i)
        closed.m[i] = std::tanh(1.7 * free.field(static_cast<std::size_t>(i)));
    CHECK(verify_stationarity(free, closed) < 1e-12);
}
