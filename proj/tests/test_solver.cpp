#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "qrenet/dynamics.hpp"
#include "qrenet/reductions.hpp"
#include "qrenet/solver.hpp"

using namespace qrenet;

namespace {

constexpr double kMStar = 0.957504024077268740;  // root of m = tanh(2m)

GameModel single_node(double J, double H, const NoiseModel& nz) {
    // One aggregated node that feels its own average: the complete-graph limit.
    return GameModel::from_weights(1, {{0, 0, J}}, {H}, {nz});
}

GameModel isolated(std::size_t n, std::vector<double> H, const NoiseModel& nz) {
    return GameModel::on_graph(GraphSpec(n, {}), CouplingSpec::uniform(0.0), std::move(H), {nz});
}

// Complete graph whose per-edge weight is J / (n - 1): the uniform solution
// solves the scalar equation m = 2F(2H + 2Jm) - 1 exactly.
GameModel complete_scaled(std::size_t n, double J, double H, const NoiseModel& nz) {
    return GameModel::on_graph(complete_graph(n), CouplingSpec::uniform(J / static_cast<double>(n - 1)), {H}, {nz});
}

double max_abs_diff(const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return (a - b).lpNorm<Eigen::Infinity>(); }

} // namespace

TEST_CASE("local field") {
    const GameModel free = isolated(3, {0.1, -0.2, 0.3}, NoiseModel::logistic(1.0));
    const Eigen::VectorXd h = local_field(free, Eigen::VectorXd::Constant(3, 0.7));
    CHECK(h[0] == doctest::Approx(0.2));
    CHECK(h[1] == doctest::Approx(-0.4));
    CHECK(h[2] == doctest::Approx(0.6));

    const GameModel k3 =
        GameModel::on_graph(complete_graph(3), CouplingSpec::uniform_over_n(3.0), {0.0}, {NoiseModel::logistic(1.0)});
    const Eigen::VectorXd h1 = local_field(k3, Eigen::VectorXd::Ones(3));
    for (int i = 0; i < 3; ++i)
        CHECK(h1[i] == doctest::Approx(4.0).epsilon(1e-15));

    const GameModel k3h =
        GameModel::on_graph(complete_graph(3), CouplingSpec::uniform(1.0), {0.25}, {NoiseModel::logistic(1.0)});
    const Eigen::VectorXd h0 = local_field(k3h, Eigen::VectorXd::Zero(3));
    for (int i = 0; i < 3; ++i)
        CHECK(h0[i] == doctest::Approx(0.5));
}

TEST_CASE("qre map") {
    const GameModel k5 = complete_scaled(5, 2.0, 0.0, NoiseModel::gaussian(1.0));
    CHECK(qre_map(k5, Eigen::VectorXd::Zero(5)).lpNorm<Eigen::Infinity>() == 0.0);
    for (double beta : {0.5, 1.0, 3.0})
        for (double H : {-0.4, 0.2, 1.0}) {
            const GameModel one = isolated(1, {H}, NoiseModel::logistic(beta));
            CHECK(qre_map(one, Eigen::VectorXd::Zero(1))[0] == doctest::Approx(std::tanh(beta * H)).epsilon(1e-14));
        }
    // self-map of the cube
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const auto rm = fixture::random_model(seed, 30, false);
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        Eigen::VectorXd m(static_cast<Eigen::Index>(rm.model.size()));
        for (auto& v : m)
            v = u(rng);
        const Eigen::VectorXd t = qre_map(rm.model, m);
        CHECK(t.maxCoeff() <= 1.0);
        CHECK(t.minCoeff() >= -1.0);
    }
}

TEST_CASE("fixed point and Newton on the reference cases") {
    SUBCASE("aggregated node, beta = 2, J = 1") {
        const GameModel model = single_node(1.0, 0.0, NoiseModel::logistic(2.0));
        const auto fp = solve_fixed_point(model, Eigen::VectorXd::Constant(1, 0.5));
        const auto nt = solve_newton(model, Eigen::VectorXd::Constant(1, 0.5));
        CHECK(std::abs(fp.m[0] - kMStar) < 1e-8);
        CHECK(std::abs(nt.m[0] - kMStar) < 1e-8);
        CHECK(std::abs(oracle::tanh_root(2.0) - kMStar) < 1e-12);
        CHECK(std::abs(fp.m[0] - nt.m[0]) < 1e-8);
    }
    SUBCASE("subcritical coupling has only m = 0") {
        // 4 J f(0) deg_max < 1
        const NoiseModel nz = NoiseModel::logistic(1.0);
        const GameModel model = GameModel::on_graph(star_graph(6), CouplingSpec::uniform(0.15), {0.0}, {nz});
        CHECK(4 * 0.15 * nz.density_at_zero() * 5 < 1.0);
        for (double start : {-1.0, 0.3, 1.0}) {
            const auto fp = solve_fixed_point(model, Eigen::VectorXd::Constant(6, start));
            const auto nt = solve_newton(model, Eigen::VectorXd::Constant(6, start));
            CHECK(fp.m.lpNorm<Eigen::Infinity>() < 1e-8);
            CHECK(nt.m.lpNorm<Eigen::Infinity>() < 1e-8);
        }
    }
    SUBCASE("no interaction") {
        const GameModel model = isolated(4, {0.5}, NoiseModel::logistic(1.0));
        const auto fp = solve_fixed_point(model, Eigen::VectorXd::Constant(4, -0.9));
        const auto nt = solve_newton(model, Eigen::VectorXd::Constant(4, -0.9));
        for (int i = 0; i < 4; ++i) {
            CHECK(std::abs(fp.m[i] - 0.462117157260009759) < 1e-8);
            CHECK(std::abs(nt.m[i] - 0.462117157260009759) < 1e-8);
        }
    }
}

TEST_CASE("Newton converges quadratically from the damped solution") {
    const GameModel model = complete_scaled(40, 2.0, 0.05, NoiseModel::logistic(1.0));
    SolverOptions loose;
    loose.tol = 1e-4;
    const auto rough = solve_fixed_point(model, Eigen::VectorXd::Constant(40, 0.5), loose);
    const auto nt = solve_newton(model, rough.m);
    CHECK(nt.iterations <= 5);
    CHECK(nt.residual < 1e-10);
    CHECK(nt.stability == Stability::stable);
}

TEST_CASE("near-critical solve reports conditioning") {
    const NoiseModel nz = NoiseModel::logistic(1.0);
    const double J = (1.0 - 1e-6) / (4.0 * nz.density_at_zero());
    const GameModel model = single_node(J, 0.0, nz);
    const auto sol = solve_newton(model, Eigen::VectorXd::Constant(1, 0.5));
    CHECK(sol.residual < 1e-10);
    CHECK(std::abs(sol.m[0]) < 1e-4);
    bool warned = false;
    for (const auto& w : sol.warnings)
        warned = warned || w.find("ill-conditioned") != std::string::npos;
    CHECK(warned);

    const GameModel k = complete_scaled(30, J, 0.0, nz);
    const auto solk = solve_newton(k, Eigen::VectorXd::Constant(30, 0.2));
    CHECK(solk.residual < 1e-10);
    CHECK_FALSE(solk.warnings.empty());
}

TEST_CASE("non-convergence carries the last iterate") {
    const GameModel model = complete_scaled(10, 2.0, 0.0, NoiseModel::logistic(1.0));
    SolverOptions opts;
    opts.max_iter = 3;
    try {
        solve_fixed_point(model, Eigen::VectorXd::Constant(10, 0.1), opts);
        FAIL("expected ConvergenceError");
    } catch (const ConvergenceError& e) {
        CHECK(e.iterations == 3);
        CHECK(e.last_iterate.size() == 10);
        CHECK(e.residual > opts.tol);
    }
}

TEST_CASE("enumeration on the complete graph") {
    const NoiseModel nz = NoiseModel::logistic(1.0);
    {
        const auto set = enumerate_equilibria(complete_scaled(50, 2.0, 0.0, nz));
        REQUIRE(set.solutions.size() == 3);
        CHECK(std::abs(set.solutions[0].m.mean() + kMStar) < 1e-8);
        CHECK(std::abs(set.solutions[1].m.mean()) < 1e-8);
        CHECK(std::abs(set.solutions[2].m.mean() - kMStar) < 1e-8);
        CHECK(set.solutions[0].stability == Stability::stable);
        CHECK(set.solutions[1].stability == Stability::unstable);
        CHECK(set.solutions[2].stability == Stability::stable);
    }
    {
        const auto set = enumerate_equilibria(complete_scaled(50, 0.5, 0.0, nz));
        REQUIRE(set.solutions.size() == 1);
        CHECK(set.solutions[0].m.lpNorm<Eigen::Infinity>() < 1e-8);
        CHECK(set.solutions[0].stability == Stability::stable);
    }
    {
        const auto set = enumerate_equilibria(complete_scaled(50, 2.0, 3.0, nz));
        REQUIRE(set.solutions.size() == 1);
        CHECK(set.solutions[0].m.minCoeff() > 0.0);
    }
}

TEST_CASE("every reported equilibrium satisfies its stored residual") {
    for (std::uint64_t seed = 100; seed < 130; ++seed) {
        const auto rm = fixture::random_model(seed, 20, false);
        const auto set = enumerate_equilibria(rm.model);
        CAPTURE(rm.label);
        CHECK_FALSE(set.solutions.empty());
        for (const auto& sol : set.solutions) {
            CHECK(sol.residual < 1e-10);
            CHECK(fixed_point_residual(rm.model, sol.m) == doctest::Approx(sol.residual).epsilon(1e-6).scale(1e-14));
            CHECK(sol.m.maxCoeff() <= 1.0);
            CHECK(sol.m.minCoeff() >= -1.0);
        }
        for (std::size_t a = 0; a < set.solutions.size(); ++a)
            for (std::size_t b = a + 1; b < set.solutions.size(); ++b)
                CHECK(max_abs_diff(set.solutions[a].m, set.solutions[b].m) > 1e-6);
    }
}

TEST_CASE("damped fixed point and Newton agree on 100 seeded models") {
    int compared = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto rm = fixture::random_model(seed, 30, true);
        CAPTURE(rm.label);
        const Eigen::VectorXd m0 = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(rm.model.size()), 0.3);
        const auto fp = solve_fixed_point(rm.model, m0);
        const auto nt = solve_newton(rm.model, m0);
        CHECK(max_abs_diff(fp.m, nt.m) < 1e-8);
        ++compared;
    }
    CHECK(compared == 100);
}

TEST_CASE("negating the field negates the equilibrium set") {
    auto check_pair = [](const GameModel& plus, const GameModel& minus) {
        const auto a = enumerate_equilibria(plus);
        const auto b = enumerate_equilibria(minus);
        REQUIRE(a.solutions.size() == b.solutions.size());
        const std::size_t k = a.solutions.size();
        for (std::size_t e = 0; e < k; ++e)
            CHECK(max_abs_diff(a.solutions[e].m, -b.solutions[k - 1 - e].m) < 1e-8);
    };
    const NoiseModel nz = NoiseModel::logistic(1.0);
    check_pair(complete_scaled(20, 2.0, 0.05, nz), complete_scaled(20, 2.0, -0.05, nz));
    check_pair(complete_scaled(20, 2.0, 0.0, nz), complete_scaled(20, 2.0, 0.0, nz));
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto rm = fixture::random_model(seed, 15, true);
        std::vector<double> neg;
        for (Eigen::Index i = 0; i < rm.model.fields().size(); ++i)
            neg.push_back(-rm.model.fields()[i]);
        std::vector<WeightEntry> w;
        const auto& W = rm.model.weights();
        for (std::size_t i = 0; i < W.size(); ++i)
            for (std::size_t k = 0; k < W.row_cols(i).size(); ++k)
                w.push_back({i, W.row_cols(i)[k], W.row_weights(i)[k]});
        std::vector<NoiseModel> noise;
        for (std::size_t i = 0; i < rm.model.size(); ++i)
            noise.push_back(rm.model.noise(i));
        CAPTURE(rm.label);
        check_pair(rm.model, GameModel::from_weights(rm.model.size(), w, neg, noise));
    }
}

TEST_CASE("complete graph with J/N reduces to the scalar equation") {
    const NoiseModel nz = NoiseModel::logistic(1.0);
    for (std::size_t n : {100, 250}) {
        for (double H : {0.0, 0.1}) {
            const double J = 1.5;
            const GameModel model =
                GameModel::on_graph(complete_graph(n), CouplingSpec::uniform_over_n(J), {H}, {nz});
            const auto sol = solve_newton(model, Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n)));
            // Each agent sees n - 1 others, so the scalar coupling is J (n - 1) / n.
            const double Jeff = J * static_cast<double>(n - 1) / static_cast<double>(n);
            const double ref = oracle::bisect(
                [&](double m) { return 2.0 / (1.0 + std::exp(-(2 * H + 2 * Jeff * m))) - 1.0 - m; }, 0.01, 1.0);
            CHECK(sol.m.maxCoeff() - sol.m.minCoeff() < 1e-12);
            CHECK(std::abs(sol.m.mean() - ref) < 1e-8);
            const auto roots = curie_weiss_roots(nz, Jeff, H);
            CHECK(std::abs(roots.back() - sol.m.mean()) < 1e-8);
        }
    }
}

TEST_CASE("star reduction") {
    for (const NoiseModel& nz : {NoiseModel::logistic(1.0), NoiseModel::gaussian(0.7), NoiseModel::uniform(1.5)}) {
        const std::size_t n = 12;
        const double J = 0.3;
        const double H = 0.05;
        const GameModel model = GameModel::on_graph(star_graph(n), CouplingSpec::uniform(J), {H}, {nz});
        for (const auto& sol : enumerate_equilibria(model).solutions) {
            for (std::size_t i = 2; i < n; ++i)
                CHECK(std::abs(sol.m[static_cast<Eigen::Index>(i)] - sol.m[1]) < 1e-12);
            const double hub = sol.m[0];
            const double leaf = sol.m[1];
            CHECK(star_reduction_residual(nz, J, H, n, hub, leaf) < 1e-8);
            CHECK(std::abs(2 * nz.cdf_diff(2 * H + 2 * J * (n - 1) * leaf) - 1 - hub) < 1e-8);
            CHECK(std::abs(2 * nz.cdf_diff(2 * H + 2 * J * hub) - 1 - leaf) < 1e-8);
        }
    }
}

TEST_CASE("cycle reduction") {
    const NoiseModel nz = NoiseModel::gaussian(1.0);
    for (double J : {0.2, 0.9}) {
        const GameModel model = GameModel::on_graph(cycle_graph(30), CouplingSpec::uniform(J), {0.02}, {nz});
        const auto sol = solve_newton(model, Eigen::VectorXd::Ones(30));
        CHECK(sol.m.maxCoeff() - sol.m.minCoeff() < 1e-12);
        CHECK(std::abs(cycle_defect(nz, J, 0.02, sol.m.mean())) < 1e-8);
        const auto roots = cycle_roots(nz, J, 0.02);
        CHECK(std::abs(roots.back() - sol.m.mean()) < 1e-8);
    }
}

TEST_CASE("stability matrix") {
    const GameModel free = isolated(4, {0.3}, NoiseModel::gaussian(1.0));
    CHECK((stability_matrix(free, Eigen::VectorXd::Zero(4)) - Eigen::MatrixXd::Identity(4, 4)).norm() == 0.0);

    const NoiseModel nz = NoiseModel::logistic(1.0);
    const double J = 0.6;
    const GameModel k = complete_scaled(8, J, 0.0, nz);
    const Eigen::MatrixXd S = stability_matrix(k, Eigen::VectorXd::Zero(8));
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(8);
    CHECK(((S * ones) - (1.0 - 4.0 * J * nz.density_at_zero()) * ones).norm() < 1e-14);

    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto rm = fixture::random_model(seed, 12, false);
        const auto set = enumerate_equilibria(rm.model);
        const double lambda = 1.7;
        for (const auto& sol : set.solutions) {
            const Eigen::MatrixXd fd = oracle::jacobian_fd(
                [&](const Eigen::VectorXd& m) { return mean_field_rhs(rm.model, m, lambda); }, sol.m);
            // piecewise-linear uniform densities have kinks; skip points sitting on one
            bool smooth = true;
            for (std::size_t i = 0; i < rm.model.size(); ++i)
                if (rm.model.noise(i).kind() == NoiseKind::uniform)
                    smooth = false;
            if (!smooth)
                continue;
            CAPTURE(rm.label);
            CHECK((fd + lambda * stability_matrix(rm.model, sol.m)).lpNorm<Eigen::Infinity>() < 1e-5);
        }
    }
}

TEST_CASE("stability classification") {
    const NoiseModel nz = NoiseModel::logistic(1.0);
    const GameModel super = complete_scaled(20, 2.0, 0.0, nz);
    CHECK(assess_stability(super, Eigen::VectorXd::Zero(20)).stability == Stability::unstable);
    const auto set = enumerate_equilibria(super);
    REQUIRE(set.solutions.size() == 3);
    for (const auto& sol : set.solutions) {
        const auto report = classify_stability(stability_matrix(super, sol.m));
        Eigen::EigenSolver<Eigen::MatrixXd> eig(stability_matrix(super, sol.m));
        const double min_real = eig.eigenvalues().real().minCoeff();
        CHECK(report.min_real == doctest::Approx(min_real).epsilon(1e-9));
        CHECK(report.stability == (min_real > 0 ? Stability::stable : Stability::unstable));
        if (std::abs(sol.m.mean()) > 0.5)
            CHECK(report.stability == Stability::stable);
    }
    const GameModel sub = complete_scaled(20, 0.5, 0.0, nz);
    const auto rep = assess_stability(sub, Eigen::VectorXd::Zero(20));
    CHECK(rep.stability == Stability::stable);
    CHECK(rep.min_real == doctest::Approx(0.5).epsilon(1e-12));

    const GameModel critical = complete_scaled(20, 1.0, 0.0, nz);
    CHECK(assess_stability(critical, Eigen::VectorXd::Zero(20)).stability == Stability::marginal);

    Eigen::MatrixXd rot(2, 2);
    rot << 1.0, -2.0, 2.0, 1.0;  // eigenvalues 1 +- 2i
    CHECK(classify_stability(rot).stability == Stability::stable);
    CHECK(classify_stability(-rot).stability == Stability::unstable);
}

TEST_CASE("multistart is deterministic and thread-count independent") {
    const auto rm = fixture::random_model(77, 25, false);
    MultistartSpec a;
    a.seed = 5;
    MultistartSpec b = a;
    b.threads = 4;
    const auto s1 = enumerate_equilibria(rm.model, a);
    const auto s2 = enumerate_equilibria(rm.model, a);
    const auto s3 = enumerate_equilibria(rm.model, b);
    REQUIRE(s1.solutions.size() == s2.solutions.size());
    REQUIRE(s1.solutions.size() == s3.solutions.size());
    for (std::size_t k = 0; k < s1.solutions.size(); ++k) {
        CHECK(s1.solutions[k].m == s2.solutions[k].m);
        CHECK(s1.solutions[k].m == s3.solutions[k].m);
    }
}

TEST_CASE("model validation") {
    const NoiseModel nz = NoiseModel::logistic(1.0);
    CHECK_THROWS_AS(GameModel::on_graph(cycle_graph(4), CouplingSpec::uniform(1.0), {0.0, 1.0}, {nz}),
                    std::invalid_argument);
    CHECK_THROWS_AS(GameModel::on_graph(cycle_graph(4), CouplingSpec::uniform(1.0), {0.0}, {nz, nz}),
                    std::invalid_argument);
    CHECK_THROWS_AS(GameModel::on_graph(cycle_graph(4), CouplingSpec::uniform(NAN), {0.0}, {nz}),
                    std::invalid_argument);
    CHECK_THROWS_AS(GameModel::on_graph(cycle_graph(4), CouplingSpec::matrix({{0, 2, 1.0}}), {0.0}, {nz}),
                    std::invalid_argument);
    CHECK_THROWS_AS(GameModel::from_weights(2, {{0, 5, 1.0}}, {0.0}, {nz}), std::invalid_argument);
    const GameModel mat = GameModel::on_graph(parse_edge_list("0 1\n1 2", true), CouplingSpec::matrix({{0, 1, 0.5}, {1, 2, -0.25}}),
                                              {0.0}, {nz});
    CHECK(mat.weights().dense()(0, 1) == 0.5);
    CHECK(mat.weights().dense()(1, 2) == -0.25);
    CHECK(mat.weights().dense()(1, 0) == 0.0);
}
