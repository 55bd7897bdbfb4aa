#include "qrenet/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>

#include <Eigen/Eigenvalues>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <fmt/format.h>

#include "qrenet/detail/parallel.hpp"

namespace qrenet {

namespace {

// Dense Newton below this size or above this fill fraction.
constexpr std::size_t kDenseNewtonLimit = 400;
constexpr double kDenseFillFraction = 0.25;
constexpr std::size_t kDenseStabilityLimit = 4096;
// Jacobians with 1/||S^-1||_1 below this are flagged as near a bifurcation.
constexpr double kConditioningWarning = 1e-4;

void require_size(const GameModel& model, const Eigen::VectorXd& m) {
    if (static_cast<std::size_t>(m.size()) != model.size())
        throw std::invalid_argument(
            fmt::format("state has {} entries, model has {} agents", m.size(), model.size()));
}

Eigen::VectorXd clamp_unit(Eigen::VectorXd m) { return m.cwiseMax(-1.0).cwiseMin(1.0); }

bool use_dense(const GameModel& model) {
    const double n = static_cast<double>(model.size());
    return model.size() <= kDenseNewtonLimit ||
           static_cast<double>(model.weights().nonzeros()) > kDenseFillFraction * n * n;
}

Eigen::VectorXd densities(const GameModel& model, const Eigen::VectorXd& h) {
    Eigen::VectorXd f(h.size());
    for (Eigen::Index i = 0; i < h.size(); ++i)
        f[i] = model.noise(static_cast<std::size_t>(i)).pdf_diff(h[i]);
    return f;
}

Eigen::SparseMatrix<double> sparse_stability_matrix(const GameModel& model, const Eigen::VectorXd& f) {
    const auto& W = model.weights();
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(W.nonzeros() + model.size());
    for (std::size_t i = 0; i < model.size(); ++i) {
        const auto row = static_cast<int>(i);
        triplets.emplace_back(row, row, 1.0);
        auto cols = W.row_cols(i);
        auto ws = W.row_weights(i);
        for (std::size_t k = 0; k < cols.size(); ++k)
            triplets.emplace_back(row, static_cast<int>(cols[k]), -4.0 * f[row] * ws[k]);
    }
    Eigen::SparseMatrix<double> S(static_cast<int>(model.size()), static_cast<int>(model.size()));
    S.setFromTriplets(triplets.begin(), triplets.end());
    return S;
}

Eigen::MatrixXd dense_from_densities(const GameModel& model, const Eigen::VectorXd& f) {
    const auto& W = model.weights();
    const auto n = static_cast<Eigen::Index>(model.size());
    Eigen::MatrixXd S = Eigen::MatrixXd::Identity(n, n);
    for (std::size_t i = 0; i < model.size(); ++i) {
        auto cols = W.row_cols(i);
        auto ws = W.row_weights(i);
        const auto row = static_cast<Eigen::Index>(i);
        for (std::size_t k = 0; k < cols.size(); ++k)
            S(row, static_cast<Eigen::Index>(cols[k])) -= 4.0 * f[row] * ws[k];
    }
    return S;
}

void finish(const GameModel& model, EquilibriumSolution& sol, const SolverOptions& options) {
    if (!options.classify)
        return;
    const auto report = assess_stability(model, sol.m, options.stability_margin);
    sol.stability = report.stability;
    sol.eigen_min_real = report.min_real;
    if (report.stability == Stability::unknown)
        sol.warnings.push_back("stability not classified: system exceeds the dense eigen-solver limit");
}

} // namespace

std::string_view to_string(Stability s) {
    switch (s) {
    case Stability::stable: return "stable";
    case Stability::unstable: return "unstable";
    case Stability::marginal: return "marginal";
    case Stability::unknown: return "unknown";
    }
    return "unknown";
}

Eigen::VectorXd local_field(const GameModel& model, const Eigen::VectorXd& m) {
    require_size(model, m);
    const auto& W = model.weights();
    Eigen::VectorXd h(m.size());
    for (std::size_t i = 0; i < model.size(); ++i) {
        auto cols = W.row_cols(i);
        auto ws = W.row_weights(i);
        double acc = 0.0;
        for (std::size_t k = 0; k < cols.size(); ++k)
            acc += ws[k] * m[static_cast<Eigen::Index>(cols[k])];
        h[static_cast<Eigen::Index>(i)] = 2.0 * model.field(i) + 2.0 * acc;
    }
    return h;
}

Eigen::VectorXd qre_map(const GameModel& model, const Eigen::VectorXd& m) {
    Eigen::VectorXd out = local_field(model, m);
    for (Eigen::Index i = 0; i < out.size(); ++i)
        out[i] = 2.0 * model.noise(static_cast<std::size_t>(i)).cdf_diff(out[i]) - 1.0;
    return out;
}

double fixed_point_residual(const GameModel& model, const Eigen::VectorXd& m) {
    return (m - qre_map(model, m)).lpNorm<Eigen::Infinity>();
}

EquilibriumSolution solve_fixed_point(const GameModel& model, const Eigen::VectorXd& m0,
                                      const SolverOptions& options) {
    require_size(model, m0);
    if (!(options.damping > 0.0 && options.damping <= 1.0))
        throw std::invalid_argument("damping must lie in (0, 1]");
    const double alpha = options.damping;
    Eigen::VectorXd m = clamp_unit(m0);
    double residual = std::numeric_limits<double>::infinity();
    for (int it = 0; it <= options.max_iter; ++it) {
        const Eigen::VectorXd image = qre_map(model, m);
        residual = (m - image).lpNorm<Eigen::Infinity>();
        if (residual < options.tol) {
            EquilibriumSolution sol;
            sol.m = std::move(m);
            sol.residual = residual;
            sol.iterations = it;
            sol.method = "fixed_point";
            finish(model, sol, options);
            return sol;
        }
        if (it == options.max_iter)
            break;
        m = (1.0 - alpha) * m + alpha * image;
    }
    throw ConvergenceError(
        fmt::format("damped fixed-point iteration did not converge in {} steps (residual {:.3e})",
                    options.max_iter, residual),
        m, residual, options.max_iter);
}

EquilibriumSolution solve_newton(const GameModel& model, const Eigen::VectorXd& m0, const SolverOptions& options) {
    require_size(model, m0);
    const bool dense = use_dense(model);
    EquilibriumSolution sol;
    sol.method = "newton";
    Eigen::VectorXd m = clamp_unit(m0);
    Eigen::VectorXd defect = m - qre_map(model, m);
    double residual = defect.lpNorm<Eigen::Infinity>();
    bool fell_back = false;
    int it = 0;

    for (; it < options.newton_max_iter && residual >= options.tol; ++it) {
        const Eigen::VectorXd f = densities(model, local_field(model, m));
        Eigen::VectorXd step;
        bool singular = false;
        if (dense) {
            const Eigen::MatrixXd S = dense_from_densities(model, f);
            Eigen::PartialPivLU<Eigen::MatrixXd> lu(S);
            if (!(lu.rcond() > 1e-14)) {
                singular = true;
            } else {
                step = lu.solve(defect);
            }
        } else {
            Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
            lu.compute(sparse_stability_matrix(model, f));
            if (lu.info() != Eigen::Success) {
                singular = true;
            } else {
                step = lu.solve(defect);
                if (lu.info() != Eigen::Success)
                    singular = true;
            }
        }
        if (!singular && !step.allFinite())
            singular = true;

        if (singular) {
            if (!fell_back) {
                sol.warnings.push_back("singular Jacobian: fell back to damped fixed-point steps");
                sol.method = "newton+fixed_point";
                fell_back = true;
            }
            for (int k = 0; k < 50; ++k)
                m = (1.0 - options.damping) * m + options.damping * qre_map(model, m);
            defect = m - qre_map(model, m);
            residual = defect.lpNorm<Eigen::Infinity>();
            continue;
        }

        // Backtracking on the max-norm of the defect.
        double t = 1.0;
        Eigen::VectorXd trial;
        Eigen::VectorXd trial_defect;
        double trial_residual = 0.0;
        for (int ls = 0; ls < 30; ++ls) {
            trial = clamp_unit(m - t * step);
            trial_defect = trial - qre_map(model, trial);
            trial_residual = trial_defect.lpNorm<Eigen::Infinity>();
            if (trial_residual <= (1.0 - 1e-4 * t) * residual)
                break;
            t *= 0.5;
        }
        m = std::move(trial);
        defect = std::move(trial_defect);
        residual = trial_residual;
    }

    if (residual >= options.tol)
        throw ConvergenceError(
            fmt::format("Newton iteration did not converge in {} steps (residual {:.3e})", it, residual), m,
            residual, it);

    if (dense) {
        const Eigen::MatrixXd S = dense_from_densities(model, densities(model, local_field(model, m)));
        const double inverse_norm_bound = Eigen::PartialPivLU<Eigen::MatrixXd>(S).rcond() * S.lpNorm<1>();
        if (inverse_norm_bound < kConditioningWarning)
            sol.warnings.push_back(
                fmt::format("ill-conditioned Jacobian (1/||S^-1|| ~ {:.2e}): equilibrium is near a bifurcation",
                            inverse_norm_bound));
    }
    sol.m = std::move(m);
    sol.residual = residual;
    sol.iterations = it;
    finish(model, sol, options);
    return sol;
}

EquilibriumSet enumerate_equilibria(const GameModel& model, const MultistartSpec& spec,
                                    const SolverOptions& options) {
    const auto n = static_cast<Eigen::Index>(model.size());
    std::vector<Eigen::VectorXd> starts;
    for (const auto& s : spec.extra) {
        require_size(model, s);
        starts.push_back(s);
    }
    if (spec.deterministic) {
        starts.push_back(Eigen::VectorXd::Constant(n, -1.0));
        starts.push_back(Eigen::VectorXd::Zero(n));
        starts.push_back(Eigen::VectorXd::Constant(n, 1.0));
    }
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (int r = 0; r < spec.random_starts; ++r) {
        Eigen::VectorXd s(n);
        for (Eigen::Index i = 0; i < n; ++i) s[i] = unit(rng);
        starts.push_back(std::move(s));
    }
    if (starts.empty())
        throw std::invalid_argument("enumerate_equilibria: no starting points");

    SolverOptions inner = options;
    inner.classify = false;
    std::vector<std::optional<EquilibriumSolution>> found(starts.size());
    detail::parallel_for(starts.size(), spec.threads, [&](std::size_t k) {
        try {
            found[k] = solve_newton(model, starts[k], inner);
            return;
        } catch (const ConvergenceError&) {
        }
        try {
            auto fp = solve_fixed_point(model, starts[k], inner);
            found[k] = solve_newton(model, fp.m, inner);
            found[k]->method = "fixed_point+newton";
        } catch (const ConvergenceError& e) {
            try {
                found[k] = solve_newton(model, e.last_iterate, inner);
                found[k]->method = "fixed_point+newton";
            } catch (const ConvergenceError&) {
            }
        }
    });

    EquilibriumSet out;
    out.starts = static_cast<int>(starts.size());
    for (auto& candidate : found) {
        if (!candidate || !(candidate->residual < options.tol)) {
            ++out.failed_starts;
            continue;
        }
        const bool duplicate = std::any_of(out.solutions.begin(), out.solutions.end(), [&](const auto& kept) {
            return (kept.m - candidate->m).template lpNorm<Eigen::Infinity>() <= spec.dedup_tol;
        });
        if (!duplicate)
            out.solutions.push_back(std::move(*candidate));
    }
    for (auto& sol : out.solutions)
        finish(model, sol, options);
    std::sort(out.solutions.begin(), out.solutions.end(), [](const auto& a, const auto& b) {
        const double ma = a.m.mean();
        const double mb = b.m.mean();
        if (ma != mb)
            return ma < mb;
        return std::lexicographical_compare(a.m.begin(), a.m.end(), b.m.begin(), b.m.end());
    });
    return out;
}

Eigen::MatrixXd stability_matrix(const GameModel& model, const Eigen::VectorXd& m) {
    return dense_from_densities(model, densities(model, local_field(model, m)));
}

StabilityReport classify_stability(const Eigen::MatrixXd& S, double margin) {
    if (S.rows() != S.cols() || S.rows() == 0)
        throw std::invalid_argument("classify_stability: matrix must be square and nonempty");
    double min_real = 0.0;
    if (S.isApprox(S.transpose(), 0.0)) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(S, Eigen::EigenvaluesOnly);
        if (solver.info() != Eigen::Success)
            throw std::runtime_error("classify_stability: symmetric eigen-solver failed");
        min_real = solver.eigenvalues().minCoeff();
    } else {
        Eigen::EigenSolver<Eigen::MatrixXd> solver(S, false);
        if (solver.info() != Eigen::Success)
            throw std::runtime_error("classify_stability: eigen-solver failed");
        min_real = solver.eigenvalues().real().minCoeff();
    }
    StabilityReport report;
    report.min_real = min_real;
    if (min_real > margin)
        report.stability = Stability::stable;
    else if (min_real >= -margin)
        report.stability = Stability::marginal;
    else
        report.stability = Stability::unstable;
    return report;
}

StabilityReport assess_stability(const GameModel& model, const Eigen::VectorXd& m, double margin) {
    require_size(model, m);
    if (model.size() > kDenseStabilityLimit)
        return {};
    const Eigen::VectorXd f = densities(model, local_field(model, m));
    if (!model.weights().symmetric())
        return classify_stability(dense_from_densities(model, f), margin);
    // I - D W shares its spectrum with the symmetric I - D^1/2 W D^1/2 (D >= 0).
    const Eigen::VectorXd root = f.cwiseSqrt();
    Eigen::MatrixXd A = -4.0 * (root.asDiagonal() * model.weights().dense() * root.asDiagonal());
    A.diagonal().array() += 1.0;
    A = 0.5 * (A + A.transpose()).eval();
    return classify_stability(A, margin);
}

} // namespace qrenet
