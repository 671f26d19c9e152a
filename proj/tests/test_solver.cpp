#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "lrrid/errors.hpp"
#include "lrrid/solver.hpp"
#include "test_support.hpp"

namespace lrrid::testing {
#include "oracles/convex_oracles.inc"
}

namespace lrrid {
namespace {

using testing::finite_difference_gradient;
using testing::max_abs_diff;
using testing::random_matrix;

// State with random iterates; X and J etc. are m x n, Y is d x n.
SolverState random_state(std::mt19937_64& gen, int d, int m, int n, double mu) {
    SolverState s;
    s.X = random_matrix(gen, m, n);
    s.J = random_matrix(gen, m, n);
    s.L = random_matrix(gen, m, n);
    s.E = random_matrix(gen, d, n, 0.3);
    s.D = project_columns_unit_ball(random_matrix(gen, d, m));
    s.T1 = random_matrix(gen, d, n);
    s.T2 = random_matrix(gen, m, n);
    s.T3 = random_matrix(gen, m, n);
    s.mu = mu;
    return s;
}

// Augmented-Lagrangian X-subproblem (smooth in X).
double x_subproblem(const Matrix& X, const SolverState& s, const Matrix& Y) {
    const Matrix R = Y - s.D * X - s.E;
    return (s.T1.array() * R.array()).sum() + (s.T2.array() * (X - s.J).array()).sum() +
           (s.T3.array() * (X - s.L).array()).sum() +
           0.5 * s.mu * (R.squaredNorm() + (X - s.J).squaredNorm() + (X - s.L).squaredNorm());
}

// Term-by-term loops, sharing nothing with the library's matrix expressions.
double dict_objective_loops(const Matrix& D, const SolverState& s, const Matrix& Y, double gamma) {
    const auto d = D.rows();
    const auto m = D.cols();
    const auto n = Y.cols();
    double incoherence = 0.0;
    for (Eigen::Index a = 0; a < m; ++a) {
        for (Eigen::Index b = 0; b < m; ++b) {
            double g = 0.0;
            for (Eigen::Index i = 0; i < d; ++i) g += D(i, a) * D(i, b);
            if (a == b) g -= 1.0;
            incoherence += g * g;
        }
    }
    double linear = 0.0;
    double quad = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            double dx = 0.0;
            for (Eigen::Index k = 0; k < m; ++k) dx += D(i, k) * s.X(k, j);
            const double r = Y(i, j) - dx - s.E(i, j);
            linear += s.T1(i, j) * r;
            quad += r * r;
        }
    }
    return gamma * incoherence + linear + 0.5 * s.mu * quad;
}

TEST(Hyperparams, Validation) {
    Hyperparams ok;
    EXPECT_NO_THROW(ok.validate());
    auto expect_bad = [](auto mutate) {
        Hyperparams h;
        mutate(h);
        EXPECT_THROW(h.validate(), std::invalid_argument);
    };
    expect_bad([](Hyperparams& h) { h.lambda = 0.0; });
    expect_bad([](Hyperparams& h) { h.beta = -1.0; });
    expect_bad([](Hyperparams& h) { h.gamma = -1e-9; });
    expect_bad([](Hyperparams& h) { h.rho = 1.0; });
    expect_bad([](Hyperparams& h) { h.mu0 = h.mu_max; });
    expect_bad([](Hyperparams& h) { h.dict_step = FixedStep{0.0}; });
    expect_bad([](Hyperparams& h) { h.dict_step = Backtracking{1.5, 20}; });
}

TEST(UpdateJ, ZeroIteratesGiveZero) {
    SolverState s = SolverState::initial(Matrix::Zero(4, 6), Matrix::Identity(4, 3), 1.0);
    EXPECT_EQ(update_J(s), Matrix::Zero(3, 6));
}

TEST(UpdateJ, LargePenaltyRemovesThreshold) {
    std::mt19937_64 gen(20);
    SolverState s = random_state(gen, 4, 5, 8, 1e12);
    EXPECT_LE(max_abs_diff(update_J(s), s.X + s.T2 / s.mu), 1e-6);
}

TEST(UpdateJ, MatchesConvexSolverOracle) {
    SolverState s;
    s.X = testing::kJX.matrix();
    s.T2 = testing::kJT2.matrix();
    s.mu = testing::kJMu;
    EXPECT_LE(max_abs_diff(update_J(s), testing::kJExpected.matrix()), 1e-5);
}

TEST(UpdateX, IdentityDictionaryWithFullError) {
    std::mt19937_64 gen(21);
    const Matrix Y = random_matrix(gen, 4, 6);
    SolverState s = SolverState::initial(Y, Matrix::Identity(4, 4), 1.0);
    s.E = Y;
    EXPECT_LE(max_abs(update_X(s, Y, s.J)), 1e-15);
}

TEST(UpdateX, RecoversConsistentCodes) {
    std::mt19937_64 gen(22);
    const Matrix D = random_matrix(gen, 10, 4);
    const Matrix X_star = random_matrix(gen, 4, 7);
    const Matrix Y = D * X_star;
    SolverState s = SolverState::initial(Y, D, 3.0);
    s.J = X_star;
    s.L = X_star;
    const Matrix X = update_X(s, Y, s.J);
    const Matrix lhs = D.transpose() * D + 2.0 * Matrix::Identity(4, 4);
    const Matrix rhs = D.transpose() * Y + 2.0 * X_star;
    EXPECT_LE((lhs * X - rhs).norm(), 1e-8 * std::max(1.0, rhs.norm()));
    EXPECT_LE(max_abs_diff(X, X_star), 1e-10);
}

TEST(UpdateX, IsStationaryForTheQuadratic) {
    std::mt19937_64 gen(23);
    const SolverState s = random_state(gen, 12, 6, 9, 1.7);
    const Matrix Y = random_matrix(gen, 12, 9);
    const Matrix X = update_X(s, Y, s.J);
    const Matrix fd = finite_difference_gradient(
        [&](const Matrix& Z) { return x_subproblem(Z, s, Y); }, X, 1e-5);
    EXPECT_LE(max_abs(fd), 1e-5);

    const Matrix analytic = -s.D.transpose() * s.T1 + s.T2 + s.T3 +
                            s.mu * (s.D.transpose() * (s.D * X + s.E - Y) + 2.0 * X - s.J - s.L);
    EXPECT_LE(analytic.norm(), 1e-6 * std::max(1.0, X.norm()));
}

TEST(UpdateL, ZeroAndUnthresholdedCases) {
    std::mt19937_64 gen(24);
    SolverState s = SolverState::initial(Matrix::Zero(3, 5), Matrix::Identity(3, 4), 2.0);
    EXPECT_EQ(update_L(s, Matrix::Zero(4, 5), 0.1), Matrix::Zero(4, 5));

    s.T3 = random_matrix(gen, 4, 5);
    const Matrix X = random_matrix(gen, 4, 5);
    // Zero weight is outside Hyperparams' domain but the update itself is defined.
    EXPECT_LE(max_abs_diff(update_L(s, X, 0.0), X + s.T3 / s.mu), 1e-15);
}

TEST(UpdateL, MatchesEntrywiseOracle) {
    std::mt19937_64 gen(25);
    const SolverState s = random_state(gen, 3, 4, 6, 1.3);
    const Matrix X = random_matrix(gen, 4, 6);
    const double beta = 0.7;
    const Matrix L = update_L(s, X, beta);
    for (Eigen::Index i = 0; i < L.rows(); ++i) {
        for (Eigen::Index j = 0; j < L.cols(); ++j) {
            const double x = X(i, j);
            const double t = s.T3(i, j);
            const auto f = [&](double l) {
                return beta * std::abs(l) + t * (x - l) + 0.5 * s.mu * (x - l) * (x - l);
            };
            const double r = std::abs(x) + std::abs(t) / s.mu + beta / s.mu + 1.0;
            EXPECT_NEAR(L(i, j), testing::ternary_minimize(f, -r, r), 1e-5);
        }
    }
}

TEST(UpdateE, ZeroResidualAndFullShrinkage) {
    std::mt19937_64 gen(26);
    const Matrix D = random_matrix(gen, 5, 3);
    const Matrix X = random_matrix(gen, 3, 4);
    const Matrix Y = D * X;
    SolverState s = SolverState::initial(Y, D, 1.0);
    EXPECT_LE(max_abs(update_E(s, Y, X, 0.1)), 1e-14);

    const Matrix Y2 = Y + random_matrix(gen, 5, 4);
    const double biggest = max_abs(Y2 - D * X);
    EXPECT_EQ(update_E(s, Y2, X, 1.01 * biggest * s.mu), Matrix::Zero(5, 4));
}

TEST(UpdateE, MatchesEntrywiseOracle) {
    std::mt19937_64 gen(27);
    const SolverState s = random_state(gen, 5, 3, 4, 0.8);
    const Matrix Y = random_matrix(gen, 5, 4);
    const Matrix X = random_matrix(gen, 3, 4);
    const double lambda = 0.4;
    const Matrix E = update_E(s, Y, X, lambda);
    const Matrix DX = s.D * X;
    for (Eigen::Index i = 0; i < E.rows(); ++i) {
        for (Eigen::Index j = 0; j < E.cols(); ++j) {
            const double base = Y(i, j) - DX(i, j);
            const double t = s.T1(i, j);
            const auto f = [&](double e) {
                return lambda * std::abs(e) + t * (base - e) + 0.5 * s.mu * (base - e) * (base - e);
            };
            const double r = std::abs(base) + std::abs(t) / s.mu + lambda / s.mu + 1.0;
            EXPECT_NEAR(E(i, j), testing::ternary_minimize(f, -r, r), 1e-5);
        }
    }
}

TEST(Subproblems, OutputsAreLocallyOptimal) {
    std::mt19937_64 gen(28);
    const SolverState s = random_state(gen, 6, 4, 5, 1.1);
    const Matrix Y = random_matrix(gen, 6, 5);
    const double beta = 0.3;
    const double lambda = 0.2;

    const Matrix J = update_J(s);
    const auto fJ = [&](const Matrix& Z) {
        return testing::nuclear_norm_oracle(Z) + (s.T2.array() * (s.X - Z).array()).sum() +
               0.5 * s.mu * (s.X - Z).squaredNorm();
    };
    const Matrix L = update_L(s, s.X, beta);
    const auto fL = [&](const Matrix& Z) {
        return beta * Z.cwiseAbs().sum() + (s.T3.array() * (s.X - Z).array()).sum() +
               0.5 * s.mu * (s.X - Z).squaredNorm();
    };
    const Matrix E = update_E(s, Y, s.X, lambda);
    const Matrix base = Y - s.D * s.X;
    const auto fE = [&](const Matrix& Z) {
        return lambda * Z.cwiseAbs().sum() + (s.T1.array() * (base - Z).array()).sum() +
               0.5 * s.mu * (base - Z).squaredNorm();
    };

    for (int k = 0; k < 100; ++k) {
        EXPECT_LE(fJ(J), fJ(J + random_matrix(gen, J.rows(), J.cols(), 1e-3)) + 1e-12);
        EXPECT_LE(fL(L), fL(L + random_matrix(gen, L.rows(), L.cols(), 1e-3)) + 1e-12);
        EXPECT_LE(fE(E), fE(E + random_matrix(gen, E.rows(), E.cols(), 1e-3)) + 1e-12);
    }
}

TEST(DictObjective, VanishingCases) {
    std::mt19937_64 gen(29);
    const Matrix D = random_matrix(gen, 6, 3);
    SolverState s = SolverState::initial(Matrix::Zero(6, 4), D, 2.0);
    s.X = random_matrix(gen, 3, 4);
    s.E = random_matrix(gen, 6, 4);
    const Matrix Y = D * s.X + s.E;
    EXPECT_NEAR(dict_objective(D, s, Y, 0.0), 0.0, 1e-24);

    const Matrix Q = Eigen::HouseholderQR<Matrix>(random_matrix(gen, 6, 3)).householderQ();
    const Matrix orthonormal = Q.leftCols(3);
    SolverState t = SolverState::initial(Matrix::Zero(6, 4), orthonormal, 2.0);
    const Matrix Y2 = random_matrix(gen, 6, 4);
    t.E = Y2;
    EXPECT_NEAR(dict_objective(orthonormal, t, Y2, 5.0), 0.0, 1e-24);
}

TEST(DictObjective, MatchesTermByTermEvaluation) {
    std::mt19937_64 gen(30);
    for (int trial = 0; trial < 10; ++trial) {
        const SolverState s = random_state(gen, 9, 4, 7, testing::random_real(gen, 0.1, 5.0));
        const Matrix Y = random_matrix(gen, 9, 7);
        const double gamma = testing::random_real(gen, 0.0, 2.0);
        const double expected = dict_objective_loops(s.D, s, Y, gamma);
        EXPECT_NEAR(dict_objective(s.D, s, Y, gamma), expected, 1e-10 * std::max(1.0, std::abs(expected)));
    }
}

TEST(DictGradient, ZeroCases) {
    std::mt19937_64 gen(31);
    SolverState s = SolverState::initial(Matrix::Zero(5, 4), random_matrix(gen, 5, 3), 1.0);
    s.T1 = random_matrix(gen, 5, 4);
    const Matrix Y = random_matrix(gen, 5, 4);
    EXPECT_EQ(dict_gradient(s.D, s, Y, 0.0), Matrix::Zero(5, 3));

    SolverState t = SolverState::initial(Matrix::Zero(4, 2), Matrix::Identity(4, 4), 0.0);
    EXPECT_LE(max_abs(dict_gradient(t.D, t, Matrix::Zero(4, 2), 1.0)), 1e-15);
}

TEST(DictGradient, MatchesFiniteDifferences) {
    std::mt19937_64 gen(32);
    for (int trial = 0; trial < 20; ++trial) {
        const int d = testing::random_int(gen, 2, 10);
        const int m = testing::random_int(gen, 1, 5);
        const int n = testing::random_int(gen, 1, 8);
        const SolverState s = random_state(gen, d, m, n, testing::random_real(gen, 0.1, 3.0));
        const Matrix Y = random_matrix(gen, d, n);
        const double gamma = testing::random_real(gen, 0.0, 1.0);
        const Matrix fd = finite_difference_gradient(
            [&](const Matrix& D) { return dict_objective(D, s, Y, gamma); }, s.D, 1e-5);
        EXPECT_LE(max_abs_diff(dict_gradient(s.D, s, Y, gamma), fd), 1e-4);
    }
}

TEST(UpdateD, StationaryPointIsKept) {
    SolverState s = SolverState::initial(Matrix::Zero(4, 3), Matrix::Identity(4, 4), 1.0);
    Hyperparams h;
    h.gamma = 1.0;
    const DictUpdate du = update_D(s, Matrix::Zero(4, 3), h);
    EXPECT_EQ(du.D, s.D);
    EXPECT_FALSE(du.stalled);
    EXPECT_EQ(du.accepted_steps, 0);
}

TEST(UpdateD, FixedStepArithmetic) {
    std::mt19937_64 gen(33);
    SolverState s = SolverState::initial(Matrix::Zero(6, 5), Matrix::Zero(6, 3), 0.0);
    s.D = 0.01 * random_matrix(gen, 6, 3);
    s.X = 0.1 * random_matrix(gen, 3, 5);
    s.T1 = 0.1 * random_matrix(gen, 6, 5);
    Hyperparams h;
    h.gamma = 0.0;
    h.dict_inner_steps = 1;
    h.dict_step = FixedStep{0.05};
    const DictUpdate du = update_D(s, Matrix::Zero(6, 5), h);
    const Matrix expected = s.D + 0.05 * s.T1 * s.X.transpose();
    ASSERT_LE(expected.colwise().norm().maxCoeff(), 1.0);  // projection inactive
    EXPECT_LE(max_abs_diff(du.D, expected), 1e-15);
}

TEST(UpdateD, BacktrackingDecreasesObjectiveMonotonically) {
    std::mt19937_64 gen(34);
    for (int trial = 0; trial < 5; ++trial) {
        const SolverState s = random_state(gen, 8, 4, 10, 2.0);
        const Matrix Y = random_matrix(gen, 8, 10);
        Hyperparams h;
        h.gamma = 0.5;
        h.dict_inner_steps = 10;
        const DictUpdate du = update_D(s, Y, h);
        ASSERT_GE(du.objectives.size(), 2u);
        for (std::size_t q = 1; q < du.objectives.size(); ++q) {
            EXPECT_LT(du.objectives[q], du.objectives[q - 1]);
        }
        EXPECT_LE(du.D.colwise().norm().maxCoeff(), 1.0 + 1e-12);
    }
}

TEST(UpdateD, SphereConstraintKeepsUnitAtoms) {
    std::mt19937_64 gen(35);
    const SolverState s = random_state(gen, 8, 4, 10, 2.0);
    Hyperparams h;
    h.atom_constraint = AtomConstraint::unit_sphere;
    const DictUpdate du = update_D(s, random_matrix(gen, 8, 10), h);
    for (Eigen::Index j = 0; j < du.D.cols(); ++j) EXPECT_NEAR(du.D.col(j).norm(), 1.0, 1e-12);
}

TEST(UpdateD, ExhaustedLineSearchReturnsCurrentIterate) {
    // Gradient points radially out of the unit ball, so every projected
    // trial point equals D and no step can decrease the objective.
    Matrix D = Matrix::Zero(3, 1);
    D(0, 0) = 1.0;
    SolverState s = SolverState::initial(Matrix::Zero(3, 1), D, 0.0);
    s.X = Matrix::Ones(1, 1);
    s.T1 = D;
    Hyperparams h;
    h.gamma = 0.0;
    const DictUpdate du = update_D(s, Matrix::Zero(3, 1), h);
    EXPECT_TRUE(du.stalled);
    EXPECT_EQ(du.D, D);
}

TEST(UpdateMultipliers, FeasibleIteratesOnlyGrowPenalty) {
    std::mt19937_64 gen(36);
    SolverState s = SolverState::initial(Matrix::Zero(5, 4), random_matrix(gen, 5, 3), 0.5);
    s.X = random_matrix(gen, 3, 4);
    s.J = s.X;
    s.L = s.X;
    s.E = random_matrix(gen, 5, 4);
    s.T1 = random_matrix(gen, 5, 4);
    const Matrix Y = s.D * s.X + s.E;
    Hyperparams h;
    const SolverState next = update_multipliers_and_mu(s, Y, h);
    EXPECT_LE(max_abs_diff(next.T1, s.T1), 1e-15);
    EXPECT_EQ(next.T2, s.T2);
    EXPECT_EQ(next.T3, s.T3);
    EXPECT_DOUBLE_EQ(next.mu, 0.5 * h.rho);
}

TEST(UpdateMultipliers, PenaltyIsCapped) {
    SolverState s = SolverState::initial(Matrix::Zero(2, 2), Matrix::Identity(2, 2), 1e8);
    Hyperparams h;
    EXPECT_EQ(update_multipliers_and_mu(s, Matrix::Zero(2, 2), h).mu, h.mu_max);
}

TEST(UpdateMultipliers, ArithmeticMatchesDirectRecomputation) {
    std::mt19937_64 gen(37);
    const SolverState s = random_state(gen, 5, 3, 4, 0.9);
    const Matrix Y = random_matrix(gen, 5, 4);
    Hyperparams h;
    const SolverState next = update_multipliers_and_mu(s, Y, h);
    for (Eigen::Index i = 0; i < 5; ++i) {
        for (Eigen::Index j = 0; j < 4; ++j) {
            const double dx = s.D.row(i).dot(s.X.col(j));
            EXPECT_NEAR(next.T1(i, j), s.T1(i, j) + 0.9 * (Y(i, j) - dx - s.E(i, j)), 1e-14);
        }
    }
    EXPECT_LE(max_abs_diff(next.T2, s.T2 + 0.9 * (s.X - s.J)), 1e-15);
    EXPECT_LE(max_abs_diff(next.T3, s.T3 + 0.9 * (s.X - s.L)), 1e-15);
    EXPECT_DOUBLE_EQ(next.mu, 0.9 * 1.1);
}

TEST(CheckConvergence, StrictInequality) {
    const double eps = 1e-6;
    SolverState s = SolverState::initial(Matrix::Zero(3, 2), Matrix::Identity(3, 2), 1.0);
    const Matrix Y = Matrix::Zero(3, 2);
    EXPECT_TRUE(check_convergence(s, Y, eps));

    s.E(1, 1) = -2.0 * eps;
    EXPECT_FALSE(check_convergence(s, Y, eps));

    s.E(1, 1) = -eps;
    EXPECT_FALSE(check_convergence(s, Y, eps));

    s.E(1, 1) = 0.0;
    s.J(0, 0) = eps;
    EXPECT_FALSE(check_convergence(s, Y, eps));
}

TEST(SolveLrrid, ZeroDataConvergesImmediately) {
    std::mt19937_64 gen(38);
    const Matrix D0 = project_columns_unit_ball(random_matrix(gen, 6, 4));
    const SolveResult r = solve_lrrid(Matrix::Zero(6, 5), 3, D0, Hyperparams{});
    EXPECT_TRUE(r.converged);
    EXPECT_EQ(r.iters_used, 1);
    EXPECT_EQ(r.X_train, Matrix::Zero(4, 3));
    EXPECT_EQ(r.X_test, Matrix::Zero(4, 2));
    EXPECT_EQ(r.E, Matrix::Zero(6, 5));
    EXPECT_EQ(r.residual_history.size(), 1u);
}

TEST(SolveLrrid, SplitsCodesByTrainingColumns) {
    const auto inst = testing::make_low_rank_sparse_instance(5);
    Hyperparams h;
    h.max_outer_iters = 30;
    const SolveResult r = solve_lrrid(inst.Y, 12, inst.D_star, h);
    EXPECT_EQ(r.X_train.cols(), 12);
    EXPECT_EQ(r.X_test.cols(), 8);
    EXPECT_FALSE(r.converged);
    EXPECT_EQ(r.iters_used, 30);
    EXPECT_EQ(r.residual_history.size(), 30u);
    EXPECT_EQ(r.codes().cols(), 20);
}

TEST(SolveLrrid, RejectsInconsistentInputs) {
    const Matrix Y = Matrix::Ones(4, 3);
    EXPECT_THROW(solve_lrrid(Y, 2, Matrix::Identity(5, 2), Hyperparams{}), std::invalid_argument);
    EXPECT_THROW(solve_lrrid(Y, 4, Matrix::Identity(4, 2), Hyperparams{}), std::invalid_argument);
    Hyperparams bad;
    bad.rho = 0.5;
    EXPECT_THROW(solve_lrrid(Y, 2, Matrix::Identity(4, 2), bad), std::invalid_argument);
}

TEST(SolveLrrid, InvariantsAlongTheRun) {
    const auto inst = testing::make_low_rank_sparse_instance(11);
    Hyperparams h;
    h.lambda = 0.1;
    h.beta = 0.1;
    SolverState s = SolverState::initial(inst.Y, inst.D_star, h.mu0);
    double last_mu = s.mu;
    for (int k = 0; k < 200; ++k) {
        alm_iteration(s, inst.Y, h, true);
        ASSERT_GE(s.mu, last_mu);
        ASSERT_LE(s.mu, h.mu_max);
        ASSERT_LE(s.D.colwise().norm().maxCoeff(), 1.0 + 1e-12);
        last_mu = s.mu;
        if (check_convergence(s, inst.Y, h.eps_conv)) break;
    }
}

TEST(SolveLrrid, ReportsFailingBlockOnNonFiniteIterate) {
    SolverState s = SolverState::initial(Matrix::Ones(3, 2), Matrix::Identity(3, 2), 1.0);
    s.E(0, 0) = std::nan("");
    try {
        alm_iteration(s, Matrix::Ones(3, 2), Hyperparams{}, true);
        FAIL() << "expected NumericalError";
    } catch (const NumericalError& e) {
        EXPECT_NE(std::string(e.what()).find("update_X"), std::string::npos) << e.what();
    }
}

double max_residual(const ResidualRecord& r) { return std::max({r.res_data, r.res_xj, r.res_xl}); }

std::size_t first_capped(const SolveResult& r, double mu_max) {
    std::size_t k = 0;
    while (k < r.residual_history.size() && r.residual_history[k].mu < mu_max) ++k;
    return k;
}

TEST(SolveLrrs, ResidualsNonIncreasingOnceMuIsCapped) {
    for (std::uint64_t seed : {3, 4, 5}) {
        const auto inst = testing::make_low_rank_sparse_instance(seed);
        Hyperparams h;
        h.mu_max = 1e3;
        h.eps_conv = 1e-9;
        const SolveResult r = solve_lrrs(inst.Y, 15, inst.D_star, h);
        for (std::size_t k = first_capped(r, h.mu_max) + 1; k < r.residual_history.size(); ++k) {
            EXPECT_LE(max_residual(r.residual_history[k]),
                      max_residual(r.residual_history[k - 1]) * (1.0 + 1e-9) + 1e-14)
                << "seed " << seed << " iteration " << k;
        }
    }
}

// With dictionary learning the post-cap residuals wobble; they still settle.
TEST(SolveLrrid, ResidualsSettleOnceMuIsCapped) {
    const auto inst = testing::make_low_rank_sparse_instance(3);
    Hyperparams h;
    h.mu_max = 1e5;
    h.eps_conv = 1e-9;
    const SolveResult r = solve_lrrid(inst.Y, 15, inst.D_star, h);
    const std::size_t start = first_capped(r, h.mu_max);
    ASSERT_LT(start, r.residual_history.size());
    EXPECT_TRUE(r.converged);
    EXPECT_LT(max_residual(r.residual_history.back()), max_residual(r.residual_history[start]));
}

TEST(SolveLrrs, KeepsDictionaryFixed) {
    const auto inst = testing::make_low_rank_sparse_instance(4);
    Hyperparams h;
    const SolveResult r = solve_lrrs(inst.Y, 10, inst.D_star, h);
    EXPECT_EQ(r.D, inst.D_star);
    EXPECT_TRUE(r.converged);
    const Matrix resid = inst.Y - r.D * r.codes() - r.E;
    EXPECT_LT(max_abs(resid), h.eps_conv);
}

TEST(SolveLrrs, ZeroData) {
    const SolveResult r = solve_lrrs(Matrix::Zero(4, 4), 2, Matrix::Identity(4, 3), Hyperparams{});
    EXPECT_TRUE(r.converged);
    EXPECT_EQ(r.iters_used, 1);
}

TEST(SolveLrrs, EquivalentToLrridWithoutDictionaryLearning) {
    const auto inst = testing::make_low_rank_sparse_instance(9);
    Hyperparams h;
    h.gamma = 0.0;
    h.dict_inner_steps = 0;
    const SolveResult a = solve_lrrid(inst.Y, 12, inst.D_star, h);
    const SolveResult b = solve_lrrs(inst.Y, 12, inst.D_star, h);
    EXPECT_EQ(a.X_train, b.X_train);
    EXPECT_EQ(a.X_test, b.X_test);
    EXPECT_EQ(a.E, b.E);
    EXPECT_EQ(a.D, b.D);
    EXPECT_EQ(a.iters_used, b.iters_used);
}

TEST(AlmIteration, FollowsBlockOrder) {
    const auto inst = testing::make_low_rank_sparse_instance(13);
    Hyperparams h;
    h.mu0 = 0.5;
    SolverState run = SolverState::initial(inst.Y, inst.D_star, h.mu0);
    SolverState manual = run;
    SolverState permuted = run;
    for (int k = 0; k < 3; ++k) {
        alm_iteration(run, inst.Y, h, true);

        manual.J = update_J(manual);
        manual.X = update_X(manual, inst.Y, manual.J);
        manual.L = update_L(manual, manual.X, h.beta);
        manual.E = update_E(manual, inst.Y, manual.X, h.lambda);
        manual.D = update_D(manual, inst.Y, h).D;
        manual = update_multipliers_and_mu(manual, inst.Y, h);

        // X before J: a different algorithm.
        permuted.X = update_X(permuted, inst.Y, permuted.J);
        permuted.J = update_J(permuted);
        permuted.L = update_L(permuted, permuted.X, h.beta);
        permuted.E = update_E(permuted, inst.Y, permuted.X, h.lambda);
        permuted.D = update_D(permuted, inst.Y, h).D;
        permuted = update_multipliers_and_mu(permuted, inst.Y, h);
    }
    EXPECT_EQ(run.X, manual.X);
    EXPECT_EQ(run.D, manual.D);
    EXPECT_EQ(run.T1, manual.T1);
    EXPECT_EQ(run.iter, 3);
    EXPECT_GT(max_abs_diff(run.X, permuted.X), 1e-6);
}

TEST(TraceSink, WritesHeaderOnce) {
    std::ostringstream out;
    TraceSink sink(out);
    sink.write({1, 0.5, 1e-3, 2e-3, 3e-3, 4.0});
    sink.write({2, 0.55, 1e-4, 2e-4, 3e-4, 3.5});
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "iter,mu,res_data,res_xj,res_xl,objective");
    std::getline(in, line);
    EXPECT_EQ(line.substr(0, 6), "1,0.5,");
    std::getline(in, line);
    EXPECT_EQ(line.substr(0, 2), "2,");
    EXPECT_FALSE(std::getline(in, line));
}

TEST(SolveLrrid, TraceHasOneLinePerIteration) {
    const auto inst = testing::make_low_rank_sparse_instance(2);
    Hyperparams h;
    h.max_outer_iters = 7;
    std::ostringstream out;
    TraceSink sink(out);
    const SolveResult r = solve_lrrid(inst.Y, 10, inst.D_star, h, &sink);
    const std::string text = out.str();
    const auto lines = std::count(text.begin(), text.end(), '\n');
    EXPECT_EQ(lines, 1 + r.iters_used);
}

}  // namespace
}  // namespace lrrid
