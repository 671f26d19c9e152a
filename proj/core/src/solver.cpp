#include "lrrid/solver.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "lrrid/errors.hpp"

namespace lrrid {

namespace {

// Added to the step-size denominator so a zero curvature estimate still
// yields a finite starting step.
constexpr double kStepDenominatorFloor = 1e-12;

void require(bool ok, const char* msg) {
    if (!ok) throw std::invalid_argument(msg);
}

void check_finite_block(const Matrix& M, const char* block, int iter) {
    if (!all_finite(M)) {
        std::ostringstream msg;
        msg << "solver: " << block << " produced non-finite values at iteration "
            << iter;
        throw NumericalError(msg.str());
    }
}

// Runs one block update, attaching the block name to numerical failures.
template <class F>
Matrix run_block(const char* block, int iter, F&& update) {
    Matrix out;
    try {
        out = update();
    } catch (const NumericalError& e) {
        std::ostringstream msg;
        msg << "solver: " << block << " failed at iteration " << iter << ": " << e.what();
        throw NumericalError(msg.str());
    }
    check_finite_block(out, block, iter);
    return out;
}

Matrix constrain_atoms(const Matrix& D, AtomConstraint constraint) {
    return constraint == AtomConstraint::unit_sphere ? normalize_columns_unit_sphere(D)
                                                     : project_columns_unit_ball(D);
}

// Products of the D-subproblem that do not depend on D.
struct DictProblem {
    const Matrix& X;
    Matrix target;  // Y - E
    Matrix XXt;     // X X^T
    Matrix targetXt;
    Matrix T1Xt;
    const Matrix& T1;
    double mu;
    double gamma;

    DictProblem(const SolverState& s, const Matrix& Y, double gamma_)
        : X(s.X),
          target(Y - s.E),
          XXt(s.X * s.X.transpose()),
          targetXt(target * s.X.transpose()),
          T1Xt(s.T1 * s.X.transpose()),
          T1(s.T1),
          mu(s.mu),
          gamma(gamma_) {}

    double objective(const Matrix& D) const {
        const Matrix gram = D.transpose() * D - Matrix::Identity(D.cols(), D.cols());
        const Matrix R = target - D * X;
        return gamma * gram.squaredNorm() + (T1.array() * R.array()).sum() +
               0.5 * mu * R.squaredNorm();
    }

    Matrix gradient(const Matrix& D) const {
        const Matrix DtD = D.transpose() * D;
        return 4.0 * gamma * (D * DtD - D) - T1Xt + mu * (D * XXt - targetXt);
    }
};

SolveResult run_alm(const Matrix& Y, std::size_t n_train, const Matrix& D_init,
                    const Hyperparams& params, bool learn_dictionary,
                    TraceSink* trace) {
    params.validate();
    require(D_init.rows() == Y.rows(), "solve: dictionary row count must equal Y rows");
    require(n_train <= static_cast<std::size_t>(Y.cols()),
            "solve: n_train exceeds the number of columns of Y");
    require(all_finite(Y), "solve: Y contains NaN or Inf");
    require(all_finite(D_init), "solve: dictionary contains NaN or Inf");

    SolverState state = SolverState::initial(Y, D_init, params.mu0);
    SolveResult result;
    result.residual_history.reserve(static_cast<std::size_t>(params.max_outer_iters));

    while (state.iter < params.max_outer_iters) {
        const double mu_used = state.mu;
        if (alm_iteration(state, Y, params, learn_dictionary)) ++result.dict_stalls;

        ResidualRecord rec = residuals(state, Y);
        rec.iter = state.iter;
        rec.mu = mu_used;
        rec.objective = lrrid_objective(state, params);
        result.residual_history.push_back(rec);
        if (trace != nullptr) trace->write(rec);

        if (rec.res_data < params.eps_conv && rec.res_xj < params.eps_conv &&
            rec.res_xl < params.eps_conv) {
            result.converged = true;
            break;
        }
    }

    const auto nt = static_cast<Eigen::Index>(n_train);
    result.iters_used = state.iter;
    result.X_train = state.X.leftCols(nt);
    result.X_test = state.X.rightCols(state.X.cols() - nt);
    result.D = std::move(state.D);
    result.E = std::move(state.E);
    return result;
}

}  // namespace

void Hyperparams::validate() const {
    require(lambda > 0.0, "Hyperparams: lambda must be positive");
    require(beta > 0.0, "Hyperparams: beta must be positive");
    require(gamma >= 0.0, "Hyperparams: gamma must be non-negative");
    require(mu0 > 0.0, "Hyperparams: mu0 must be positive");
    require(mu0 < mu_max, "Hyperparams: mu0 must be below mu_max");
    require(rho > 1.0, "Hyperparams: rho must exceed 1");
    require(eps_conv > 0.0, "Hyperparams: eps_conv must be positive");
    require(max_outer_iters >= 1, "Hyperparams: max_outer_iters must be at least 1");
    require(dict_inner_steps >= 0, "Hyperparams: dict_inner_steps must be non-negative");
    if (const auto* fixed = std::get_if<FixedStep>(&dict_step)) {
        require(fixed->step > 0.0, "Hyperparams: fixed dictionary step must be positive");
    } else {
        const auto& bt = std::get<Backtracking>(dict_step);
        require(bt.shrink > 0.0 && bt.shrink < 1.0,
                "Hyperparams: backtracking shrink must lie in (0, 1)");
        require(bt.max_trials >= 1, "Hyperparams: backtracking needs at least one trial");
    }
}

SolverState SolverState::initial(const Matrix& Y, const Matrix& D_init, double mu0) {
    const auto d = Y.rows();
    const auto n = Y.cols();
    const auto m = D_init.cols();
    SolverState s;
    s.X = Matrix::Zero(m, n);
    s.J = Matrix::Zero(m, n);
    s.L = Matrix::Zero(m, n);
    s.E = Matrix::Zero(d, n);
    s.D = D_init;
    s.T1 = Matrix::Zero(d, n);
    s.T2 = Matrix::Zero(m, n);
    s.T3 = Matrix::Zero(m, n);
    s.mu = mu0;
    s.iter = 0;
    return s;
}

void SolverState::check_shapes(const Matrix& Y) const {
    const auto d = Y.rows();
    const auto n = Y.cols();
    const auto m = D.cols();
    auto same = [](const Matrix& M, Eigen::Index r, Eigen::Index c) {
        return M.rows() == r && M.cols() == c;
    };
    require(D.rows() == d, "SolverState: D must have as many rows as Y");
    require(same(X, m, n) && same(J, m, n) && same(L, m, n),
            "SolverState: X, J, L must be m x n");
    require(same(T2, m, n) && same(T3, m, n), "SolverState: T2, T3 must be m x n");
    require(same(E, d, n) && same(T1, d, n), "SolverState: E, T1 must be d x n");
}

Matrix SolveResult::codes() const {
    Matrix out(X_train.rows(), X_train.cols() + X_test.cols());
    out << X_train, X_test;
    return out;
}

void TraceSink::write(const ResidualRecord& rec) {
    if (!header_written_) {
        *out_ << "iter,mu,res_data,res_xj,res_xl,objective\n";
        header_written_ = true;
    }
    const auto old_precision = out_->precision(17);
    *out_ << rec.iter << ',' << rec.mu << ',' << rec.res_data << ',' << rec.res_xj
          << ',' << rec.res_xl << ',' << rec.objective << '\n';
    out_->precision(old_precision);
}

Matrix update_J(const SolverState& state) {
    return singular_value_threshold(state.X + state.T2 / state.mu, 1.0 / state.mu);
}

Matrix update_X(const SolverState& state, const Matrix& Y, const Matrix& J_new) {
    const Matrix& D = state.D;
    const auto m = D.cols();
    const Matrix lhs = D.transpose() * D + 2.0 * Matrix::Identity(m, m);
    const Matrix rhs = D.transpose() * (Y - state.E) + J_new + state.L +
                       (D.transpose() * state.T1 - state.T2 - state.T3) / state.mu;
    return solve_spd(lhs, rhs);
}

Matrix update_L(const SolverState& state, const Matrix& X_new, double beta) {
    return soft_threshold(X_new + state.T3 / state.mu, beta / state.mu);
}

Matrix update_E(const SolverState& state, const Matrix& Y, const Matrix& X_new,
                double lambda) {
    return soft_threshold(Y - state.D * X_new + state.T1 / state.mu, lambda / state.mu);
}

double dict_objective(const Matrix& D, const SolverState& state, const Matrix& Y,
                      double gamma) {
    return DictProblem(state, Y, gamma).objective(D);
}

Matrix dict_gradient(const Matrix& D, const SolverState& state, const Matrix& Y,
                     double gamma) {
    return DictProblem(state, Y, gamma).gradient(D);
}

DictUpdate update_D(const SolverState& state, const Matrix& Y, const Hyperparams& params) {
    require(params.dict_inner_steps >= 1, "update_D: dict_inner_steps must be at least 1");
    const DictProblem problem(state, Y, params.gamma);

    DictUpdate out;
    out.D = state.D;
    double current = problem.objective(out.D);
    out.objectives.push_back(current);

    if (const auto* fixed = std::get_if<FixedStep>(&params.dict_step)) {
        for (int q = 0; q < params.dict_inner_steps; ++q) {
            out.D = constrain_atoms(out.D - fixed->step * problem.gradient(out.D),
                                    params.atom_constraint);
            current = problem.objective(out.D);
            out.objectives.push_back(current);
            ++out.accepted_steps;
        }
        return out;
    }

    const auto& bt = std::get<Backtracking>(params.dict_step);
    const double curvature = state.mu * spectral_norm_psd(problem.XXt) +
                             8.0 * params.gamma *
                                 spectral_norm_psd(state.D.transpose() * state.D);
    double step = 1.0 / (curvature + kStepDenominatorFloor);

    for (int q = 0; q < params.dict_inner_steps; ++q) {
        const Matrix grad = problem.gradient(out.D);
        if (grad.squaredNorm() == 0.0) break;  // stationary

        bool accepted = false;
        for (int trial = 0; trial < bt.max_trials; ++trial) {
            Matrix candidate = constrain_atoms(out.D - step * grad, params.atom_constraint);
            const double value = problem.objective(candidate);
            if (value < current) {
                out.D = std::move(candidate);
                current = value;
                accepted = true;
                break;
            }
            step *= bt.shrink;
        }
        if (!accepted) {
            out.stalled = true;
            break;
        }
        out.objectives.push_back(current);
        ++out.accepted_steps;
    }
    return out;
}

SolverState update_multipliers_and_mu(SolverState state, const Matrix& Y,
                                      const Hyperparams& params) {
    state.T1 += state.mu * (Y - state.D * state.X - state.E);
    state.T2 += state.mu * (state.X - state.J);
    state.T3 += state.mu * (state.X - state.L);
    state.mu = std::min(params.rho * state.mu, params.mu_max);
    return state;
}

ResidualRecord residuals(const SolverState& state, const Matrix& Y) {
    ResidualRecord rec;
    rec.iter = state.iter;
    rec.mu = state.mu;
    rec.res_data = max_abs(Y - state.D * state.X - state.E);
    rec.res_xj = max_abs(state.X - state.J);
    rec.res_xl = max_abs(state.X - state.L);
    return rec;
}

bool check_convergence(const SolverState& state, const Matrix& Y, double eps_conv) {
    const ResidualRecord rec = residuals(state, Y);
    return rec.res_data < eps_conv && rec.res_xj < eps_conv && rec.res_xl < eps_conv;
}

double lrrid_objective(const SolverState& state, const Hyperparams& params) {
    const auto m = state.D.cols();
    const double incoherence =
        (state.D.transpose() * state.D - Matrix::Identity(m, m)).squaredNorm();
    return nuclear_norm(state.X) + params.lambda * state.E.cwiseAbs().sum() +
           params.beta * state.X.cwiseAbs().sum() + params.gamma * incoherence;
}

bool alm_iteration(SolverState& state, const Matrix& Y, const Hyperparams& params,
                   bool learn_dictionary) {
    const int k = state.iter + 1;

    state.J = run_block("update_J", k, [&] { return update_J(state); });
    state.X = run_block("update_X", k, [&] { return update_X(state, Y, state.J); });
    state.L = run_block("update_L", k, [&] { return update_L(state, state.X, params.beta); });
    state.E = run_block("update_E", k, [&] { return update_E(state, Y, state.X, params.lambda); });

    bool stalled = false;
    if (learn_dictionary && params.dict_inner_steps > 0) {
        state.D = run_block("update_D", k, [&] {
            DictUpdate du = update_D(state, Y, params);
            stalled = du.stalled;
            return std::move(du.D);
        });
    }

    state = update_multipliers_and_mu(std::move(state), Y, params);
    check_finite_block(state.T1, "multiplier update (T1)", k);
    check_finite_block(state.T2, "multiplier update (T2)", k);
    check_finite_block(state.T3, "multiplier update (T3)", k);

    state.iter = k;
    return stalled;
}

SolveResult solve_lrrid(const Matrix& Y, std::size_t n_train, const Matrix& D_init,
                        const Hyperparams& params, TraceSink* trace) {
    return run_alm(Y, n_train, D_init, params, /*learn_dictionary=*/true, trace);
}

SolveResult solve_lrrs(const Matrix& Y, std::size_t n_train, const Matrix& D_fixed,
                       const Hyperparams& params, TraceSink* trace) {
    Hyperparams fixed = params;
    fixed.gamma = 0.0;
    return run_alm(Y, n_train, D_fixed, fixed, /*learn_dictionary=*/false, trace);
}

}  // namespace lrrid
