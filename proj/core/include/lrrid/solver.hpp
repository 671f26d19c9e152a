#pragma once

#include <cstddef>
#include <iosfwd>
#include <variant>
#include <vector>

#include "lrrid/matrix_prox.hpp"

namespace lrrid {

/// Gradient step with a constant step size.
struct FixedStep {
    double step = 1e-3;
};

/// Step size starts at a Lipschitz-motivated estimate and is multiplied by
/// `shrink` until the dictionary objective strictly decreases.
struct Backtracking {
    double shrink = 0.5;
    int max_trials = 20;
};

using DictStepPolicy = std::variant<FixedStep, Backtracking>;

/// How dictionary columns are constrained after each gradient step.
enum class AtomConstraint {
    unit_ball,    // rescale only columns with norm > 1
    unit_sphere,  // rescale every nonzero column to norm 1
};

struct Hyperparams {
    double lambda = 0.1;   // weight of ||E||_1
    double beta = 0.1;     // weight of ||X||_1
    double gamma = 1e-4;   // weight of ||D^T D - I||_F^2
    double mu0 = 1e-5;
    double mu_max = 1e8;
    double rho = 1.1;
    double eps_conv = 1e-6;
    int max_outer_iters = 500;
    int dict_inner_steps = 10;
    DictStepPolicy dict_step = Backtracking{};
    AtomConstraint atom_constraint = AtomConstraint::unit_ball;

    /// Throws std::invalid_argument naming the first violated constraint.
    void validate() const;
};

/// All iterates of the inexact ALM. Shapes: Y is d x n, D is d x m,
/// X/J/L/T2/T3 are m x n, E/T1 are d x n.
struct SolverState {
    Matrix X, J, L, E, D;
    Matrix T1, T2, T3;
    double mu = 0.0;
    int iter = 0;

    /// Zero codes, errors and multipliers; mu = mu0; D = D_init.
    static SolverState initial(const Matrix& Y, const Matrix& D_init, double mu0);

    /// Throws std::invalid_argument if any block disagrees with Y's shape.
    void check_shapes(const Matrix& Y) const;
};

/// Per-iteration diagnostics. `mu` is the penalty used during the iteration.
struct ResidualRecord {
    int iter = 0;
    double mu = 0.0;
    double res_data = 0.0;  // ||Y - DX - E||_inf
    double res_xj = 0.0;    // ||X - J||_inf
    double res_xl = 0.0;    // ||X - L||_inf
    double objective = 0.0;
};

struct SolveResult {
    Matrix X_train;  // m x n_train
    Matrix X_test;   // m x (n - n_train)
    Matrix D;
    Matrix E;
    bool converged = false;
    int iters_used = 0;
    int dict_stalls = 0;
    std::vector<ResidualRecord> residual_history;

    /// [X_train, X_test] reassembled.
    Matrix codes() const;
};

/// Writes one comma-separated line per iteration record, with a header line
/// before the first record.
class TraceSink {
public:
    explicit TraceSink(std::ostream& out) : out_(&out) {}
    void write(const ResidualRecord& rec);

private:
    std::ostream* out_;
    bool header_written_ = false;
};

// Block updates. Each returns the new value of one block and leaves the
// state untouched, so the caller controls the sweep order.

/// SVT of X + T2/mu at threshold 1/mu.
Matrix update_J(const SolverState& state);

/// Minimizer of the smooth X-subproblem given the refreshed J.
Matrix update_X(const SolverState& state, const Matrix& Y, const Matrix& J_new);

/// Shrinkage of X_new + T3/mu at beta/mu.
Matrix update_L(const SolverState& state, const Matrix& X_new, double beta);

/// Shrinkage of Y - D X_new + T1/mu at lambda/mu.
Matrix update_E(const SolverState& state, const Matrix& Y, const Matrix& X_new,
                double lambda);

/// gamma ||D^T D - I||^2 + <T1, Y - DX - E> + mu/2 ||Y - DX - E||^2,
/// with X, E, T1 and mu taken from the state.
double dict_objective(const Matrix& D, const SolverState& state, const Matrix& Y,
                      double gamma);

/// Gradient of dict_objective with respect to D.
Matrix dict_gradient(const Matrix& D, const SolverState& state, const Matrix& Y,
                     double gamma);

struct DictUpdate {
    Matrix D;
    int accepted_steps = 0;
    bool stalled = false;            // line search exhausted on some step
    std::vector<double> objectives;  // objective at start and after each accepted step
};

/// Projected gradient descent on dict_objective for params.dict_inner_steps
/// steps. Every iterate satisfies the atom constraint.
DictUpdate update_D(const SolverState& state, const Matrix& Y, const Hyperparams& params);

/// T1 += mu (Y - DX - E), T2 += mu (X - J), T3 += mu (X - L),
/// then mu = min(rho mu, mu_max).
SolverState update_multipliers_and_mu(SolverState state, const Matrix& Y,
                                      const Hyperparams& params);

/// True iff all three constraint residuals are strictly below eps_conv in
/// the entrywise max norm.
bool check_convergence(const SolverState& state, const Matrix& Y, double eps_conv);

ResidualRecord residuals(const SolverState& state, const Matrix& Y);

/// ||X||_* + lambda ||E||_1 + beta ||X||_1 + gamma ||D^T D - I||_F^2.
double lrrid_objective(const SolverState& state, const Hyperparams& params);

/// One outer sweep in the order J, X, L, E, D, multipliers, mu. When
/// `learn_dictionary` is false the D step is skipped. Throws NumericalError
/// naming the block that produced a non-finite value. Returns true if the
/// dictionary line search stalled.
bool alm_iteration(SolverState& state, const Matrix& Y, const Hyperparams& params,
                   bool learn_dictionary);

/// Jointly codes the train-first columns of Y over a learned incoherent
/// dictionary started at D_init.
SolveResult solve_lrrid(const Matrix& Y, std::size_t n_train, const Matrix& D_init,
                        const Hyperparams& params, TraceSink* trace = nullptr);

/// Same loop with the dictionary held at D_fixed and no incoherence term.
SolveResult solve_lrrs(const Matrix& Y, std::size_t n_train, const Matrix& D_fixed,
                       const Hyperparams& params, TraceSink* trace = nullptr);

}  // namespace lrrid
