#pragma once

#include <Eigen/Dense>

#include <complex>
#include <functional>
#include <vector>

namespace pwmbif {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Complex = std::complex<double>;

/// e^{A t} by scaling-and-squaring with a Pade approximant.
/// Relative accuracy ~1e-12 for ||A t|| up to ~50.
Matrix mat_exp(const Matrix& A, double t);

/// Exact solution of x' = A x + b with x(0) = x0, evaluated at time t,
/// via the augmented exponential exp([[A, b], [0, 0]] t).
Vector affine_flow(const Matrix& A, const Vector& b, const Vector& x0, double t);

/// All eigenvalues of a small (N <= 8) dense matrix, with multiplicity.
/// Complex eigenvalues come out in exact conjugate pairs.
std::vector<Complex> eigenvalues(const Matrix& A);

/// Largest eigenvalue modulus.
double spectral_radius(const std::vector<Complex>& eigs);

struct RootOptions {
    double tol = 1e-12;       // bracket width at which to stop
    int max_iter = 200;
};

/// Brent-style bracketed root find: inverse-quadratic / secant steps with a
/// bisection fallback. Requires f(lo) * f(hi) <= 0; always returns a point
/// inside [lo, hi].
double bracketed_root(const std::function<double(double)>& f, double lo, double hi,
                      const RootOptions& opts = {});

struct NewtonOptions {
    double tol = 1e-10;       // infinity-norm residual target
    int max_iter = 50;
    int max_halvings = 20;    // damping: step halving per iteration
    double singular_cond = 1e12;
    double fold_cond = 1e10;  // annotation threshold, not an error
};

struct NewtonResult {
    Vector z;
    double residual_norm = 0.0;
    int iterations = 0;
    bool near_fold = false;   // Jacobian condition above fold_cond at the solution
};

using VectorFn = std::function<Vector(const Vector&)>;
using JacobianFn = std::function<Matrix(const Vector&)>;

/// Forward-difference Jacobian of F at z, step 1e-7 * (1 + |z_i|).
Matrix fd_jacobian(const VectorFn& F, const Vector& z);

/// Damped Newton for small systems (M <= 8). Step halving enforces residual
/// decrease; throws NumericError on non-convergence or a singular Jacobian.
/// Pass a null jacobian to use finite differences.
NewtonResult newton_solve(const VectorFn& F, const JacobianFn& jac, const Vector& z0,
                          const NewtonOptions& opts = {});

} // namespace pwmbif
