#include "pwmbif/linalg.hpp"
#include "pwmbif/errors.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>

namespace pwmbif {

namespace {

void require_finite(const Matrix& A, const char* who) {
    if (!A.allFinite())
        throw InvalidArgument(std::string(who) + ": non-finite entries");
}

} // namespace

Matrix mat_exp(const Matrix& A, double t) {
    if (A.rows() != A.cols())
        throw InvalidArgument("mat_exp: matrix must be square");
    require_finite(A, "mat_exp");
    if (!std::isfinite(t))
        throw InvalidArgument("mat_exp: non-finite time");
    return (A * t).exp();
}

Vector affine_flow(const Matrix& A, const Vector& b, const Vector& x0, double t) {
    const Eigen::Index n = A.rows();
    if (A.cols() != n || b.size() != n || x0.size() != n)
        throw InvalidArgument("affine_flow: dimension mismatch");
    Matrix aug = Matrix::Zero(n + 1, n + 1);
    aug.topLeftCorner(n, n) = A;
    aug.topRightCorner(n, 1) = b;
    Vector z(n + 1);
    z.head(n) = x0;
    z(n) = 1.0;
    return (mat_exp(aug, t) * z).head(n);
}

std::vector<Complex> eigenvalues(const Matrix& A) {
    const Eigen::Index n = A.rows();
    if (A.cols() != n)
        throw InvalidArgument("eigenvalues: matrix must be square");
    if (n > 8)
        throw InvalidArgument("eigenvalues: N <= 8 only");
    require_finite(A, "eigenvalues");

    Eigen::EigenSolver<Matrix> solver(A, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success)
        throw NumericError("eigenvalues: QR iteration did not converge");

    std::vector<Complex> eigs(static_cast<size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i)
        eigs[static_cast<size_t>(i)] = solver.eigenvalues()(i);

    // Enforce exact conjugate symmetry: real Schur output pairs adjacent
    // conjugates, but round them against each other anyway.
    std::sort(eigs.begin(), eigs.end(), [](const Complex& a, const Complex& b) {
        if (a.real() != b.real()) return a.real() < b.real();
        return a.imag() < b.imag();
    });
    for (size_t i = 0; i + 1 < eigs.size(); ++i) {
        Complex& lo = eigs[i];
        Complex& hi = eigs[i + 1];
        if (lo.imag() < 0.0 && std::abs(lo.real() - hi.real()) < 1e-12 * (1.0 + std::abs(lo.real())) &&
            std::abs(lo.imag() + hi.imag()) < 1e-12 * (1.0 + std::abs(lo.imag()))) {
            const double re = 0.5 * (lo.real() + hi.real());
            const double im = 0.5 * (hi.imag() - lo.imag());
            lo = Complex(re, -im);
            hi = Complex(re, im);
            ++i;
        }
    }
    return eigs;
}

double spectral_radius(const std::vector<Complex>& eigs) {
    double r = 0.0;
    for (const Complex& e : eigs) r = std::max(r, std::abs(e));
    return r;
}

double bracketed_root(const std::function<double(double)>& f, double lo, double hi,
                      const RootOptions& opts) {
    if (!(opts.tol > 0.0))
        throw InvalidArgument("bracketed_root: tol must be positive");
    double a = lo, b = hi;
    double fa = f(a), fb = f(b);
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    if (fa * fb > 0.0)
        throw InvalidArgument("bracketed_root: no sign change across bracket");

    // Brent: b is the best iterate, a the previous, c the counterpoint.
    double c = a, fc = fa;
    double d = b - a, e = d;
    for (int iter = 0; iter < opts.max_iter; ++iter) {
        if (std::abs(fc) < std::abs(fb)) {
            a = b; b = c; c = a;
            fa = fb; fb = fc; fc = fa;
        }
        const double tol1 = 2.0 * std::numeric_limits<double>::epsilon() * std::abs(b) + 0.5 * opts.tol;
        const double xm = 0.5 * (c - b);
        if (std::abs(xm) <= tol1 || fb == 0.0)
            return b;
        if (std::abs(e) >= tol1 && std::abs(fa) > std::abs(fb)) {
            // inverse quadratic / secant step
            const double s = fb / fa;
            double p, q;
            if (a == c) {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                const double qq = fa / fc;
                const double r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if (p > 0.0) q = -q;
            p = std::abs(p);
            if (2.0 * p < std::min(3.0 * xm * q - std::abs(tol1 * q), std::abs(e * q))) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += (std::abs(d) > tol1) ? d : (xm > 0.0 ? tol1 : -tol1);
        fb = f(b);
        if ((fb > 0.0) == (fc > 0.0)) {
            c = a; fc = fa;
            d = b - a; e = d;
        }
    }
    return b;
}

Matrix fd_jacobian(const VectorFn& F, const Vector& z) {
    const Vector f0 = F(z);
    Matrix J(f0.size(), z.size());
    for (Eigen::Index j = 0; j < z.size(); ++j) {
        const double step = 1e-7 * (1.0 + std::abs(z(j)));
        Vector zp = z;
        zp(j) += step;
        J.col(j) = (F(zp) - f0) / step;
    }
    return J;
}

NewtonResult newton_solve(const VectorFn& F, const JacobianFn& jac, const Vector& z0,
                          const NewtonOptions& opts) {
    if (!z0.allFinite())
        throw InvalidArgument("newton_solve: non-finite initial guess");
    if (z0.size() > 8)
        throw InvalidArgument("newton_solve: M <= 8 only");

    Vector z = z0;
    Vector r = F(z);
    double rn = r.lpNorm<Eigen::Infinity>();
    NewtonResult result;

    for (int iter = 0; iter < opts.max_iter; ++iter) {
        if (rn <= opts.tol) {
            result.z = z;
            result.residual_norm = rn;
            result.iterations = iter;
            return result;
        }
        const Matrix J = jac ? jac(z) : fd_jacobian(F, z);
        Eigen::JacobiSVD<Matrix> svd(J, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const double smin = svd.singularValues()(svd.singularValues().size() - 1);
        const double smax = svd.singularValues()(0);
        const double cond = (smin > 0.0) ? smax / smin : std::numeric_limits<double>::infinity();
        if (cond > opts.singular_cond)
            throw NumericError("newton_solve: singular Jacobian (condition " + std::to_string(cond) + ")");
        result.near_fold = result.near_fold || cond > opts.fold_cond;

        const Vector step = svd.solve(r);
        // Armijo-style damping: halve until the residual actually decreases.
        double alpha = 1.0;
        bool accepted = false;
        for (int k = 0; k <= opts.max_halvings; ++k) {
            Vector zt = z - alpha * step;
            Vector rt = F(zt);
            const double rtn = rt.lpNorm<Eigen::Infinity>();
            if (std::isfinite(rtn) && rtn < rn) {
                z = zt; r = rt; rn = rtn;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted)
            throw NumericError("newton_solve: damping failed to reduce residual (residual " +
                               std::to_string(rn) + ")");
    }
    if (rn <= opts.tol) {
        result.z = z;
        result.residual_norm = rn;
        result.iterations = opts.max_iter;
        return result;
    }
    throw NumericError("newton_solve: max_iter exceeded (residual " + std::to_string(rn) + ")");
}

} // namespace pwmbif
