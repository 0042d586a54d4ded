#include "ctap/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "ctap/common.hpp"

namespace ctap::linalg {

namespace {

constexpr int kMaxSweeps = 100;
constexpr double kOffDiagonalThreshold = 1e-14;

double off_diagonal_norm(const ComplexMatrix& a) {
    double sum = 0.0;
    for (Eigen::Index q = 0; q < a.cols(); ++q)
        for (Eigen::Index p = 0; p < a.rows(); ++p)
            if (p != q) sum += std::norm(a(p, q));
    return std::sqrt(sum);
}

// Phase convention: largest-magnitude component real and non-negative.
void fix_phase(Eigen::Ref<ComplexVector> v) {
    Eigen::Index best = 0;
    double best_abs = -1.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double a = std::abs(v(i));
        if (a > best_abs) {
            best_abs = a;
            best = i;
        }
    }
    if (best_abs > 0.0) {
        v *= std::conj(v(best)) / best_abs;
        v(best) = best_abs;
    }
}

struct JacobiResult {
    ComplexMatrix diagonalised;
    ComplexMatrix rotations;
    int sweeps = 0;
};

JacobiResult jacobi(const ComplexMatrix& m, bool want_vectors) {
    if (m.rows() != m.cols() || m.rows() == 0)
        throw DimensionMismatch("eigendecomposition needs a non-empty square matrix");
    if (!all_finite(m)) throw NonHermitianInput("matrix has non-finite entries");
    const double scale = std::max(1.0, max_abs(m));
    const double herm = hermiticity_error(m);
    if (herm > kHermitianTolerance * scale)
        throw NonHermitianInput("max |M - M^dagger| = " + std::to_string(herm));

    const Eigen::Index n = m.rows();
    JacobiResult r;
    r.diagonalised = 0.5 * (m + m.adjoint());
    if (want_vectors) r.rotations = ComplexMatrix::Identity(n, n);
    ComplexMatrix& a = r.diagonalised;

    const double threshold = kOffDiagonalThreshold * a.norm();
    while (off_diagonal_norm(a) > threshold) {
        if (r.sweeps == kMaxSweeps)
            throw DidNotConverge("Jacobi sweep cap reached with off-diagonal norm " +
                                 std::to_string(off_diagonal_norm(a)));
        ++r.sweeps;
        for (Eigen::Index p = 0; p < n - 1; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                const Complex apq = a(p, q);
                const double mag = std::abs(apq);
                if (mag == 0.0) continue;
                // Phase-rotate column q so the pivot is real, then a real
                // Jacobi rotation annihilates it.
                const Complex phase = std::conj(apq) / mag;
                const double app = a(p, p).real();
                const double aqq = a(q, q).real();
                const double theta = (aqq - app) / (2.0 * mag);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;

                // U restricted to (p, q): [[c, s], [-s*phase, c*phase]].
                const Complex u_pp = c;
                const Complex u_pq = s;
                const Complex u_qp = -s * phase;
                const Complex u_qq = c * phase;

                for (Eigen::Index k = 0; k < n; ++k) {  // A <- A U
                    const Complex akp = a(k, p);
                    const Complex akq = a(k, q);
                    a(k, p) = akp * u_pp + akq * u_qp;
                    a(k, q) = akp * u_pq + akq * u_qq;
                }
                for (Eigen::Index k = 0; k < n; ++k) {  // A <- U^dagger A
                    const Complex apk = a(p, k);
                    const Complex aqk = a(q, k);
                    a(p, k) = std::conj(u_pp) * apk + std::conj(u_qp) * aqk;
                    a(q, k) = std::conj(u_pq) * apk + std::conj(u_qq) * aqk;
                }
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                a(p, p) = a(p, p).real();
                a(q, q) = a(q, q).real();

                if (want_vectors) {
                    ComplexMatrix& v = r.rotations;
                    for (Eigen::Index k = 0; k < n; ++k) {
                        const Complex vkp = v(k, p);
                        const Complex vkq = v(k, q);
                        v(k, p) = vkp * u_pp + vkq * u_qp;
                        v(k, q) = vkp * u_pq + vkq * u_qq;
                    }
                }
            }
        }
    }
    return r;
}

std::vector<Eigen::Index> ascending_order(const ComplexMatrix& diag) {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(diag.rows()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) {
        return diag(i, i).real() < diag(j, j).real();
    });
    return order;
}

}  // namespace

double hermiticity_error(const ComplexMatrix& m) {
    if (m.rows() != m.cols()) return std::numeric_limits<double>::infinity();
    double err = 0.0;
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i <= j; ++i)
            err = std::max(err, std::abs(m(i, j) - std::conj(m(j, i))));
    return err;
}

double max_abs(const ComplexMatrix& m) {
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

bool all_finite(const ComplexMatrix& m) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            if (!std::isfinite(m(i, j).real()) || !std::isfinite(m(i, j).imag())) return false;
    return true;
}

EigenDecomposition hermitian_eigendecompose(const ComplexMatrix& m) {
    JacobiResult r = jacobi(m, true);
    const auto order = ascending_order(r.diagonalised);
    const Eigen::Index n = m.rows();
    EigenDecomposition out;
    out.values.resize(n);
    out.vectors.resize(n, n);
    out.sweeps = r.sweeps;
    for (Eigen::Index k = 0; k < n; ++k) {
        const Eigen::Index src = order[static_cast<std::size_t>(k)];
        out.values(k) = r.diagonalised(src, src).real();
        out.vectors.col(k) = r.rotations.col(src);
        fix_phase(out.vectors.col(k));
    }
    return out;
}

RealVector hermitian_eigenvalues(const ComplexMatrix& m) {
    JacobiResult r = jacobi(m, false);
    const auto order = ascending_order(r.diagonalised);
    RealVector values(m.rows());
    for (Eigen::Index k = 0; k < m.rows(); ++k)
        values(k) = r.diagonalised(order[static_cast<std::size_t>(k)],
                                   order[static_cast<std::size_t>(k)]).real();
    return values;
}

DensityReport density_check(const ComplexMatrix& rho) {
    DensityReport report;
    report.trace_err = std::abs(rho.trace() - Complex(1.0, 0.0));
    report.herm_err = hermiticity_error(rho);
    const ComplexMatrix h = 0.5 * (rho + rho.adjoint());
    report.min_eigenvalue = hermitian_eigenvalues(h).minCoeff();
    return report;
}

double purity(const ComplexMatrix& rho) { return rho.squaredNorm(); }

}  // namespace ctap::linalg
