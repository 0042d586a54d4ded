#pragma once

// Dense complex kernel for the small matrices of this project (dimension up
// to a few hundred). Storage and products come from Eigen; the Hermitian
// eigensolver is a cyclic Jacobi iteration so results are deterministic and
// accurate to a few ulps at this scale.

#include <complex>

#include <Eigen/Dense>

namespace ctap::linalg {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

inline constexpr double kHermitianTolerance = 1e-12;

struct EigenDecomposition {
    RealVector values;      // ascending
    ComplexMatrix vectors;  // orthonormal columns, phase-fixed
    int sweeps = 0;
};

/// Largest absolute entry of M - M^dagger.
double hermiticity_error(const ComplexMatrix& m);

/// Largest absolute entry.
double max_abs(const ComplexMatrix& m);

bool all_finite(const ComplexMatrix& m);

/// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi sweeps.
///
/// Values come back ascending; exact ties keep the order of the converged
/// diagonal. Every eigenvector is rotated so its largest-magnitude component
/// is real and non-negative, which makes the output a pure function of the
/// input bits.
///
/// Throws NonHermitianInput when max|M - M^dagger| exceeds
/// kHermitianTolerance * max(1, max|M|), DidNotConverge after 100 sweeps.
EigenDecomposition hermitian_eigendecompose(const ComplexMatrix& m);

/// Eigenvalues only; same algorithm.
RealVector hermitian_eigenvalues(const ComplexMatrix& m);

struct DensityReport {
    double trace_err = 0.0;
    double herm_err = 0.0;
    double min_eigenvalue = 0.0;

    bool passes(double tol) const {
        return trace_err <= tol && herm_err <= tol && min_eigenvalue >= -tol;
    }
};

/// Diagnostics of a candidate density matrix: |Tr rho - 1|, Hermiticity
/// error, smallest eigenvalue of the Hermitian part.
DensityReport density_check(const ComplexMatrix& rho);

/// Tr[rho^2] for Hermitian rho, computed as the squared Frobenius norm.
double purity(const ComplexMatrix& rho);

}  // namespace ctap::linalg
