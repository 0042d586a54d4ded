#pragma once

// Two-level-system (TLS) environment: one fluctuator per rail site coupled
// through chi_n sigma_z,n |n><n|. sigma_z|1> = +|1>, sigma_z|0> = -|0>.

#include <vector>

#include "ctap/common.hpp"
#include "ctap/control.hpp"
#include "ctap/dynamics.hpp"
#include "ctap/integrator.hpp"
#include "ctap/linalg.hpp"

namespace ctap::tls {

using linalg::ComplexMatrix;
using linalg::RealMatrix;

struct TlsBath {
    std::vector<double> couplings;   // chi_n
    std::vector<double> inversions;  // omega_n = Tr[rho_n sigma_z,n] at t = 0

    /// Throws std::invalid_argument on length mismatch or |omega_n| > 1.
    void validate() const;
    int size() const { return static_cast<int>(couplings.size()); }
    double max_coupling() const;

    static TlsBath uniform(int sites, double chi, double omega = 0.0);
};

/// One TLS basis configuration. signs[n] = -1 for |0>, +1 for |1>.
struct BlockConfig {
    std::vector<int> signs;
    double weight = 0.0;
};

struct DephasingCoefficients {
    double rate = 0.0;   // gamma_n(t)
    double shift = 0.0;  // Delta_n(t)
};

/// gamma_n - i Delta_n = chi_n (sin chi_n t - i omega_n cos chi_n t) / (cos chi_n t + i omega_n sin chi_n t).
/// Throws SingularTime when the denominator is below 1e-9 in magnitude.
DephasingCoefficients dephasing_coefficients(int n, double t, const TlsBath& bath);

/// Closed-form reduced state for completely mixed TLSs (all omega_n = 0):
/// rho_kl(t) = exp(-T_kl t) cos(chi_k t) cos(chi_l t) rho_kl(0).
/// Throws BadRates unless `rates` is symmetric, non-negative with zero diagonal.
dynamics::DensityState analytic_dephasing(const dynamics::DensityState& rho0, const TlsBath& bath,
                                          const RealMatrix& rates, double t);

/// Right-hand side of the reduced non-Markovian master equation without a
/// drive: sum_n (-i Delta_n [P_n, rho] - gamma_n [P_n, [P_n, rho]]) - T o rho.
ComplexMatrix reduced_generator(const ComplexMatrix& rho, double t, const TlsBath& bath, const RealMatrix& rates);

inline constexpr int kMaxEnumeratedSites = 20;
inline constexpr int kMaxOracleSites = 6;

/// All 2^K configurations, |0>-major: configuration c has s_n = +1 exactly
/// when bit (K-1-n) of c is set. Weights are prod_n (1 + s_n omega_n) / 2.
/// Throws TooManyBlocks above 20 sites.
std::vector<BlockConfig> enumerate_blocks(const TlsBath& bath);

/// s_n chi_n, the on-site energies of the block Hamiltonian.
std::vector<double> block_diagonal(const BlockConfig& config, const TlsBath& bath);

/// Brute-force evolution of the joint electron + TLS density matrix
/// (dimension K 2^K), traced over the TLSs at every stored point.
///
/// The bath covers every site of rho0A. The drive, when given, acts on its
/// section placed at rho0A.basis_offset; the dissipator acts on the electron
/// factor. Throws DimensionTooLarge above 6 sites.
dynamics::Trajectory joint_evolution_oracle(const dynamics::DensityState& rho0A, const TlsBath& bath,
                                            const control::PulseSchedule* schedule,
                                            const dynamics::Dissipator* dissipator, TimeWindow window,
                                            const IntegratorConfig& cfg,
                                            const dynamics::ObservableTargets& targets = {});

/// Partial trace over the TLS factor of a joint matrix indexed config * K + site.
ComplexMatrix trace_out_tls(const ComplexMatrix& joint, int sites);

}  // namespace ctap::tls
