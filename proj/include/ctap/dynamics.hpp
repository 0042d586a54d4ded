#pragma once

// Time evolution of the electron on the rail: Schroedinger and Lindblad
// integration, first-order measurement losses in the adiabatic frame, and
// averaging over TLS Hamiltonian blocks.

#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "ctap/common.hpp"
#include "ctap/control.hpp"
#include "ctap/integrator.hpp"
#include "ctap/linalg.hpp"
#include "ctap/qpc.hpp"

namespace ctap {

namespace tls {
struct TlsBath;
}

namespace dynamics {

using linalg::ComplexMatrix;
using linalg::ComplexVector;
using linalg::RealMatrix;

using HamiltonianFn = std::function<ComplexMatrix(double)>;

/// Unit vector over the modelled sites; basis_offset is the global index of
/// local site 0.
struct PureState {
    ComplexVector amplitudes;
    int basis_offset = 0;

    /// Electron on local site `local` of a `dim`-site model.
    static PureState site(int dim, int local, int offset = 0);
};

/// Validated density matrix: trace 1 within 1e-8, Hermitian within 1e-10,
/// smallest eigenvalue >= -1e-8. Throws InvalidState otherwise.
class DensityState {
public:
    explicit DensityState(ComplexMatrix matrix, int basis_offset = 0);

    static DensityState from_pure(const PureState& psi);

    const ComplexMatrix& matrix() const { return matrix_; }
    int basis_offset() const { return basis_offset_; }
    int dim() const { return static_cast<int>(matrix_.rows()); }

private:
    ComplexMatrix matrix_;
    int basis_offset_ = 0;
};

/// Local (model) indices.
struct ObservableTargets {
    std::optional<int> target_site;
    std::vector<std::pair<int, int>> coherence_pairs;
};

struct Observables {
    std::vector<double> populations;
    double purity = 1.0;
    double fidelity = 0.0;  // population on the target site, 0 when none is set
    std::vector<double> coherences;  // |rho_kl| per requested pair
};

Observables compute_observables(const ComplexVector& psi, const ObservableTargets& targets);
Observables compute_observables(const ComplexMatrix& rho, const ObservableTargets& targets);

struct TrajectoryDiagnostics {
    double max_norm_drift = 0.0;   // |<psi|psi> - 1| or |Tr rho - 1|
    double max_herm_err = 0.0;
    double min_eigenvalue = 1.0;
};

/// Stored points of an evolution. Exactly one of pure_states and
/// density_states is filled.
struct Trajectory {
    std::vector<double> times;
    std::vector<ComplexVector> pure_states;
    std::vector<ComplexMatrix> density_states;
    std::vector<Observables> observables;
    TrajectoryDiagnostics diagnostics;
    int basis_offset = 0;
    double dt = 0.0;
    long steps = 0;

    bool is_pure() const { return !pure_states.empty(); }
    ComplexMatrix density_at(std::size_t i) const;
    const Observables& final_observables() const { return observables.back(); }
};

/// Coherence decay rates T_kl of the measurement dissipator over the model:
/// -R rho + R sum_j A_j rho A_j == -T o rho for site-diagonal A_j.
struct Dissipator {
    RealMatrix rates;
};

/// Infinite-rail rates for `dim` sites starting at global site `first_site`.
Dissipator infinite_rail_dissipator(const qpc::RailGeometry& g, int first_site, int dim);

/// Rates taken literally from a finite measurement model.
Dissipator finite_rail_dissipator(const qpc::MeasurementModel& model, int first_site, int dim);

inline constexpr double kDriftLimit = 1e-4;
inline constexpr double kPositivityLimit = -1e-6;
inline constexpr int kMaxBlockSites = 14;

/// RK4 on d psi/dt = -i H(t) psi. Throws NormDrift when the norm error at a
/// stored point exceeds 1e-4.
Trajectory evolve_pure(const HamiltonianFn& h, const PureState& psi0, TimeWindow window,
                       const IntegratorConfig& cfg, const ObservableTargets& targets = {});

/// RK4 on d rho/dt = -i[H, rho] - T o rho. A null dissipator means unitary
/// evolution. Throws NormDrift on trace drift above 1e-4 and PositivityLoss
/// when a stored state has an eigenvalue below -1e-6.
Trajectory evolve_lindblad(const HamiltonianFn& h, const Dissipator* dissipator, const DensityState& rho0,
                           TimeWindow window, const IntegratorConfig& cfg,
                           const ObservableTargets& targets = {});

struct FirstOrderOptions {
    double step = 0.01;
    /// On-site energies of a TLS block; only used with use_tracked_eigenstate.
    std::vector<double> block_diagonal;
    /// Follow the numerically tracked eigenstate instead of the analytic dark state.
    bool use_tracked_eigenstate = false;
};

/// Loss from perfect transport to first order in the measurement:
/// d rho_00/dt = -p^T T p with p_i = |<psi_0(t)|i>|^2, rho_00(t_start) = 1.
/// Returns 1 - rho_00(t_end).
double transfer_loss_firstorder(const control::PulseSchedule& sched, const qpc::RailGeometry& g,
                                const FirstOrderOptions& options = {});

/// Coherence between spectator site k (global index, outside the section)
/// and the transported state: d rho_k0/dt = -(sum_i p_i T_ki) rho_k0.
/// Returns rho_k0(t_end) / rho_k0(t_start).
double coherence_loss_firstorder(int k, const control::PulseSchedule& sched, const qpc::RailGeometry& g,
                                 const FirstOrderOptions& options = {});

/// Reduced electron dynamics averaged over all TLS Hamiltonian blocks.
///
/// The bath covers the schedule section. rho0 lives on a model whose local
/// site 0 is rho0.basis_offset (global) and must contain the section. Each
/// block is evolved as a pure state when rho0 is pure and there is no
/// dissipator, by the Lindblad equation otherwise. Blocks with zero weight
/// are skipped. `jobs` <= 0 uses the available hardware threads. Throws
/// TooManyBlocks for sections longer than 14 sites.
Trajectory block_averaged_transport(const control::PulseSchedule& sched, const tls::TlsBath& bath,
                                    const DensityState& rho0, const Dissipator* dissipator,
                                    const IntegratorConfig& cfg, const ObservableTargets& targets = {},
                                    int jobs = 0);

/// Hamiltonian of the whole model for one block diagonal over the section.
HamiltonianFn model_hamiltonian(const control::PulseSchedule& sched, std::vector<double> block_diagonal,
                                int basis_offset, int dim);

}  // namespace dynamics
}  // namespace ctap
