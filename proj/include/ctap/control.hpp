#pragma once

// CTAP drive construction and spectral analysis of the rail Hamiltonian.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ctap/common.hpp"
#include "ctap/linalg.hpp"

namespace ctap::control {

using linalg::ComplexMatrix;
using linalg::ComplexVector;
using linalg::RealVector;

enum class PulseShape { gaussian, three_step };

/// Time-dependent nearest-neighbour couplings for transport across `section`.
///
/// Couplings inside the section are Omega_m (pump) on the first bond,
/// omega_max on every inner bond and Omega_{n-1} (Stokes) on the last one.
/// The gaussian shape peaks at omega_max with Stokes centred at T/4 and pump
/// at 3T/4, both of width T/4. The three_step shape ramps the
/// inner and Stokes bonds up over `ramp`, swaps pump and Stokes linearly over
/// `hold`, then ramps everything down over another `ramp`.
struct PulseSchedule {
    Section section{0, 4};
    PulseShape shape = PulseShape::gaussian;
    double duration = 150.0;  // T (gaussian)
    double ramp = 10.0;       // three_step
    double hold = 100.0;      // three_step
    double omega_max = 1.0;
    std::optional<TimeWindow> window;

    static PulseSchedule gaussian(Section section, double duration, double omega_max = 1.0);

    int sites() const { return section.sites(); }

    /// Explicit window, or (-T/3, 4T/3) for gaussian and (0, 2 ramp + hold)
    /// for three_step.
    TimeWindow effective_window() const;

    /// Throws std::invalid_argument naming the violated field.
    void validate() const;

    /// Bond couplings Omega_m .. Omega_{n-1}, length sites() - 1.
    std::vector<double> couplings(double t) const;
};

struct PumpStokes {
    double pump = 0.0;
    double stokes = 0.0;
};

/// Unit-height gaussian pump/Stokes pair.
PumpStokes pump_stokes(double t, double duration);

/// Tridiagonal rail Hamiltonian over the section. `diagonal`, when non-empty,
/// supplies the on-site energies (one per section site).
ComplexMatrix rail_hamiltonian(double t, const PulseSchedule& sched,
                               std::span<const double> diagonal = {});

/// Places a section-sized operator into a `dim`-site model whose first site
/// is `model_offset` (global numbering); other entries are zero.
ComplexMatrix embed_section(const ComplexMatrix& op, const Section& section,
                            int model_offset, int dim);

struct DarkState {
    ComplexVector vector;  // unnormalised, section-sized
    double mixing_angle = 0.0;
    double x = 0.0;
};

/// Zero-energy instantaneous eigenstate of the chi = 0 rail Hamiltonian.
DarkState dark_state(double t, const PulseSchedule& sched);

/// Unit-norm version of dark_state(t).vector.
ComplexVector normalized_dark_state(double t, const PulseSchedule& sched);

enum class GapKind { crossing_like, anti_crossing, well_separated };

std::string to_string(GapKind kind);

/// Gap between energy-adjacent levels `lower` and `lower + 1`.
struct LevelGap {
    int lower = 0;
    double time = 0.0;
    double gap = 0.0;
    GapKind kind = GapKind::well_separated;
};

/// Tracked eigenvector whose overlap with its predecessor fell below 0.5.
struct ContinuityFlag {
    int track = 0;
    double time = 0.0;
    double overlap = 0.0;
};

struct Spectrum {
    std::vector<double> times;
    std::vector<RealVector> energies;         // tracked order
    std::vector<RealVector> sorted_energies;  // ascending
    std::vector<ComplexMatrix> states;        // column j = tracked state j
    std::vector<LevelGap> min_gaps;           // one per adjacent level pair
    std::vector<LevelGap> anticrossings;      // crossing_like or anti_crossing
    std::vector<ContinuityFlag> flags;
    int transported_track = 0;                // track starting on the origin site
    double omega_max = 1.0;

    int levels() const { return energies.empty() ? 0 : static_cast<int>(energies.front().size()); }
};

std::vector<double> uniform_grid(TimeWindow window, double step);

/// Eigen-spectrum of the rail Hamiltonian on `grid`, with eigenvectors
/// followed by greedy maximal-overlap matching between neighbouring times.
/// Tracked vectors are re-phased so consecutive overlaps are real and
/// positive.
Spectrum track_spectrum(const PulseSchedule& sched, std::span<const double> diagonal,
                        std::span<const double> grid);

enum class TransportOutcome { transported, returned_to_origin, other };

std::string to_string(TransportOutcome outcome);

/// Where the transported track ends up: the site carrying most weight of the
/// tracked state at the last grid time.
TransportOutcome transport_outcome(const Spectrum& sp);

struct AdiabaticityProfile {
    std::vector<double> margin;  // min_j (|e_0 - e_j| - |<d psi_0/dt | psi_j>|)
    std::vector<double> ratio;   // min_j |e_0 - e_j| / |<d psi_0/dt | psi_j>|
};

AdiabaticityProfile adiabaticity_profile(const Spectrum& sp, int track);

std::vector<double> adiabaticity_margin(const Spectrum& sp);

struct CrossingCheck {
    bool ordered = true;
    double margin = 0.0;  // energy distance to the nearest wrong-side level; < 0 when violated
};

/// Level-ordering precondition at the start of step two (pump off, every
/// other bond at omega_max): the transported level -- the isolated origin
/// site -- must sit in the centre of the spectrum. Each entry of
/// `block_diagonals` is the on-site energy list of one block; the worst
/// margin over blocks is returned.
CrossingCheck crossing_precondition(std::span<const std::vector<double>> block_diagonals,
                                    double omega_max);

/// Closed-form check for a three-site section:
/// Omega_{n-1}^2 > (chi_1 - chi_3)(chi_1 - chi_2).
bool three_site_ordered(std::span<const double> diagonal, double omega_start);

/// Trapezoid integral of tracked energy `track` over the spectrum grid.
double dynamical_phase(const Spectrum& sp, int track);

}  // namespace ctap::control
