#pragma once

// Markovian measurement model: quantum point contacts (QPCs) along the dot
// rail, one per dot, each weakly sensing the electron position.
//
// Units are dimensionless; rates are per unit time with hbar = 1.

#include <vector>

#include "ctap/common.hpp"
#include "ctap/linalg.hpp"

namespace ctap::qpc {

enum class SensitivityProfile {
    /// Detection weight 1 - alpha / r_ij for QPC j and dot i.
    coulomb,
    /// Maximally local limit 1/r_ij -> delta_ij: weight 1 + alpha on the own
    /// dot, 1 elsewhere; alpha is dimensionless here.
    local,
};

struct RailGeometry {
    int n_sites = 41;         // N, dots (and QPCs) on the finite rail
    double spacing = 1.0;     // d, dot-dot distance
    double offset = 1.0;      // a, QPC rail to dot rail distance
    double alpha = 0.04;      // sensitivity length (dimensionless for `local`)
    double total_rate = 41.0; // R, detection events per unit time, all QPCs
    double tail_cutoff = 1e-12;
    SensitivityProfile profile = SensitivityProfile::coulomb;
    Section section{18, 22};  // transport section this geometry serves
    int margin = 18;

    double rate_per_qpc() const { return total_rate / n_sites; }

    /// Throws InvalidGeometry on any violated invariant.
    void validate() const;

    /// Rail of length sites + 2*margin with R = N (unit rate per QPC) and the
    /// section centred.
    static RailGeometry centred(int section_sites, int margin, double spacing,
                                double offset, double alpha,
                                SensitivityProfile profile = SensitivityProfile::coulomb);
};

/// sqrt(a^2 + (|i-j| d)^2)
double qpc_distance(int i, int j, const RailGeometry& g);

/// Relative detection probability of QPC `qpc` with the electron on `site`.
double detection_weight(int site, int qpc, const RailGeometry& g);

struct MeasurementModel {
    RailGeometry geometry;
    /// Exact normalisation N / sum_j w_ij at the rail centre.
    double gamma = 1.0;
    /// Long-rail expression 1 + sum_j alpha / (N r_ij) at the rail centre.
    double gamma_limit = 1.0;
    /// Per-site exact normalisation; completeness holds with these.
    std::vector<double> site_gamma;
    /// effect_diagonals[j][i] = <i| pi_j |i>
    std::vector<std::vector<double>> effect_diagonals;
    /// Element-wise square roots, the diagonals of A_j = sqrt(pi_j).
    std::vector<std::vector<double>> lindblad_diagonals;
};

MeasurementModel build_measurement_model(const RailGeometry& g);

/// Value of a rail sum over QPC indices together with how far past the
/// relevant sites it had to run before the tail fell below tail_cutoff.
struct RailSum {
    double value = 0.0;
    int radius = 0;
};

/// Coherence decay rate T_kl on an infinitely long rail at fixed R/N.
RailSum decoherence_rate_exact_sum(int k, int l, const RailGeometry& g);
double decoherence_rate_exact(int k, int l, const RailGeometry& g);

/// Weak-measurement expansion (R alpha^2 / 8N) sum_j (1/r_kj - 1/r_lj)^2.
RailSum decoherence_rate_weak_sum(int k, int l, const RailGeometry& g);
double decoherence_rate_weak(int k, int l, const RailGeometry& g);

/// Large-separation closed form (R alpha^2 / 4 N d^2) coth(pi a/d) / (a/d).
double saturation_rate(const RailGeometry& g);

/// (R/N)(2 + alpha - 2 sqrt(1 + alpha))
double local_limit_rate(double total_rate, double n_sites, double alpha);

/// T_kl for the `count` consecutive sites starting at `first_site`
/// (infinite-rail limit).
linalg::RealMatrix rate_matrix(const RailGeometry& g, int first_site, int count);

/// T_kl = R (1 - sum_j a_j(k) a_j(l)) taken literally from a finite model,
/// over `count` consecutive sites starting at `first_site`.
linalg::RealMatrix finite_rail_rates(const MeasurementModel& model, int first_site, int count);

}  // namespace ctap::qpc
