#include "ctap/tls.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ctap::tls {

namespace {

using linalg::Complex;
constexpr Complex kI{0.0, 1.0};

void check_rates(const RealMatrix& rates, int dim) {
    if (rates.rows() != dim || rates.cols() != dim)
        throw BadRates("rate matrix is " + std::to_string(rates.rows()) + "x" + std::to_string(rates.cols()) +
                       ", expected " + std::to_string(dim));
    for (int k = 0; k < dim; ++k) {
        if (rates(k, k) != 0.0) throw BadRates("diagonal rates must be zero");
        for (int l = 0; l < dim; ++l) {
            if (!(rates(k, l) >= 0.0)) throw BadRates("rates must be non-negative");
            if (rates(k, l) != rates(l, k)) throw BadRates("rates must be symmetric");
        }
    }
}

}  // namespace

void TlsBath::validate() const {
    if (couplings.size() != inversions.size())
        throw std::invalid_argument("bath couplings and inversions differ in length");
    for (double c : couplings)
        if (!std::isfinite(c)) throw std::invalid_argument("bath couplings must be finite");
    for (double w : inversions)
        if (!(std::abs(w) <= 1.0)) throw std::invalid_argument("bath inversions must lie in [-1, 1]");
}

double TlsBath::max_coupling() const {
    double m = 0.0;
    for (double c : couplings) m = std::max(m, std::abs(c));
    return m;
}

TlsBath TlsBath::uniform(int sites, double chi, double omega) {
    return {std::vector<double>(static_cast<std::size_t>(sites), chi),
            std::vector<double>(static_cast<std::size_t>(sites), omega)};
}

DephasingCoefficients dephasing_coefficients(int n, double t, const TlsBath& bath) {
    bath.validate();
    const double chi = bath.couplings.at(static_cast<std::size_t>(n));
    const double omega = bath.inversions.at(static_cast<std::size_t>(n));
    const double c = std::cos(chi * t);
    const double s = std::sin(chi * t);
    const Complex denominator{c, omega * s};
    if (std::abs(denominator) < 1e-9)
        throw SingularTime("cos(chi t) + i omega sin(chi t) vanishes at t = " + std::to_string(t));
    const Complex value = chi * Complex{s, -omega * c} / denominator;
    return {value.real(), -value.imag()};
}

dynamics::DensityState analytic_dephasing(const dynamics::DensityState& rho0, const TlsBath& bath,
                                          const RealMatrix& rates, double t) {
    bath.validate();
    const int dim = rho0.dim();
    if (bath.size() != dim) throw DimensionMismatch("bath size does not match the state dimension");
    for (double w : bath.inversions)
        if (w != 0.0) throw std::invalid_argument("analytic dephasing needs completely mixed TLSs (omega = 0)");
    check_rates(rates, dim);
    ComplexMatrix rho = rho0.matrix();
    for (int k = 0; k < dim; ++k)
        for (int l = 0; l < dim; ++l) {
            if (k == l) continue;
            rho(k, l) *= std::exp(-rates(k, l) * t) * std::cos(bath.couplings[static_cast<std::size_t>(k)] * t) *
                         std::cos(bath.couplings[static_cast<std::size_t>(l)] * t);
        }
    return dynamics::DensityState(std::move(rho), rho0.basis_offset());
}

ComplexMatrix reduced_generator(const ComplexMatrix& rho, double t, const TlsBath& bath, const RealMatrix& rates) {
    const int dim = static_cast<int>(rho.rows());
    if (bath.size() != dim) throw DimensionMismatch("bath size does not match the state dimension");
    check_rates(rates, dim);
    std::vector<DephasingCoefficients> coeff;
    for (int n = 0; n < dim; ++n) coeff.push_back(dephasing_coefficients(n, t, bath));
    ComplexMatrix out(dim, dim);
    // [P_n, rho]_kl = (d_nk - d_nl) rho_kl, so every term is elementwise.
    for (int k = 0; k < dim; ++k)
        for (int l = 0; l < dim; ++l) {
            const auto& ck = coeff[static_cast<std::size_t>(k)];
            const auto& cl = coeff[static_cast<std::size_t>(l)];
            Complex factor = -rates(k, l);
            if (k != l) factor += -kI * (ck.shift - cl.shift) - (ck.rate + cl.rate);
            out(k, l) = factor * rho(k, l);
        }
    return out;
}

std::vector<BlockConfig> enumerate_blocks(const TlsBath& bath) {
    bath.validate();
    const int k = bath.size();
    if (k > kMaxEnumeratedSites)
        throw TooManyBlocks(std::to_string(k) + " sites give 2^" + std::to_string(k) + " blocks (limit 2^20)");
    const std::size_t count = std::size_t{1} << k;
    std::vector<BlockConfig> out(count);
    for (std::size_t c = 0; c < count; ++c) {
        BlockConfig& b = out[c];
        b.signs.resize(static_cast<std::size_t>(k));
        b.weight = 1.0;
        for (int n = 0; n < k; ++n) {
            const int s = (c >> (k - 1 - n)) & 1U ? 1 : -1;
            b.signs[static_cast<std::size_t>(n)] = s;
            b.weight *= 0.5 * (1.0 + s * bath.inversions[static_cast<std::size_t>(n)]);
        }
    }
    return out;
}

std::vector<double> block_diagonal(const BlockConfig& config, const TlsBath& bath) {
    if (config.signs.size() != bath.couplings.size())
        throw DimensionMismatch("block signs and bath couplings differ in length");
    std::vector<double> d(config.signs.size());
    for (std::size_t n = 0; n < d.size(); ++n) d[n] = config.signs[n] * bath.couplings[n];
    return d;
}

ComplexMatrix trace_out_tls(const ComplexMatrix& joint, int sites) {
    const auto configs = joint.rows() / sites;
    ComplexMatrix out = ComplexMatrix::Zero(sites, sites);
    for (Eigen::Index c = 0; c < configs; ++c) out += joint.block(c * sites, c * sites, sites, sites);
    return out;
}

dynamics::Trajectory joint_evolution_oracle(const dynamics::DensityState& rho0A, const TlsBath& bath,
                                            const control::PulseSchedule* schedule,
                                            const dynamics::Dissipator* dissipator, TimeWindow window,
                                            const IntegratorConfig& cfg,
                                            const dynamics::ObservableTargets& targets) {
    bath.validate();
    cfg.validate();
    const int k = rho0A.dim();
    if (bath.size() != k) throw DimensionMismatch("bath must cover every site of the state");
    if (k > kMaxOracleSites)
        throw DimensionTooLarge("joint dimension " + std::to_string(k << k) + " exceeds the 6-site limit");
    if (schedule) schedule->validate();
    if (dissipator && (dissipator->rates.rows() != k || dissipator->rates.cols() != k))
        throw DimensionMismatch("dissipator rates do not match the state dimension");

    const std::vector<BlockConfig> blocks = enumerate_blocks(bath);
    const int dim = k * static_cast<int>(blocks.size());

    ComplexMatrix rho = ComplexMatrix::Zero(dim, dim);
    ComplexMatrix coupling = ComplexMatrix::Zero(dim, dim);
    ComplexMatrix rates = ComplexMatrix::Zero(dim, dim);
    for (std::size_t c = 0; c < blocks.size(); ++c) {
        const auto at = static_cast<Eigen::Index>(c) * k;
        rho.block(at, at, k, k) = blocks[c].weight * rho0A.matrix();
        const std::vector<double> diag = block_diagonal(blocks[c], bath);
        for (int i = 0; i < k; ++i) coupling(at + i, at + i) = diag[static_cast<std::size_t>(i)];
    }
    if (dissipator)
        for (int a = 0; a < dim; ++a)
            for (int b = 0; b < dim; ++b) rates(a, b) = dissipator->rates(a % k, b % k);

    // Drive acts as H_A (x) 1 on the joint space.
    const auto hamiltonian = [&](double t) -> ComplexMatrix {
        if (!schedule) return coupling;
        const ComplexMatrix ha =
            control::embed_section(control::rail_hamiltonian(t, *schedule), schedule->section, rho0A.basis_offset(), k);
        ComplexMatrix h = coupling;
        for (std::size_t c = 0; c < blocks.size(); ++c) {
            const auto at = static_cast<Eigen::Index>(c) * k;
            h.block(at, at, k, k) += ha;
        }
        return h;
    };
    const auto rhs = [&](double t, const ComplexMatrix& r) -> ComplexMatrix {
        const ComplexMatrix hr = hamiltonian(t) * r;
        return -kI * (hr - hr.adjoint()) - rates.cwiseProduct(r);
    };

    const StepPlan plan = StepPlan::make(window, cfg.dt);
    dynamics::Trajectory traj;
    traj.basis_offset = rho0A.basis_offset();
    traj.dt = plan.h;
    traj.steps = plan.steps;
    const auto record = [&](double t) {
        const ComplexMatrix reduced = trace_out_tls(rho, k);
        const linalg::DensityReport r = linalg::density_check(reduced);
        if (!std::isfinite(r.trace_err) || r.trace_err > dynamics::kDriftLimit)
            throw NormDrift("oracle trace error " + std::to_string(r.trace_err) + " at t = " + std::to_string(t));
        auto& d = traj.diagnostics;
        d.max_norm_drift = std::max(d.max_norm_drift, r.trace_err);
        d.max_herm_err = std::max(d.max_herm_err, r.herm_err);
        d.min_eigenvalue = std::min(d.min_eigenvalue, r.min_eigenvalue);
        traj.times.push_back(t);
        traj.density_states.push_back(reduced);
        traj.observables.push_back(dynamics::compute_observables(reduced, targets));
    };
    record(window.start);
    for (long step = 1; step <= plan.steps; ++step) {
        rk4_step(rho, window.start + static_cast<double>(step - 1) * plan.h, plan.h, rhs);
        if (plan.stored(step)) record(window.start + static_cast<double>(step) * plan.h);
    }
    return traj;
}

}  // namespace ctap::tls
