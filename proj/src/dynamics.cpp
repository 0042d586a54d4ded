#include "ctap/dynamics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <stdexcept>
#include <thread>

#include "ctap/tls.hpp"

namespace ctap::dynamics {

namespace {

using linalg::Complex;

constexpr Complex kI{0.0, 1.0};
constexpr double kStateTraceTol = 1e-8;
constexpr double kStateHermTol = 1e-10;
constexpr double kStatePositivityTol = 1e-8;
constexpr int kBlockRanges = 16;

void record_pure(Trajectory& traj, double t, const ComplexVector& psi, const ObservableTargets& targets) {
    const double drift = std::abs(psi.squaredNorm() - 1.0);
    if (!std::isfinite(drift) || drift > kDriftLimit)
        throw NormDrift("norm error " + std::to_string(drift) + " at t = " + std::to_string(t) +
                        " exceeds 1e-4; reduce dt");
    traj.diagnostics.max_norm_drift = std::max(traj.diagnostics.max_norm_drift, drift);
    traj.times.push_back(t);
    traj.pure_states.push_back(psi);
    traj.observables.push_back(compute_observables(psi, targets));
}

void record_density(Trajectory& traj, double t, const ComplexMatrix& rho, const ObservableTargets& targets,
                    bool enforce) {
    const linalg::DensityReport r = linalg::density_check(rho);
    if (enforce) {
        if (!std::isfinite(r.trace_err) || r.trace_err > kDriftLimit)
            throw NormDrift("trace error " + std::to_string(r.trace_err) + " at t = " + std::to_string(t) +
                            " exceeds 1e-4; reduce dt");
        if (r.min_eigenvalue < kPositivityLimit)
            throw PositivityLoss("eigenvalue " + std::to_string(r.min_eigenvalue) + " at t = " +
                                 std::to_string(t));
    }
    auto& d = traj.diagnostics;
    d.max_norm_drift = std::max(d.max_norm_drift, r.trace_err);
    d.max_herm_err = std::max(d.max_herm_err, r.herm_err);
    d.min_eigenvalue = std::min(d.min_eigenvalue, r.min_eigenvalue);
    traj.times.push_back(t);
    traj.density_states.push_back(rho);
    traj.observables.push_back(compute_observables(rho, targets));
}

bool is_pure(const ComplexMatrix& rho) { return linalg::purity(rho) > 1.0 - 1e-12; }

ComplexVector principal_vector(const ComplexMatrix& rho) {
    const linalg::EigenDecomposition ed = linalg::hermitian_eigendecompose(rho);
    return ed.vectors.col(ed.vectors.cols() - 1);
}

std::vector<double> probabilities(const ComplexVector& v) {
    std::vector<double> p(static_cast<std::size_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) p[static_cast<std::size_t>(i)] = std::norm(v(i));
    return p;
}

// Weights |<psi_0(t)|i>|^2 of the transported state over the section.
class TransportedWeights {
public:
    TransportedWeights(const control::PulseSchedule& sched, const FirstOrderOptions& options)
        : sched_(sched), options_(options) {}

    std::vector<double> operator()(double t) {
        if (!options_.use_tracked_eigenstate) return probabilities(control::normalized_dark_state(t, sched_));
        const linalg::EigenDecomposition ed =
            linalg::hermitian_eigendecompose(control::rail_hamiltonian(t, sched_, options_.block_diagonal));
        Eigen::Index best = 0;
        if (previous_.size() == 0)
            ed.vectors.row(0).cwiseAbs().maxCoeff(&best);
        else
            (ed.vectors.adjoint() * previous_).cwiseAbs().maxCoeff(&best);
        previous_ = ed.vectors.col(best);
        return probabilities(previous_);
    }

private:
    const control::PulseSchedule& sched_;
    const FirstOrderOptions& options_;
    ComplexVector previous_;
};

}  // namespace

PureState PureState::site(int dim, int local, int offset) {
    if (local < 0 || local >= dim) throw InvalidState("site outside the model");
    PureState s;
    s.amplitudes = ComplexVector::Zero(dim);
    s.amplitudes(local) = 1.0;
    s.basis_offset = offset;
    return s;
}

DensityState::DensityState(ComplexMatrix matrix, int basis_offset)
    : matrix_(std::move(matrix)), basis_offset_(basis_offset) {
    if (matrix_.rows() == 0 || matrix_.rows() != matrix_.cols())
        throw InvalidState("density matrix must be square and non-empty");
    if (!linalg::all_finite(matrix_)) throw InvalidState("density matrix has non-finite entries");
    const linalg::DensityReport r = linalg::density_check(matrix_);
    if (r.trace_err > kStateTraceTol) throw InvalidState("trace differs from 1 by " + std::to_string(r.trace_err));
    if (r.herm_err > kStateHermTol) throw InvalidState("not Hermitian, error " + std::to_string(r.herm_err));
    if (r.min_eigenvalue < -kStatePositivityTol)
        throw InvalidState("negative eigenvalue " + std::to_string(r.min_eigenvalue));
}

DensityState DensityState::from_pure(const PureState& psi) {
    return DensityState(psi.amplitudes * psi.amplitudes.adjoint(), psi.basis_offset);
}

Observables compute_observables(const ComplexVector& psi, const ObservableTargets& targets) {
    Observables o;
    o.populations = probabilities(psi);
    o.purity = 1.0;
    if (targets.target_site) o.fidelity = o.populations.at(static_cast<std::size_t>(*targets.target_site));
    for (const auto& [k, l] : targets.coherence_pairs) o.coherences.push_back(std::abs(psi(k) * std::conj(psi(l))));
    return o;
}

Observables compute_observables(const ComplexMatrix& rho, const ObservableTargets& targets) {
    Observables o;
    o.populations.resize(static_cast<std::size_t>(rho.rows()));
    for (Eigen::Index i = 0; i < rho.rows(); ++i) o.populations[static_cast<std::size_t>(i)] = rho(i, i).real();
    o.purity = linalg::purity(rho);
    if (targets.target_site) o.fidelity = o.populations.at(static_cast<std::size_t>(*targets.target_site));
    for (const auto& [k, l] : targets.coherence_pairs) o.coherences.push_back(std::abs(rho(k, l)));
    return o;
}

ComplexMatrix Trajectory::density_at(std::size_t i) const {
    if (is_pure()) return pure_states.at(i) * pure_states.at(i).adjoint();
    return density_states.at(i);
}

Dissipator infinite_rail_dissipator(const qpc::RailGeometry& g, int first_site, int dim) {
    return {qpc::rate_matrix(g, first_site, dim)};
}

Dissipator finite_rail_dissipator(const qpc::MeasurementModel& model, int first_site, int dim) {
    return {qpc::finite_rail_rates(model, first_site, dim)};
}

Trajectory evolve_pure(const HamiltonianFn& h, const PureState& psi0, TimeWindow window,
                       const IntegratorConfig& cfg, const ObservableTargets& targets) {
    cfg.validate();
    if (std::abs(psi0.amplitudes.norm() - 1.0) > 1e-10) throw InvalidState("initial state is not normalised");
    const StepPlan plan = StepPlan::make(window, cfg.dt);

    Trajectory traj;
    traj.basis_offset = psi0.basis_offset;
    traj.dt = plan.h;
    traj.steps = plan.steps;
    traj.diagnostics.min_eigenvalue = 0.0;

    const auto rhs = [&h](double t, const ComplexVector& psi) -> ComplexVector { return -kI * (h(t) * psi); };
    ComplexVector psi = psi0.amplitudes;
    record_pure(traj, window.start, psi, targets);
    for (long step = 1; step <= plan.steps; ++step) {
        rk4_step(psi, window.start + static_cast<double>(step - 1) * plan.h, plan.h, rhs);
        if (cfg.renormalize) psi.normalize();
        if (plan.stored(step)) record_pure(traj, window.start + static_cast<double>(step) * plan.h, psi, targets);
    }
    return traj;
}

Trajectory evolve_lindblad(const HamiltonianFn& h, const Dissipator* dissipator, const DensityState& rho0,
                           TimeWindow window, const IntegratorConfig& cfg, const ObservableTargets& targets) {
    cfg.validate();
    const int dim = rho0.dim();
    ComplexMatrix rates = ComplexMatrix::Zero(dim, dim);
    if (dissipator) {
        if (dissipator->rates.rows() != dim || dissipator->rates.cols() != dim)
            throw DimensionMismatch("dissipator rates do not match the state dimension");
        rates = dissipator->rates.cast<Complex>();
    }
    const StepPlan plan = StepPlan::make(window, cfg.dt);

    Trajectory traj;
    traj.basis_offset = rho0.basis_offset();
    traj.dt = plan.h;
    traj.steps = plan.steps;

    const auto rhs = [&](double t, const ComplexMatrix& rho) -> ComplexMatrix {
        const ComplexMatrix hr = h(t) * rho;
        return -kI * (hr - hr.adjoint()) - rates.cwiseProduct(rho);
    };
    ComplexMatrix rho = rho0.matrix();
    record_density(traj, window.start, rho, targets, true);
    for (long step = 1; step <= plan.steps; ++step) {
        rk4_step(rho, window.start + static_cast<double>(step - 1) * plan.h, plan.h, rhs);
        if (plan.stored(step))
            record_density(traj, window.start + static_cast<double>(step) * plan.h, rho, targets, true);
    }
    return traj;
}

double transfer_loss_firstorder(const control::PulseSchedule& sched, const qpc::RailGeometry& g,
                                const FirstOrderOptions& options) {
    sched.validate();
    const RealMatrix rates = qpc::rate_matrix(g, sched.section.first, sched.sites());
    TransportedWeights weights(sched, options);
    const auto rhs = [&](double t, double) {
        const std::vector<double> p = weights(t);
        const Eigen::Map<const Eigen::VectorXd> pv(p.data(), static_cast<Eigen::Index>(p.size()));
        return -pv.dot(rates * pv);
    };
    const TimeWindow window = sched.effective_window();
    const StepPlan plan = StepPlan::make(window, options.step);
    double rho00 = 1.0;
    for (long step = 0; step < plan.steps; ++step)
        rk4_step(rho00, window.start + static_cast<double>(step) * plan.h, plan.h, rhs);
    return 1.0 - rho00;
}

double coherence_loss_firstorder(int k, const control::PulseSchedule& sched, const qpc::RailGeometry& g,
                                 const FirstOrderOptions& options) {
    sched.validate();
    if (sched.section.contains(k)) throw std::invalid_argument("spectator site must lie outside the section");
    Eigen::VectorXd rates(sched.sites());
    for (int i = 0; i < sched.sites(); ++i) rates(i) = qpc::decoherence_rate_exact(k, sched.section.first + i, g);
    TransportedWeights weights(sched, options);
    const auto rhs = [&](double t, double y) {
        const std::vector<double> p = weights(t);
        const Eigen::Map<const Eigen::VectorXd> pv(p.data(), static_cast<Eigen::Index>(p.size()));
        return -pv.dot(rates) * y;
    };
    const TimeWindow window = sched.effective_window();
    const StepPlan plan = StepPlan::make(window, options.step);
    double retention = 1.0;
    for (long step = 0; step < plan.steps; ++step)
        rk4_step(retention, window.start + static_cast<double>(step) * plan.h, plan.h, rhs);
    return retention;
}

HamiltonianFn model_hamiltonian(const control::PulseSchedule& sched, std::vector<double> block_diagonal,
                                int basis_offset, int dim) {
    return [sched, diag = std::move(block_diagonal), basis_offset, dim](double t) {
        return control::embed_section(control::rail_hamiltonian(t, sched, diag), sched.section, basis_offset, dim);
    };
}

Trajectory block_averaged_transport(const control::PulseSchedule& sched, const tls::TlsBath& bath,
                                    const DensityState& rho0, const Dissipator* dissipator,
                                    const IntegratorConfig& cfg, const ObservableTargets& targets, int jobs) {
    sched.validate();
    bath.validate();
    if (bath.size() != sched.sites())
        throw DimensionMismatch("bath has " + std::to_string(bath.size()) + " couplings for a " +
                                std::to_string(sched.sites()) + "-site section");
    if (bath.size() > kMaxBlockSites)
        throw TooManyBlocks(std::to_string(bath.size()) + "-site section exceeds the " +
                            std::to_string(kMaxBlockSites) + "-site block average limit");
    std::vector<tls::BlockConfig> blocks;
    for (tls::BlockConfig& b : tls::enumerate_blocks(bath))
        if (b.weight > 0.0) blocks.push_back(std::move(b));

    const int dim = rho0.dim();
    const int offset = rho0.basis_offset();
    const TimeWindow window = sched.effective_window();
    const bool pure = dissipator == nullptr && is_pure(rho0.matrix());
    PureState psi0;
    if (pure) psi0 = {principal_vector(rho0.matrix()), offset};

    // Blocks are split into fixed contiguous ranges summed in order, so the
    // result does not depend on the number of threads.
    const int ranges = std::min<int>(kBlockRanges, static_cast<int>(blocks.size()));
    std::vector<std::vector<ComplexMatrix>> partial(static_cast<std::size_t>(ranges));
    std::vector<Trajectory> shape(static_cast<std::size_t>(ranges));
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(ranges));
    std::atomic<int> next{0};

    const auto worker = [&] {
        for (int r = next++; r < ranges; r = next++) {
            const auto ri = static_cast<std::size_t>(r);
            try {
                const std::size_t lo = blocks.size() * ri / static_cast<std::size_t>(ranges);
                const std::size_t hi = blocks.size() * (ri + 1) / static_cast<std::size_t>(ranges);
                for (std::size_t b = lo; b < hi; ++b) {
                    const HamiltonianFn h = model_hamiltonian(sched, tls::block_diagonal(blocks[b], bath), offset, dim);
                    Trajectory traj = pure ? evolve_pure(h, psi0, window, cfg)
                                           : evolve_lindblad(h, dissipator, rho0, window, cfg);
                    if (partial[ri].empty()) partial[ri].assign(traj.times.size(), ComplexMatrix::Zero(dim, dim));
                    for (std::size_t i = 0; i < traj.times.size(); ++i)
                        partial[ri][i] += blocks[b].weight * traj.density_at(i);
                    auto& d = shape[ri].diagnostics;
                    d.max_norm_drift = std::max(d.max_norm_drift, traj.diagnostics.max_norm_drift);
                    d.max_herm_err = std::max(d.max_herm_err, traj.diagnostics.max_herm_err);
                    shape[ri].times = std::move(traj.times);
                    shape[ri].dt = traj.dt;
                    shape[ri].steps = traj.steps;
                }
            } catch (...) {
                errors[ri] = std::current_exception();
            }
        }
    };

    int threads = jobs > 0 ? jobs : static_cast<int>(std::thread::hardware_concurrency());
    threads = std::clamp(threads, 1, ranges);
    std::vector<std::thread> pool;
    for (int i = 1; i < threads; ++i) pool.emplace_back(worker);
    worker();
    for (std::thread& t : pool) t.join();
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    Trajectory out;
    out.basis_offset = offset;
    out.dt = shape.front().dt;
    out.steps = shape.front().steps;
    double block_drift = 0.0;
    double block_herm = 0.0;
    for (const Trajectory& s : shape) {
        block_drift = std::max(block_drift, s.diagnostics.max_norm_drift);
        block_herm = std::max(block_herm, s.diagnostics.max_herm_err);
    }
    const std::vector<double>& times = shape.front().times;
    for (std::size_t i = 0; i < times.size(); ++i) {
        ComplexMatrix rho = ComplexMatrix::Zero(dim, dim);
        for (const auto& p : partial) rho += p[i];
        record_density(out, times[i], rho, targets, false);
    }
    out.diagnostics.max_norm_drift = std::max(out.diagnostics.max_norm_drift, block_drift);
    out.diagnostics.max_herm_err = std::max(out.diagnostics.max_herm_err, block_herm);
    return out;
}

}  // namespace ctap::dynamics
