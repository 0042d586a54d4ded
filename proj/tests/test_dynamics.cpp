#include <doctest.h>

#include <cmath>
#include <complex>

#include "ctap/dynamics.hpp"
#include "ctap/qpc.hpp"
#include "ctap/tls.hpp"

using namespace ctap;
using namespace ctap::dynamics;
using control::PulseSchedule;
using linalg::Complex;

namespace {

HamiltonianFn constant(const ComplexMatrix& h) {
    return [h](double) { return h; };
}

qpc::RailGeometry local_geometry(double alpha = 0.04) {
    qpc::RailGeometry g;
    g.profile = qpc::SensitivityProfile::local;
    g.alpha = alpha;
    g.total_rate = g.n_sites;
    return g;
}

DensityState uniform_superposition(int dim) {
    return DensityState(ComplexMatrix::Constant(dim, dim, 1.0 / dim));
}

}  // namespace

TEST_CASE("state validation") {
    CHECK_NOTHROW(DensityState(ComplexMatrix::Identity(2, 2) * 0.5));
    CHECK_THROWS_AS(DensityState(ComplexMatrix::Identity(2, 2)), InvalidState);
    ComplexMatrix m = ComplexMatrix::Identity(2, 2) * 0.5;
    m(0, 1) = 0.1;
    CHECK_THROWS_AS(DensityState{m}, InvalidState);
    ComplexMatrix neg = ComplexMatrix::Zero(2, 2);
    neg(0, 0) = 1.5;
    neg(1, 1) = -0.5;
    CHECK_THROWS_AS(DensityState{neg}, InvalidState);
    CHECK_THROWS_AS(PureState::site(3, 3), InvalidState);

    const DensityState d = DensityState::from_pure(PureState::site(4, 2, 7));
    CHECK(d.basis_offset() == 7);
    CHECK(d.matrix()(2, 2) == 1.0);
}

TEST_CASE("observables") {
    linalg::ComplexVector psi(3);
    psi << 0.6, Complex(0.0, 0.8), 0.0;
    ObservableTargets targets{1, {{0, 1}, {1, 2}}};
    const Observables o = compute_observables(psi, targets);
    CHECK(o.populations[0] == doctest::Approx(0.36));
    CHECK(o.fidelity == doctest::Approx(0.64));
    CHECK(o.coherences[0] == doctest::Approx(0.48));
    CHECK(o.coherences[1] == 0.0);
    const Observables r = compute_observables(ComplexMatrix(psi * psi.adjoint()), targets);
    CHECK(r.purity == doctest::Approx(1.0));
    CHECK(r.fidelity == doctest::Approx(0.64));
    CHECK(r.coherences[0] == doctest::Approx(0.48));
    CHECK(compute_observables(ComplexMatrix(ComplexMatrix::Identity(4, 4) * 0.25), {}).purity == doctest::Approx(0.25));
}

TEST_CASE("zero Hamiltonian leaves the state unchanged") {
    IntegratorConfig cfg;
    const PureState psi = PureState::site(3, 1);
    const Trajectory t = evolve_pure(constant(ComplexMatrix::Zero(3, 3)), psi, {0.0, 5.0}, cfg);
    CHECK(t.is_pure());
    CHECK(t.times.front() == 0.0);
    CHECK(t.times.back() == doctest::Approx(5.0));
    CHECK(t.steps == 500);
    CHECK((t.pure_states.back() - psi.amplitudes).norm() == 0.0);
    CHECK(t.diagnostics.max_norm_drift == 0.0);

    const Trajectory r = evolve_lindblad(constant(ComplexMatrix::Zero(3, 3)), nullptr,
                                         DensityState::from_pure(psi), {0.0, 5.0}, cfg);
    CHECK_FALSE(r.is_pure());
    CHECK(linalg::max_abs(r.density_states.back() - r.density_states.front()) == 0.0);
}

TEST_CASE("two-level Rabi oscillation") {
    IntegratorConfig cfg;
    cfg.dt = 0.005;
    ComplexMatrix h = ComplexMatrix::Zero(2, 2);
    h(0, 1) = h(1, 0) = 0.5;
    const Trajectory t = evolve_pure(constant(h), PureState::site(2, 0), {0.0, 10.0}, cfg, {1, {}});
    for (std::size_t i = 0; i < t.times.size(); ++i)
        CHECK(t.observables[i].fidelity == doctest::Approx(std::pow(std::sin(0.5 * t.times[i]), 2)).epsilon(1e-9));
    CHECK(t.diagnostics.max_norm_drift < 1e-10);
}

TEST_CASE("stored points are capped") {
    IntegratorConfig cfg;
    cfg.dt = 0.001;
    const Trajectory t = evolve_pure(constant(ComplexMatrix::Zero(2, 2)), PureState::site(2, 0), {0.0, 10.0}, cfg);
    CHECK(t.steps == 10000);
    CHECK(t.times.size() <= StepPlan::kMaxStored + 1);
    CHECK(t.times.back() == doctest::Approx(10.0));
}

TEST_CASE("a step far too large is reported") {
    IntegratorConfig cfg;
    cfg.dt = 3.0;
    ComplexMatrix h = ComplexMatrix::Zero(2, 2);
    h(0, 1) = h(1, 0) = 1.0;
    CHECK_THROWS_AS(evolve_pure(constant(h), PureState::site(2, 0), {0.0, 30.0}, cfg), NormDrift);
    // The commutator keeps the trace, so the density matrix blows up in its spectrum instead.
    CHECK_THROWS_AS(evolve_lindblad(constant(h), nullptr, DensityState::from_pure(PureState::site(2, 0)),
                                    {0.0, 30.0}, cfg),
                    PositivityLoss);
}

TEST_CASE("pure dephasing decays coherences at the configured rates") {
    IntegratorConfig cfg;
    const qpc::RailGeometry g = local_geometry();
    const Dissipator d = infinite_rail_dissipator(g, 0, 3);
    const DensityState rho0 = uniform_superposition(3);
    const Trajectory t = evolve_lindblad(constant(ComplexMatrix::Zero(3, 3)), &d, rho0, {0.0, 40.0}, cfg);
    const ComplexMatrix& end = t.density_states.back();
    const double rate = qpc::local_limit_rate(g.total_rate, g.n_sites, g.alpha);
    CHECK(d.rates(0, 1) == doctest::Approx(rate));
    for (int k = 0; k < 3; ++k) {
        CHECK(end(k, k).real() == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
        for (int l = 0; l < 3; ++l)
            if (k != l) CHECK(std::abs(end(k, l) - std::exp(-d.rates(k, l) * 40.0) / 3.0) < 1e-6);
    }

    qpc::RailGeometry coulomb = qpc::RailGeometry::centred(3, 20, 1.0, 1.0, 0.1);
    const Dissipator dc = infinite_rail_dissipator(coulomb, coulomb.section.first, 3);
    const Trajectory tc = evolve_lindblad(constant(ComplexMatrix::Zero(3, 3)), &dc, rho0, {0.0, 40.0}, cfg);
    const double expected = std::exp(-qpc::decoherence_rate_exact(20, 22, coulomb) * 40.0) / 3.0;
    CHECK(std::abs(tc.density_states.back()(0, 2) - expected) < 1e-6);
}

TEST_CASE("negative rates break positivity") {
    IntegratorConfig cfg;
    Dissipator d{linalg::RealMatrix::Constant(2, 2, -0.5)};
    d.rates.diagonal().setZero();
    CHECK_THROWS_AS(evolve_lindblad(constant(ComplexMatrix::Zero(2, 2)), &d, uniform_superposition(2),
                                    {0.0, 10.0}, cfg),
                    PositivityLoss);
}

TEST_CASE("fourth-order convergence") {
    ComplexMatrix h = ComplexMatrix::Zero(3, 3);
    h(0, 1) = h(1, 0) = 1.0;
    h(1, 2) = h(2, 1) = 0.7;
    h(0, 0) = 0.3;
    const auto error = [&](double dt) {
        IntegratorConfig cfg;
        cfg.dt = dt;
        const Trajectory t = evolve_pure(constant(h), PureState::site(3, 0), {0.0, 4.0}, cfg);
        const linalg::EigenDecomposition ed = linalg::hermitian_eigendecompose(h);
        linalg::ComplexVector phases(3);
        for (int i = 0; i < 3; ++i) phases(i) = std::exp(Complex(0.0, -ed.values(i) * 4.0));
        const linalg::ComplexVector exact =
            ed.vectors * phases.asDiagonal() * ed.vectors.adjoint() * PureState::site(3, 0).amplitudes;
        return (t.pure_states.back() - exact).norm();
    };
    const double ratio = error(0.2) / error(0.1);
    CHECK(ratio == doctest::Approx(16.0).epsilon(0.15));
}

TEST_CASE("first-order loss examples") {
    const PulseSchedule s = PulseSchedule::gaussian({0, 2}, 150.0);
    CHECK(transfer_loss_firstorder(s, local_geometry(0.0)) == 0.0);
    const double loss = transfer_loss_firstorder(s, local_geometry());
    CHECK(loss > 0.0);
    CHECK(loss < 1e-2);

    // Without TLS shifts the tracked eigenstate is the dark state.
    FirstOrderOptions tracked;
    tracked.use_tracked_eigenstate = true;
    tracked.block_diagonal = {0.0, 0.0, 0.0};
    CHECK(transfer_loss_firstorder(s, local_geometry(), tracked) == doctest::Approx(loss).epsilon(1e-3));
}

TEST_CASE("first-order loss agrees with the master equation") {
    const PulseSchedule s = PulseSchedule::gaussian({0, 2}, 150.0);
    const qpc::RailGeometry g = local_geometry();
    IntegratorConfig cfg;
    ObservableTargets target{2, {}};
    const DensityState rho0 = DensityState::from_pure(PureState::site(3, 0));
    const Dissipator d = infinite_rail_dissipator(g, 0, 3);
    const double unitary =
        evolve_lindblad(model_hamiltonian(s, {}, 0, 3), nullptr, rho0, s.effective_window(), cfg, target)
            .final_observables()
            .fidelity;
    const double measured =
        evolve_lindblad(model_hamiltonian(s, {}, 0, 3), &d, rho0, s.effective_window(), cfg, target)
            .final_observables()
            .fidelity;
    const double first = transfer_loss_firstorder(s, g);
    CHECK(first == doctest::Approx(unitary - measured).epsilon(0.10));
}

TEST_CASE("coherence retention with a distant spectator") {
    const PulseSchedule s = PulseSchedule::gaussian({20, 22}, 150.0);
    qpc::RailGeometry g = qpc::RailGeometry::centred(3, 20, 1.0, 1.0, 0.1);
    const double r = coherence_loss_firstorder(5, s, g);
    CHECK(r > 0.0);
    CHECK(r <= 1.0);
    // Far spectator: every T_ki sits on the saturation plateau.
    const double plateau = qpc::decoherence_rate_exact(5, 21, g);
    CHECK(r == doctest::Approx(std::exp(-plateau * 250.0)).epsilon(0.05));
    CHECK(coherence_loss_firstorder(15, s, g) >= r);
    CHECK_THROWS_AS(coherence_loss_firstorder(21, s, g), std::invalid_argument);

    g.alpha = 0.0;
    CHECK(coherence_loss_firstorder(5, s, g) == 1.0);
}

TEST_CASE("first-order loss grows with the chain for local measurement") {
    const auto loss = [](int dots, double t) {
        qpc::RailGeometry g;
        g.spacing = 1.0;
        g.offset = 0.05;
        g.alpha = 0.04 * 0.05;
        g.n_sites = 2 * dots + 1;
        g.total_rate = g.n_sites;
        g.section = {dots / 2 + 1, dots / 2 + dots};
        g.margin = dots / 2 + 1;
        return transfer_loss_firstorder(PulseSchedule::gaussian({0, dots - 1}, t), g);
    };
    const double l3 = loss(3, 150.0);
    const double l11 = loss(11, 249.0);
    CHECK(l3 == doctest::Approx(3.7e-3).epsilon(0.1));
    CHECK(l11 == doctest::Approx(1.1e-2).epsilon(0.1));
}

TEST_CASE("block-averaged transport") {
    const PulseSchedule s = PulseSchedule::gaussian({0, 2}, 60.0);
    IntegratorConfig cfg;
    cfg.dt = 0.02;
    const DensityState rho0 = DensityState::from_pure(PureState::site(3, 0));
    ObservableTargets target{2, {}};

    SUBCASE("without TLS coupling it is the single-block evolution") {
        const Trajectory avg = block_averaged_transport(s, tls::TlsBath::uniform(3, 0.0), rho0, nullptr, cfg, target, 1);
        const Trajectory one = evolve_pure(model_hamiltonian(s, {}, 0, 3), PureState::site(3, 0), s.effective_window(),
                                           cfg, target);
        CHECK(avg.final_observables().fidelity == doctest::Approx(one.final_observables().fidelity).epsilon(1e-12));
    }
    SUBCASE("independent of the thread count") {
        const tls::TlsBath bath{{0.1, 0.2, 0.05}, {0.3, 0.0, -0.2}};
        const Trajectory a = block_averaged_transport(s, bath, rho0, nullptr, cfg, target, 1);
        const Trajectory b = block_averaged_transport(s, bath, rho0, nullptr, cfg, target, 3);
        REQUIRE(a.times.size() == b.times.size());
        for (std::size_t i = 0; i < a.times.size(); ++i) CHECK(linalg::max_abs(a.density_at(i) - b.density_at(i)) == 0.0);
        CHECK(a.final_observables().purity < 1.0);
    }
    SUBCASE("embedding in a larger model") {
        const PulseSchedule shifted = PulseSchedule::gaussian({2, 4}, 60.0);
        const DensityState wide = DensityState::from_pure(PureState::site(7, 2, 0));
        const tls::TlsBath bath = tls::TlsBath::uniform(3, 0.1);
        const Trajectory big = block_averaged_transport(shifted, bath, wide, nullptr, cfg, {4, {}}, 1);
        const Trajectory small = block_averaged_transport(s, bath, rho0, nullptr, cfg, target, 1);
        CHECK(big.final_observables().fidelity == doctest::Approx(small.final_observables().fidelity).epsilon(1e-12));
    }
    SUBCASE("limits") {
        CHECK_THROWS_AS(block_averaged_transport(s, tls::TlsBath::uniform(4, 0.1), rho0, nullptr, cfg), DimensionMismatch);
        const PulseSchedule long_section = PulseSchedule::gaussian({0, 14}, 60.0);
        const DensityState d15 = DensityState::from_pure(PureState::site(15, 0));
        CHECK_THROWS_AS(block_averaged_transport(long_section, tls::TlsBath::uniform(15, 0.1), d15, nullptr, cfg),
                        TooManyBlocks);
    }
}
