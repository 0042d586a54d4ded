#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "ctap/control.hpp"
#include "ctap/tls.hpp"

using namespace ctap;
using namespace ctap::control;

namespace {

std::vector<double> block(std::vector<int> signs, double chi) {
    return tls::block_diagonal({std::move(signs), 1.0}, tls::TlsBath::uniform(5, chi));
}

Spectrum five_site_spectrum(double chi, double step = 0.1) {
    const PulseSchedule s = PulseSchedule::gaussian({0, 4}, 150.0);
    return track_spectrum(s, block({-1, 1, 1, 1, 1}, chi), uniform_grid(s.effective_window(), step));
}

}  // namespace

TEST_CASE("gaussian pump and Stokes pulses") {
    const double t = 150.0;
    CHECK(pump_stokes(3 * t / 4, t).pump == doctest::Approx(1.0));
    CHECK(pump_stokes(t / 4, t).stokes == doctest::Approx(1.0));
    for (double x : {-40.0, 0.0, 12.5, 75.0, 133.0})
        CHECK(pump_stokes(x, t).pump == pump_stokes(t - x, t).stokes);
    CHECK(pump_stokes(0.0, t).stokes == doctest::Approx(std::exp(-1.0)));
}

TEST_CASE("schedule validation and windows") {
    PulseSchedule s = PulseSchedule::gaussian({0, 4}, 150.0);
    CHECK(s.effective_window().start == doctest::Approx(-50.0));
    CHECK(s.effective_window().end == doctest::Approx(200.0));
    CHECK_NOTHROW(s.validate());
    s.section = {0, 3};
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    s.section = {0, 0};
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    s.section = {0, 2};
    s.duration = 0.0;
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);

    PulseSchedule step;
    step.shape = PulseShape::three_step;
    step.section = {0, 4};
    CHECK(step.effective_window().end == doctest::Approx(120.0));
    const auto c = step.couplings(5.0);
    CHECK(c.front() == 0.0);
    CHECK(c[1] == doctest::Approx(0.5));
    CHECK(c.back() == doctest::Approx(0.5));
    const auto mid = step.couplings(60.0);
    CHECK(mid.front() == doctest::Approx(0.5));
    CHECK(mid[2] == doctest::Approx(1.0));
    CHECK(mid.back() == doctest::Approx(0.5));
    const auto late = step.couplings(115.0);
    CHECK(late.back() == 0.0);
    CHECK(late.front() == doctest::Approx(0.5));
    for (double t = -5; t <= 125; t += 0.5)
        for (double v : step.couplings(t)) CHECK(v >= 0.0);
}

TEST_CASE("rail Hamiltonian") {
    PulseSchedule s = PulseSchedule::gaussian({0, 2}, 150.0);
    const ComplexMatrix h3 = rail_hamiltonian(75.0, s);
    const double p = pump_stokes(75.0, 150.0).pump;
    CHECK(h3(0, 1).real() == doctest::Approx(p));
    CHECK(h3(1, 2).real() == doctest::Approx(p));  // symmetric point: pump = Stokes
    const RealVector e = linalg::hermitian_eigenvalues(h3 / p);
    CHECK(e(0) == doctest::Approx(-std::sqrt(2.0)));
    CHECK(std::abs(e(1)) < 1e-14);
    CHECK(e(2) == doctest::Approx(std::sqrt(2.0)));

    s = PulseSchedule::gaussian({0, 4}, 150.0);
    const double chi = 0.2;
    const std::vector<double> d = block({-1, 1, 1, 1, 1}, chi);
    const ComplexMatrix h5 = rail_hamiltonian(40.0, s, d);
    const PumpStokes ps = pump_stokes(40.0, 150.0);
    ComplexMatrix expected = ComplexMatrix::Zero(5, 5);
    expected.diagonal() << -chi, chi, chi, chi, chi;
    expected(0, 1) = expected(1, 0) = ps.pump;
    expected(1, 2) = expected(2, 1) = expected(2, 3) = expected(3, 2) = 1.0;
    expected(3, 4) = expected(4, 3) = ps.stokes;
    CHECK(linalg::max_abs(h5 - expected) < 1e-15);

    const ComplexMatrix far = rail_hamiltonian(1e4, s);
    CHECK(far.row(0).cwiseAbs().maxCoeff() < 1e-300);

    const std::vector<double> wrong(4, 0.0);
    CHECK_THROWS_AS(rail_hamiltonian(0.0, s, wrong), DimensionMismatch);

    const ComplexMatrix big = embed_section(h5, {3, 7}, 1, 9);
    CHECK(big(2, 2).real() == doctest::Approx(-chi));
    CHECK(big(0, 0) == 0.0);
    CHECK_THROWS_AS(embed_section(h5, {3, 7}, 4, 9), DimensionMismatch);
}

TEST_CASE("dark state closed forms") {
    PulseSchedule s = PulseSchedule::gaussian({0, 4}, 150.0);
    // Pump off: Theta = 0 and the state sits on the origin.
    const DarkState start = dark_state(-300.0, s);
    CHECK(start.mixing_angle < 1e-15);
    CHECK(std::abs(start.vector(0) - 1.0) < 1e-15);
    CHECK(start.vector.tail(4).norm() < 1e-15);

    const DarkState end = dark_state(450.0, s);
    CHECK(end.mixing_angle == doctest::Approx(std::numbers::pi / 2));
    CHECK(std::abs(end.vector(4) - 1.0) < 1e-15);
    CHECK(end.vector.head(4).norm() < 1e-15);

    // Mid-swap: pump = Stokes = 1/2, inner bond 1.
    PulseSchedule flat;
    flat.shape = PulseShape::three_step;
    flat.section = {0, 4};
    flat.ramp = 10;
    flat.hold = 100;
    const DarkState mid = dark_state(60.0, flat);
    CHECK(mid.mixing_angle == doctest::Approx(std::numbers::pi / 4));
    const double r = 1.0 / std::sqrt(2.0);
    const double x = 0.25 / std::sqrt(0.5);
    CHECK(mid.vector(0).real() == doctest::Approx(r));
    CHECK(mid.vector(2).real() == doctest::Approx(-x));
    CHECK(mid.vector(4).real() == doctest::Approx(r));
    CHECK((rail_hamiltonian(60.0, flat) * mid.vector).norm() < 1e-15);

    CHECK_THROWS_AS(dark_state(-5.0, flat), UndefinedMixingAngle);
    CHECK(normalized_dark_state(60.0, flat).norm() == doctest::Approx(1.0));
}

TEST_CASE("dark state is a zero-energy eigenvector for every section length") {
    for (int span : {2, 4, 6, 8, 10}) {
        CAPTURE(span);
        const PulseSchedule s = PulseSchedule::gaussian({3, 3 + span}, 150.0);
        for (double t : uniform_grid(s.effective_window(), 0.5)) {
            const ComplexMatrix h = rail_hamiltonian(t, s);
            const ComplexVector v = normalized_dark_state(t, s);
            CHECK((h * v).norm() <= 1e-12 * std::max(1.0, linalg::max_abs(h)));
        }
        const TimeWindow w = s.effective_window();
        CHECK(dark_state(w.start, s).mixing_angle < 0.01);
        CHECK(dark_state(w.end, s).mixing_angle > std::numbers::pi / 2 - 0.01);
    }
}

TEST_CASE("uniform grid") {
    const auto g = uniform_grid({0.0, 1.0}, 0.3);
    CHECK(g.size() == 5);
    CHECK(g.front() == 0.0);
    CHECK(g.back() == 1.0);
    CHECK_THROWS_AS(uniform_grid({0.0, 1.0}, 0.0), std::invalid_argument);
}

TEST_CASE("spectrum without TLSs keeps a zero-energy transported track") {
    const Spectrum sp = five_site_spectrum(0.0);
    CHECK(sp.levels() == 5);
    for (const auto& e : sp.energies) CHECK(std::abs(e(sp.transported_track)) < 1e-10);
    CHECK(transport_outcome(sp) == TransportOutcome::transported);
    CHECK(sp.anticrossings.empty());
    CHECK(sp.flags.empty());
    CHECK(std::abs(dynamical_phase(sp, sp.transported_track)) <= 1e-10 * 250.0);
}

TEST_CASE("tracked energies are a permutation of the sorted spectrum") {
    for (double chi : {0.0, 0.15, 0.3}) {
        const Spectrum sp = five_site_spectrum(chi, 0.25);
        for (std::size_t i = 0; i < sp.times.size(); ++i) {
            std::vector<double> tracked(sp.energies[i].data(), sp.energies[i].data() + 5);
            std::sort(tracked.begin(), tracked.end());
            for (int j = 0; j < 5; ++j) CHECK(tracked[j] == sp.sorted_energies[i](j));
        }
    }
}

TEST_CASE("step-one anti-crossing at chi = 0.15") {
    const Spectrum sp = five_site_spectrum(0.15);
    std::vector<LevelGap> early;
    for (const auto& a : sp.anticrossings)
        if (a.time < 20.0) early.push_back(a);
    REQUIRE(early.size() == 1);
    CHECK(early[0].gap == doctest::Approx(2e-4).epsilon(0.5));
    CHECK(early[0].kind == GapKind::crossing_like);
    CHECK(to_string(early[0].kind) == "crossing-like");
    CHECK(transport_outcome(sp) == TransportOutcome::transported);
}

TEST_CASE("minimum gaps are stable under grid refinement") {
    const Spectrum coarse = five_site_spectrum(0.15, 0.2);
    const Spectrum fine = five_site_spectrum(0.15, 0.1);
    REQUIRE(coarse.min_gaps.size() == fine.min_gaps.size());
    for (std::size_t i = 0; i < fine.min_gaps.size(); ++i)
        CHECK(std::abs(coarse.min_gaps[i].gap - fine.min_gaps[i].gap) < 0.1 * fine.min_gaps[i].gap);
}

TEST_CASE("strong coupling returns the electron to the origin") {
    const Spectrum sp = five_site_spectrum(0.45);
    CHECK(transport_outcome(sp) == TransportOutcome::returned_to_origin);
    CHECK(to_string(TransportOutcome::returned_to_origin) == "return-to-origin");
    CHECK(sp.energies.front()(sp.transported_track) == doctest::Approx(-0.45).epsilon(1e-3));
}

TEST_CASE("adiabaticity margin") {
    const Spectrum clean = five_site_spectrum(0.0);
    const AdiabaticityProfile p = adiabaticity_profile(clean, clean.transported_track);
    const std::vector<double> margin = adiabaticity_margin(clean);
    REQUIRE(margin.size() == clean.times.size());
    for (std::size_t i = 0; i < clean.times.size(); ++i) {
        CHECK(margin[i] == p.margin[i]);
        if (clean.times[i] > 20.0 && clean.times[i] < 130.0) {
            CHECK(margin[i] > 0.0);
            CHECK(p.ratio[i] >= 10.0);
        }
    }

    const Spectrum wild = five_site_spectrum(0.3);
    const AdiabaticityProfile q = adiabaticity_profile(wild, wild.transported_track);
    double lowest = 1e9;
    for (std::size_t i = 0; i < wild.times.size(); ++i)
        if (wild.times[i] > 20.0 && wild.times[i] < 130.0) lowest = std::min(lowest, q.ratio[i]);
    CHECK(lowest < 1.0);

    // Constant Hamiltonian (pulses fully off): no coupling term.
    PulseSchedule s = PulseSchedule::gaussian({0, 4}, 150.0);
    const std::vector<double> split{0.1, 0.0, 0.0, 0.0, -0.1};
    const Spectrum flat = track_spectrum(s, split, uniform_grid({1e4, 1e4 + 5}, 0.5));
    const auto m = adiabaticity_margin(flat);
    double gap = 1e9;
    for (int j = 0; j < 5; ++j)
        if (j != flat.transported_track)
            gap = std::min(gap, std::abs(flat.energies[0](j) - flat.energies[0](flat.transported_track)));
    CHECK(gap == doctest::Approx(0.1));
    for (double v : m) CHECK(v == doctest::Approx(gap));
}

TEST_CASE("level ordering precondition") {
    const std::vector<std::vector<double>> equal{{0.3, 0.3, 0.3}};
    CHECK(crossing_precondition(equal, 1e-3).ordered);
    const std::vector<double> d{0.5, 0.1, 0.1};
    CHECK_FALSE(three_site_ordered(d, 0.3));
    CHECK(three_site_ordered(d, 0.5));
    const std::vector<std::vector<double>> strong{block({-1, 1, 1, 1, 1}, 0.45)};
    const CrossingCheck c = crossing_precondition(strong, 1.0);
    CHECK_FALSE(c.ordered);
    CHECK(c.margin < 0.0);
    const std::vector<std::vector<double>> weak{block({-1, 1, 1, 1, 1}, 0.15)};
    CHECK(crossing_precondition(weak, 1.0).ordered);
}

TEST_CASE("three-site closed form agrees with diagonalisation") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-0.6, 0.6);
    int agreements = 0;
    for (int i = 0; i < 300; ++i) {
        const std::vector<double> d{u(rng), u(rng), u(rng)};
        const double omega = 0.05 + std::abs(u(rng));
        const double lhs = omega * omega, rhs = (d[0] - d[2]) * (d[0] - d[1]);
        if (std::abs(lhs - rhs) < 1e-9) continue;
        const std::vector<std::vector<double>> blocks{d};
        CHECK(crossing_precondition(blocks, omega).ordered == three_site_ordered(d, omega));
        ++agreements;
    }
    CHECK(agreements > 250);
}

TEST_CASE("dynamical phase") {
    PulseSchedule s = PulseSchedule::gaussian({0, 4}, 150.0);
    const double c = 0.37;
    const std::vector<double> shift(5, c);
    const Spectrum sp = track_spectrum(s, shift, uniform_grid(s.effective_window(), 0.5));
    CHECK(dynamical_phase(sp, sp.transported_track) == doctest::Approx(c * 250.0).epsilon(1e-10));

    PulseSchedule s3 = PulseSchedule::gaussian({0, 2}, 150.0);
    const auto grid = uniform_grid(s3.effective_window(), 0.25);
    const tls::TlsBath bath = tls::TlsBath::uniform(3, 0.05);
    const Spectrum a = track_spectrum(s3, tls::block_diagonal({{-1, 1, -1}, 1.0}, bath), grid);
    const Spectrum b = track_spectrum(s3, tls::block_diagonal({{1, -1, 1}, 1.0}, bath), grid);
    const double pa = dynamical_phase(a, a.transported_track);
    const double pb = dynamical_phase(b, b.transported_track);
    CHECK(std::abs(pa) > 1.0);
    CHECK(std::abs(pa + pb) <= 1e-9 * std::abs(pa));
}
