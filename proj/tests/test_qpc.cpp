#include <doctest.h>

#include <cmath>
#include <numbers>

#include "ctap/qpc.hpp"

using namespace ctap;
using namespace ctap::qpc;

namespace {

RailGeometry unit_geometry(double alpha = 0.04) {
    RailGeometry g;
    g.alpha = alpha;
    g.total_rate = g.n_sites;
    return g;
}

// Literal finite-rail evaluation of R[1 - sum_j sqrt(pi_j(k) pi_j(l))]
// with per-site normalisation on a long centred rail.
double brute_force_rate(int separation, const RailGeometry& shape, int n) {
    const int k = n / 2 - separation / 2;
    const int l = k + separation;
    double sk = 0.0, sl = 0.0;
    for (int j = 0; j < n; ++j) {
        const double rk = std::hypot(shape.offset, (k - j) * shape.spacing);
        const double rl = std::hypot(shape.offset, (l - j) * shape.spacing);
        sk += 1.0 - shape.alpha / rk;
        sl += 1.0 - shape.alpha / rl;
    }
    double overlap = 0.0;
    for (int j = 0; j < n; ++j) {
        const double rk = std::hypot(shape.offset, (k - j) * shape.spacing);
        const double rl = std::hypot(shape.offset, (l - j) * shape.spacing);
        overlap += std::sqrt((1.0 - shape.alpha / rk) / sk * (1.0 - shape.alpha / rl) / sl);
    }
    return n * shape.rate_per_qpc() * (1.0 - overlap);
}

}  // namespace

TEST_CASE("QPC distances") {
    RailGeometry g;
    CHECK(qpc_distance(3, 3, g) == doctest::Approx(1.0));
    CHECK(qpc_distance(0, 2, g) == doctest::Approx(std::sqrt(5.0)));
    CHECK(qpc_distance(2, 0, g) == qpc_distance(0, 2, g));
    g.offset = 2.0;
    g.spacing = 0.5;
    CHECK(qpc_distance(4, 5, g) == doctest::Approx(std::sqrt(4.25)));
}

TEST_CASE("geometry validation") {
    RailGeometry g = unit_geometry();
    CHECK_NOTHROW(g.validate());
    g.alpha = 1.0;
    CHECK_THROWS_AS(g.validate(), InvalidGeometry);
    CHECK_THROWS_AS(build_measurement_model(g), InvalidGeometry);
    g = unit_geometry();
    g.n_sites = 30;
    CHECK_THROWS_AS(g.validate(), InvalidGeometry);
    g = unit_geometry();
    g.profile = SensitivityProfile::local;
    g.alpha = 2.0;
    CHECK_NOTHROW(g.validate());
    const RailGeometry c = RailGeometry::centred(5, 10, 1.0, 1.0, 0.04);
    CHECK(c.n_sites == 25);
    CHECK(c.section.first == 10);
    CHECK(c.rate_per_qpc() == 1.0);
}

TEST_CASE("insensitive QPCs give a trivial model") {
    const MeasurementModel m = build_measurement_model(unit_geometry(0.0));
    CHECK(m.gamma == doctest::Approx(1.0));
    CHECK(m.gamma_limit == doctest::Approx(1.0));
    for (const auto& pi : m.effect_diagonals)
        for (double e : pi) CHECK(e == doctest::Approx(1.0 / 41));
}

TEST_CASE("effect operators are complete and positive") {
    for (double a : {0.1, 1.0, 10.0})
        for (double cutoff : {1e-10, 1e-12, 1e-14}) {
            CAPTURE(a);
            RailGeometry g = unit_geometry(0.04 * a);
            g.offset = a;
            g.tail_cutoff = cutoff;
            const MeasurementModel m = build_measurement_model(g);
            for (int i = 0; i < g.n_sites; ++i) {
                double total = 0.0;
                for (int j = 0; j < g.n_sites; ++j) {
                    const double e = m.effect_diagonals[j][i];
                    CHECK(e > 0.0);
                    CHECK(e <= m.site_gamma[i] / g.n_sites * (1 + 1e-15));
                    CHECK(m.lindblad_diagonals[j][i] * m.lindblad_diagonals[j][i] == doctest::Approx(e));
                    total += e;
                }
                CHECK(std::abs(total - 1.0) <= 1e-10);
            }
        }
}

TEST_CASE("long-rail normalisation and effect profile") {
    const RailGeometry g = unit_geometry();
    const MeasurementModel m = build_measurement_model(g);
    double direct = 0.0;
    for (int j = 0; j < g.n_sites; ++j) direct += 0.04 / (g.n_sites * std::hypot(1.0, j - 20));
    CHECK(m.gamma_limit == doctest::Approx(1.0 + direct).epsilon(1e-14));
    CHECK(m.gamma == doctest::Approx(m.gamma_limit).epsilon(1e-3));
    // For QPC j the detection probability grows with distance from j.
    const auto& pi = m.effect_diagonals[20];
    for (int i = 21; i < g.n_sites; ++i) CHECK(pi[i] * g.n_sites / m.site_gamma[i] > pi[i - 1] * g.n_sites / m.site_gamma[i - 1]);
}

TEST_CASE("exact decoherence rate") {
    const RailGeometry g = unit_geometry();
    CHECK(decoherence_rate_exact(7, 7, g) == 0.0);
    CHECK(decoherence_rate_exact(0, 5, unit_geometry(0.0)) == 0.0);
    CHECK(decoherence_rate_exact(3, 11, g) == decoherence_rate_exact(11, 3, g));
    CHECK(decoherence_rate_exact(3, 11, g) == doctest::Approx(decoherence_rate_exact(100, 108, g)).epsilon(1e-12));
    double previous = 0.0;
    for (int s = 0; s <= 30; ++s) {
        const double t = decoherence_rate_exact(0, s, g);
        CHECK(t >= previous);
        previous = t;
    }
    const RailSum s = decoherence_rate_exact_sum(0, 20, g);
    CHECK(s.radius > 0);
}

TEST_CASE("exact rate matches a brute-force long finite rail") {
    const RailGeometry g = unit_geometry();
    const double infinite = decoherence_rate_exact(0, 20, g);
    CHECK(infinite == doctest::Approx(9.82e-4).epsilon(2e-3));
    // Finite-rail corrections fall like 1/N.
    const double e1 = std::abs(brute_force_rate(20, g, 4001) / infinite - 1.0);
    const double e2 = std::abs(brute_force_rate(20, g, 16001) / infinite - 1.0);
    CHECK(e2 < 2e-3);
    CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.15));
}

TEST_CASE("finite measurement model approaches the infinite-rail rates") {
    RailGeometry g = RailGeometry::centred(5, 998, 1.0, 1.0, 0.04);
    const MeasurementModel m = build_measurement_model(g);
    const auto finite = finite_rail_rates(m, g.section.first, 5);
    const auto infinite = rate_matrix(g, g.section.first, 5);
    for (int k = 0; k < 5; ++k)
        for (int l = 0; l < 5; ++l) {
            if (k == l) {
                CHECK(finite(k, l) == 0.0);
                continue;
            }
            CHECK(finite(k, l) == doctest::Approx(infinite(k, l)).epsilon(0.01));
        }
    CHECK_THROWS_AS(finite_rail_rates(m, g.n_sites - 2, 5), DimensionMismatch);
}

TEST_CASE("weak-measurement rate") {
    RailGeometry g = unit_geometry();
    CHECK(decoherence_rate_weak(4, 4, g) == 0.0);
    const double base = decoherence_rate_weak(0, 7, g);
    g.alpha = 0.08;
    CHECK(decoherence_rate_weak(0, 7, g) / base == doctest::Approx(4.0).epsilon(1e-12));
    g.alpha = 0.04;
    for (int s = 1; s <= 20; ++s) {
        const double exact = decoherence_rate_exact(0, s, g);
        CHECK(std::abs(decoherence_rate_weak(0, s, g) - exact) / exact < 0.05);
    }
}

TEST_CASE("saturation formula") {
    const RailGeometry g = unit_geometry();
    const double coth = std::cosh(std::numbers::pi) / std::sinh(std::numbers::pi);
    CHECK(saturation_rate(g) == doctest::Approx(0.0016 / 4 * coth).epsilon(1e-12));
    CHECK(saturation_rate(g) == doctest::Approx(4.015e-4).epsilon(1e-3));
    RailGeometry wide = g;
    wide.offset = 50.0;
    wide.alpha = 0.04;
    CHECK(saturation_rate(wide) == doctest::Approx(wide.alpha * wide.alpha / 4 / 50.0).epsilon(1e-12));
}

TEST_CASE("weak rate at very large separation tends to pi times the saturation formula") {
    // sum_j 1/r_j^2 = pi coth(pi a/d) / (a d) on the infinite rail.
    RailGeometry g = unit_geometry();
    g.tail_cutoff = 1e-14;
    const double far = decoherence_rate_weak(0, 4000, g);
    CHECK(far == doctest::Approx(std::numbers::pi * saturation_rate(g)).epsilon(0.01));
}

TEST_CASE("local-measurement limit") {
    CHECK(local_limit_rate(41, 41, 0.0) == 0.0);
    // 2.04 - 2 sqrt(1.04) to 20 digits.
    CHECK(std::abs(local_limit_rate(41, 41, 0.04) - 3.9219456288606798871e-4) < 1e-15);
    CHECK(local_limit_rate(82, 41, 0.04) == doctest::Approx(2 * local_limit_rate(41, 41, 0.04)));
    const double a = 0.01;
    CHECK(std::abs(local_limit_rate(41, 41, a) * 4 / (a * a) - 1.0) < 0.01);

    RailGeometry g = unit_geometry();
    g.profile = SensitivityProfile::local;
    const auto t = rate_matrix(g, 0, 4);
    for (int k = 0; k < 4; ++k)
        for (int l = 0; l < 4; ++l)
            if (k != l) CHECK(t(k, l) == doctest::Approx(local_limit_rate(41, 41, 0.04)).epsilon(1e-12));
}

TEST_CASE("rate matrix is symmetric with zero diagonal") {
    const auto t = rate_matrix(unit_geometry(), 10, 6);
    CHECK(t.isApprox(t.transpose()));
    CHECK(t.diagonal().isZero());
    CHECK(t(0, 5) == doctest::Approx(decoherence_rate_exact(10, 15, unit_geometry())));
}
