#include "ctap/qpc.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace ctap::qpc {

namespace {

constexpr int kMaxRadius = 10'000'000;

// 1/r_ij for the Coulomb profile, delta_ij for the local one.
double inverse_distance(int site, int qpc, const RailGeometry& g) {
    if (g.profile == SensitivityProfile::local) return site == qpc ? 1.0 : 0.0;
    return 1.0 / qpc_distance(site, qpc, g);
}

// Sum f(j) over all integer QPC positions: first the span [lo, hi], then
// symmetric shells lo - r, hi + r until a shell contributes at most
// tail_cutoff times the running sum.
template <class Term>
RailSum sum_outward(int lo, int hi, double tail_cutoff, Term&& term) {
    RailSum s;
    for (int j = lo; j <= hi; ++j) s.value += term(j);
    for (int r = 1; r <= kMaxRadius; ++r) {
        const double shell = term(lo - r) + term(hi + r);
        s.value += shell;
        s.radius = r;
        if (shell <= tail_cutoff * s.value) break;
    }
    return s;
}

}  // namespace

void RailGeometry::validate() const {
    auto fail = [](const std::string& msg) { throw InvalidGeometry(msg); };
    if (n_sites < 1) fail("n_sites must be positive");
    if (!(spacing > 0.0)) fail("spacing d must be > 0");
    if (!(offset > 0.0)) fail("offset a must be > 0");
    if (!(alpha >= 0.0)) fail("alpha must be >= 0");
    if (profile == SensitivityProfile::coulomb && !(alpha < offset))
        fail("alpha must be < a so that 1 - alpha/r stays positive");
    if (!(total_rate >= 0.0)) fail("total_rate R must be >= 0");
    if (!(tail_cutoff > 0.0 && tail_cutoff < 1.0)) fail("tail_cutoff must lie in (0, 1)");
    if (section.span() < 0) fail("section must have first <= last");
    if (margin < 0) fail("margin must be >= 0");
    if (n_sites < section.sites() + 2 * margin)
        fail("n_sites must cover the section plus twice the margin");
    if (section.first < margin || section.last > n_sites - 1 - margin)
        fail("section must sit at least `margin` sites from either rail end");
}

RailGeometry RailGeometry::centred(int section_sites, int margin, double spacing,
                                   double offset, double alpha, SensitivityProfile profile) {
    RailGeometry g;
    g.n_sites = section_sites + 2 * margin;
    g.spacing = spacing;
    g.offset = offset;
    g.alpha = alpha;
    g.total_rate = g.n_sites;
    g.profile = profile;
    g.section = {margin, margin + section_sites - 1};
    g.margin = margin;
    return g;
}

double qpc_distance(int i, int j, const RailGeometry& g) {
    const double horizontal = std::abs(i - j) * g.spacing;
    return std::sqrt(g.offset * g.offset + horizontal * horizontal);
}

double detection_weight(int site, int qpc, const RailGeometry& g) {
    const double u = inverse_distance(site, qpc, g);
    return g.profile == SensitivityProfile::local ? 1.0 + g.alpha * u : 1.0 - g.alpha * u;
}

MeasurementModel build_measurement_model(const RailGeometry& g) {
    g.validate();
    const int n = g.n_sites;
    MeasurementModel m;
    m.geometry = g;
    m.site_gamma.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        double total = 0.0;
        for (int j = 0; j < n; ++j) total += detection_weight(i, j, g);
        m.site_gamma[static_cast<std::size_t>(i)] = n / total;
    }
    const int centre = n / 2;
    m.gamma = m.site_gamma[static_cast<std::size_t>(centre)];
    double limit = 0.0;
    for (int j = 0; j < n; ++j) limit += g.alpha * inverse_distance(centre, j, g) / n;
    m.gamma_limit = g.profile == SensitivityProfile::local ? 1.0 - limit : 1.0 + limit;

    m.effect_diagonals.assign(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(n)));
    m.lindblad_diagonals = m.effect_diagonals;
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            const double e = m.site_gamma[static_cast<std::size_t>(i)] / n * detection_weight(i, j, g);
            m.effect_diagonals[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = e;
            m.lindblad_diagonals[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = std::sqrt(e);
        }
    }
    return m;
}

RailSum decoherence_rate_exact_sum(int k, int l, const RailGeometry& g) {
    g.validate();
    if (k == l) return {};
    // Each shell term is (sqrt w_kj - sqrt w_lj)^2 / 2, written through the
    // weight difference to avoid cancelling two numbers close to one.
    auto term = [&](int j) {
        const double wk = detection_weight(k, j, g);
        const double wl = detection_weight(l, j, g);
        const double diff = (wk - wl) / (std::sqrt(wk) + std::sqrt(wl));
        return 0.5 * diff * diff;
    };
    RailSum s = sum_outward(std::min(k, l), std::max(k, l), g.tail_cutoff, term);
    s.value *= g.rate_per_qpc();
    return s;
}

double decoherence_rate_exact(int k, int l, const RailGeometry& g) {
    return decoherence_rate_exact_sum(k, l, g).value;
}

RailSum decoherence_rate_weak_sum(int k, int l, const RailGeometry& g) {
    if (k == l) return {};
    auto term = [&](int j) {
        const double diff = inverse_distance(k, j, g) - inverse_distance(l, j, g);
        return diff * diff;
    };
    RailSum s = sum_outward(std::min(k, l), std::max(k, l), g.tail_cutoff, term);
    s.value *= g.rate_per_qpc() * g.alpha * g.alpha / 8.0;
    return s;
}

double decoherence_rate_weak(int k, int l, const RailGeometry& g) {
    return decoherence_rate_weak_sum(k, l, g).value;
}

double saturation_rate(const RailGeometry& g) {
    const double ratio = g.offset / g.spacing;
    const double coth = 1.0 / std::tanh(std::numbers::pi * ratio);
    return g.rate_per_qpc() * g.alpha * g.alpha / (4.0 * g.spacing * g.spacing) * coth / ratio;
}

double local_limit_rate(double total_rate, double n_sites, double alpha) {
    return total_rate / n_sites * (2.0 + alpha - 2.0 * std::sqrt(1.0 + alpha));
}

linalg::RealMatrix rate_matrix(const RailGeometry& g, int first_site, int count) {
    linalg::RealMatrix t = linalg::RealMatrix::Zero(count, count);
    // Translation invariance: T_kl depends on |k - l| only.
    std::vector<double> by_separation(static_cast<std::size_t>(std::max(count, 1)), 0.0);
    for (int s = 1; s < count; ++s)
        by_separation[static_cast<std::size_t>(s)] = decoherence_rate_exact(first_site, first_site + s, g);
    for (int k = 0; k < count; ++k)
        for (int l = 0; l < count; ++l) t(k, l) = by_separation[static_cast<std::size_t>(std::abs(k - l))];
    return t;
}

linalg::RealMatrix finite_rail_rates(const MeasurementModel& model, int first_site, int count) {
    const int n = model.geometry.n_sites;
    if (first_site < 0 || first_site + count > n)
        throw DimensionMismatch("requested sites lie outside the finite rail");
    const double r = model.geometry.total_rate;
    linalg::RealMatrix t = linalg::RealMatrix::Zero(count, count);
    for (int k = 0; k < count; ++k) {
        for (int l = 0; l < count; ++l) {
            if (k == l) continue;
            double overlap = 0.0;
            for (int j = 0; j < n; ++j) {
                const auto& a = model.lindblad_diagonals[static_cast<std::size_t>(j)];
                overlap += a[static_cast<std::size_t>(first_site + k)] * a[static_cast<std::size_t>(first_site + l)];
            }
            t(k, l) = r * (1.0 - overlap);
        }
    }
    return t;
}

}  // namespace ctap::qpc
