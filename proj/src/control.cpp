#include "ctap/control.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <tuple>

namespace ctap::control {

namespace {

constexpr double kContinuityThreshold = 0.5;
constexpr double kAntiCrossingFraction = 0.1;
constexpr double kCrossingLikeGap = 1e-3;  // in units of omega_max

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    if (v.size() % 2 == 1) return *mid;
    const double upper = *mid;
    const double lower = *std::max_element(v.begin(), mid);
    return 0.5 * (lower + upper);
}

double level_gap(const PulseSchedule& sched, std::span<const double> diagonal, double t, int lower) {
    const RealVector e = linalg::hermitian_eigenvalues(rail_hamiltonian(t, sched, diagonal));
    return e(lower + 1) - e(lower);
}

// Golden-section minimisation of a pair gap on [a, b].
std::pair<double, double> refine_gap(const PulseSchedule& sched, std::span<const double> diagonal,
                                     int lower, double a, double b) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = level_gap(sched, diagonal, c, lower);
    double fd = level_gap(sched, diagonal, d, lower);
    for (int it = 0; it < 200 && (b - a) > 1e-12 * std::max(1.0, std::abs(a)); ++it) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = level_gap(sched, diagonal, c, lower);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = level_gap(sched, diagonal, d, lower);
        }
    }
    return fc < fd ? std::pair{c, fc} : std::pair{d, fd};
}

GapKind classify(double gap, double omega_max) {
    return gap < kCrossingLikeGap * omega_max ? GapKind::crossing_like : GapKind::anti_crossing;
}

}  // namespace

PulseSchedule PulseSchedule::gaussian(Section section, double duration, double omega_max) {
    PulseSchedule s;
    s.section = section;
    s.shape = PulseShape::gaussian;
    s.duration = duration;
    s.omega_max = omega_max;
    return s;
}

TimeWindow PulseSchedule::effective_window() const {
    if (window) return *window;
    if (shape == PulseShape::gaussian) return {-duration / 3.0, 4.0 * duration / 3.0};
    return {0.0, 2.0 * ramp + hold};
}

void PulseSchedule::validate() const {
    const int span = section.span();
    if (span < 2) throw std::invalid_argument("section must span at least two bonds (n - m >= 2)");
    if (span % 2 != 0) throw std::invalid_argument("section length n - m must be even");
    if (!(omega_max > 0.0)) throw std::invalid_argument("omega_max must be > 0");
    if (shape == PulseShape::gaussian && !(duration > 0.0))
        throw std::invalid_argument("gaussian duration T must be > 0");
    if (shape == PulseShape::three_step && !(ramp > 0.0 && hold > 0.0))
        throw std::invalid_argument("three_step ramp and hold must be > 0");
    const TimeWindow w = effective_window();
    if (!(w.end > w.start)) throw std::invalid_argument("window must have end > start");
}

std::vector<double> PulseSchedule::couplings(double t) const {
    const int bonds = sites() - 1;
    std::vector<double> c(static_cast<std::size_t>(bonds), omega_max);
    double pump = 0.0;
    double stokes = 0.0;
    double inner = omega_max;
    if (shape == PulseShape::gaussian) {
        const PumpStokes ps = pump_stokes(t, duration);
        pump = omega_max * ps.pump;
        stokes = omega_max * ps.stokes;
    } else {
        if (t <= 0.0 || t >= 2.0 * ramp + hold) {
            inner = 0.0;
        } else if (t < ramp) {
            inner = stokes = omega_max * t / ramp;
        } else if (t <= ramp + hold) {
            const double f = (t - ramp) / hold;
            pump = omega_max * f;
            stokes = omega_max * (1.0 - f);
        } else {
            inner = pump = omega_max * (1.0 - (t - ramp - hold) / ramp);
        }
    }
    std::fill(c.begin(), c.end(), inner);
    c.front() = pump;
    c.back() = stokes;
    return c;
}

PumpStokes pump_stokes(double t, double duration) {
    const double width = duration / 4.0;
    const double p = (t - 3.0 * duration / 4.0) / width;
    const double s = (t - duration / 4.0) / width;
    return {std::exp(-p * p), std::exp(-s * s)};
}

ComplexMatrix rail_hamiltonian(double t, const PulseSchedule& sched, std::span<const double> diagonal) {
    const int k = sched.sites();
    if (!diagonal.empty() && static_cast<int>(diagonal.size()) != k)
        throw DimensionMismatch("diagonal has " + std::to_string(diagonal.size()) +
                                " entries for a " + std::to_string(k) + "-site section");
    ComplexMatrix h = ComplexMatrix::Zero(k, k);
    const std::vector<double> c = sched.couplings(t);
    for (int i = 0; i + 1 < k; ++i) {
        h(i, i + 1) = c[static_cast<std::size_t>(i)];
        h(i + 1, i) = c[static_cast<std::size_t>(i)];
    }
    for (int i = 0; i < static_cast<int>(diagonal.size()); ++i) h(i, i) = diagonal[static_cast<std::size_t>(i)];
    return h;
}

ComplexMatrix embed_section(const ComplexMatrix& op, const Section& section, int model_offset, int dim) {
    const int at = section.first - model_offset;
    if (at < 0 || at + op.rows() > dim)
        throw DimensionMismatch("section does not fit inside the model sites");
    ComplexMatrix out = ComplexMatrix::Zero(dim, dim);
    out.block(at, at, op.rows(), op.cols()) = op;
    return out;
}

DarkState dark_state(double t, const PulseSchedule& sched) {
    const std::vector<double> c = sched.couplings(t);
    const double pump = c.front();
    const double stokes = c.back();
    if (pump == 0.0 && stokes == 0.0)
        throw UndefinedMixingAngle("pump and Stokes couplings both vanish at t = " + std::to_string(t));
    const int k = sched.sites();
    const int half = sched.section.span() / 2;
    DarkState d;
    d.mixing_angle = std::atan2(pump, stokes);
    d.x = pump * stokes / (sched.omega_max * std::hypot(pump, stokes));
    d.vector = ComplexVector::Zero(k);
    d.vector(0) = std::cos(d.mixing_angle);
    d.vector(k - 1) = (half % 2 == 0 ? 1.0 : -1.0) * std::sin(d.mixing_angle);
    for (int j = 2; j <= half; ++j) d.vector(2 * j - 2) = -d.x * (j % 2 == 0 ? 1.0 : -1.0);
    return d;
}

ComplexVector normalized_dark_state(double t, const PulseSchedule& sched) {
    ComplexVector v = dark_state(t, sched).vector;
    return v / v.norm();
}

std::string to_string(GapKind kind) {
    switch (kind) {
        case GapKind::crossing_like: return "crossing-like";
        case GapKind::anti_crossing: return "anti-crossing";
        case GapKind::well_separated: return "well-separated";
    }
    return "unknown";
}

std::string to_string(TransportOutcome outcome) {
    switch (outcome) {
        case TransportOutcome::transported: return "transported";
        case TransportOutcome::returned_to_origin: return "return-to-origin";
        case TransportOutcome::other: return "other";
    }
    return "unknown";
}

std::vector<double> uniform_grid(TimeWindow window, double step) {
    if (!(step > 0.0) || !(window.end > window.start))
        throw std::invalid_argument("uniform_grid needs step > 0 and a non-empty window");
    const auto n = static_cast<std::size_t>(std::ceil(window.length() / step - 1e-9));
    std::vector<double> grid(n + 1);
    for (std::size_t i = 0; i <= n; ++i)
        grid[i] = window.start + window.length() * static_cast<double>(i) / static_cast<double>(n);
    return grid;
}

Spectrum track_spectrum(const PulseSchedule& sched, std::span<const double> diagonal,
                        std::span<const double> grid) {
    if (grid.size() < 2) throw std::invalid_argument("spectrum grid needs at least two times");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1])) throw std::invalid_argument("spectrum grid must be strictly increasing");

    const int k = sched.sites();
    Spectrum sp;
    sp.omega_max = sched.omega_max;
    sp.times.assign(grid.begin(), grid.end());

    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double t = grid[i];
        const linalg::EigenDecomposition ed = linalg::hermitian_eigendecompose(rail_hamiltonian(t, sched, diagonal));
        sp.sorted_energies.push_back(ed.values);
        RealVector tracked(k);
        ComplexMatrix states(k, k);
        if (i == 0) {
            tracked = ed.values;
            states = ed.vectors;
        } else {
            const ComplexMatrix& prev = sp.states.back();
            std::vector<std::tuple<double, int, int>> candidates;
            candidates.reserve(static_cast<std::size_t>(k * k));
            for (int j = 0; j < k; ++j)
                for (int n = 0; n < k; ++n)
                    candidates.emplace_back(std::abs(prev.col(j).dot(ed.vectors.col(n))), j, n);
            std::stable_sort(candidates.begin(), candidates.end(),
                             [](const auto& a, const auto& b) { return std::get<0>(a) > std::get<0>(b); });
            std::vector<bool> track_done(static_cast<std::size_t>(k), false);
            std::vector<bool> level_done(static_cast<std::size_t>(k), false);
            for (const auto& [overlap, j, n] : candidates) {
                if (track_done[static_cast<std::size_t>(j)] || level_done[static_cast<std::size_t>(n)]) continue;
                track_done[static_cast<std::size_t>(j)] = level_done[static_cast<std::size_t>(n)] = true;
                ComplexVector v = ed.vectors.col(n);
                const linalg::Complex c = prev.col(j).dot(v);
                if (std::abs(c) > 0.0) v *= std::conj(c) / std::abs(c);
                if (overlap < kContinuityThreshold) sp.flags.push_back({j, grid[i - 1], overlap});
                tracked(j) = ed.values(n);
                states.col(j) = v;
            }
        }
        sp.energies.push_back(tracked);
        sp.states.push_back(std::move(states));
    }

    int origin_track = 0;
    sp.states.front().row(0).cwiseAbs().maxCoeff(&origin_track);
    sp.transported_track = origin_track;

    for (int lower = 0; lower + 1 < k; ++lower) {
        std::vector<double> gaps(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i)
            gaps[i] = sp.sorted_energies[i](lower + 1) - sp.sorted_energies[i](lower);
        const double threshold = kAntiCrossingFraction * median(gaps);

        LevelGap smallest{lower, grid[0], gaps[0], GapKind::well_separated};
        std::size_t smallest_at = 0;
        for (std::size_t i = 1; i < gaps.size(); ++i)
            if (gaps[i] < smallest.gap) {
                smallest = {lower, grid[i], gaps[i], GapKind::well_separated};
                smallest_at = i;
            }

        for (std::size_t i = 1; i + 1 < gaps.size(); ++i) {
            if (!(gaps[i] < gaps[i - 1] && gaps[i] <= gaps[i + 1] && gaps[i] < threshold)) continue;
            const auto [t_min, g_min] = refine_gap(sched, diagonal, lower, grid[i - 1], grid[i + 1]);
            LevelGap rec{lower, t_min, std::min(g_min, gaps[i]), GapKind::anti_crossing};
            if (g_min > gaps[i]) rec.time = grid[i];
            rec.kind = classify(rec.gap, sched.omega_max);
            sp.anticrossings.push_back(rec);
            if (i == smallest_at) smallest = rec;
        }
        sp.min_gaps.push_back(smallest);
    }
    return sp;
}

TransportOutcome transport_outcome(const Spectrum& sp) {
    const ComplexMatrix& last = sp.states.back();
    int site = 0;
    last.col(sp.transported_track).cwiseAbs().maxCoeff(&site);
    if (site == sp.levels() - 1) return TransportOutcome::transported;
    if (site == 0) return TransportOutcome::returned_to_origin;
    return TransportOutcome::other;
}

AdiabaticityProfile adiabaticity_profile(const Spectrum& sp, int track) {
    const std::size_t n = sp.times.size();
    const int k = sp.levels();
    AdiabaticityProfile out;
    out.margin.resize(n);
    out.ratio.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = i == 0 ? 0 : i - 1;
        const std::size_t hi = i + 1 == n ? i : i + 1;
        const ComplexVector derivative =
            (sp.states[hi].col(track) - sp.states[lo].col(track)) / (sp.times[hi] - sp.times[lo]);
        double margin = std::numeric_limits<double>::infinity();
        double ratio = std::numeric_limits<double>::infinity();
        for (int j = 0; j < k; ++j) {
            if (j == track) continue;
            const double gap = std::abs(sp.energies[i](track) - sp.energies[i](j));
            const double coupling = std::abs(derivative.dot(sp.states[i].col(j)));
            margin = std::min(margin, gap - coupling);
            if (coupling > 0.0) ratio = std::min(ratio, gap / coupling);
        }
        out.margin[i] = margin;
        out.ratio[i] = ratio;
    }
    return out;
}

std::vector<double> adiabaticity_margin(const Spectrum& sp) {
    return adiabaticity_profile(sp, sp.transported_track).margin;
}

CrossingCheck crossing_precondition(std::span<const std::vector<double>> block_diagonals, double omega_max) {
    CrossingCheck worst{true, std::numeric_limits<double>::infinity()};
    for (const auto& diag : block_diagonals) {
        const int k = static_cast<int>(diag.size());
        if (k < 3 || k % 2 == 0) throw DimensionMismatch("block diagonal must cover an odd section of >= 3 sites");
        ComplexMatrix h = ComplexMatrix::Zero(k, k);
        for (int i = 0; i < k; ++i) h(i, i) = diag[static_cast<std::size_t>(i)];
        for (int i = 1; i + 1 < k; ++i) h(i, i + 1) = h(i + 1, i) = omega_max;
        const linalg::EigenDecomposition ed = linalg::hermitian_eigendecompose(h);
        int origin = 0;
        ed.vectors.row(0).cwiseAbs().maxCoeff(&origin);
        const double e0 = ed.values(origin);
        std::vector<double> others;
        for (int j = 0; j < k; ++j)
            if (j != origin) others.push_back(ed.values(j));
        std::sort(others.begin(), others.end());
        const auto half = static_cast<std::size_t>((k - 1) / 2);
        const double margin = std::min(e0 - others[half - 1], others[half] - e0);
        if (margin < worst.margin) worst.margin = margin;
    }
    worst.ordered = worst.margin > 0.0;
    return worst;
}

bool three_site_ordered(std::span<const double> diagonal, double omega_start) {
    if (diagonal.size() != 3) throw DimensionMismatch("three_site_ordered needs three on-site energies");
    return omega_start * omega_start > (diagonal[0] - diagonal[2]) * (diagonal[0] - diagonal[1]);
}

double dynamical_phase(const Spectrum& sp, int track) {
    double phase = 0.0;
    for (std::size_t i = 1; i < sp.times.size(); ++i)
        phase += 0.5 * (sp.energies[i](track) + sp.energies[i - 1](track)) * (sp.times[i] - sp.times[i - 1]);
    return phase;
}

}  // namespace ctap::control
