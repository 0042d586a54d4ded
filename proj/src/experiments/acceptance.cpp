#include "ctap/experiments/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <stdexcept>

#include "ctap/control.hpp"
#include "ctap/dynamics.hpp"
#include "ctap/experiments/experiments.hpp"
#include "ctap/qpc.hpp"
#include "ctap/tls.hpp"

namespace ctap::experiments {

namespace {

using control::PulseSchedule;
using dynamics::DensityState;
using dynamics::ObservableTargets;
using dynamics::PureState;
using dynamics::Trajectory;

std::string fmt(const char* pattern, double a) {
    char buf[96];
    std::snprintf(buf, sizeof buf, pattern, a);
    return buf;
}

std::string fmt(const char* pattern, double a, double b) {
    char buf[128];
    std::snprintf(buf, sizeof buf, pattern, a, b);
    return buf;
}

std::string fmt(const char* pattern, double a, double b, double c) {
    char buf[160];
    std::snprintf(buf, sizeof buf, pattern, a, b, c);
    return buf;
}

struct Outcome {
    bool passed = false;
    std::string measured;
    std::string expected;
};

// Shared runs, computed on first use so that filtered suites only pay for
// what they need and criterion 10 can audit everything the others ran.
class Scenarios {
public:
    explicit Scenarios(double dt_scale) : dt_scale_(dt_scale) {}

    IntegratorConfig integrator(double chi = 0.0, double rate = 0.0) const {
        IntegratorConfig c;
        c.dt = IntegratorConfig::default_dt(1.0, chi, rate) * dt_scale_;
        return c;
    }

    // Five-site transport of |origin> under one TLS block with chi_n = chi.
    const Trajectory& five_site(double chi, double dt_factor = 1.0) {
        const std::string key = "five:" + std::to_string(chi) + ":" + std::to_string(dt_factor);
        return cached(key, [&] {
            const PulseSchedule s = PulseSchedule::gaussian({0, 4}, 150.0);
            const tls::TlsBath bath = tls::TlsBath::uniform(5, chi);
            const auto diag = tls::block_diagonal({{-1, 1, 1, 1, 1}, 1.0}, bath);
            IntegratorConfig cfg = integrator(chi);
            cfg.dt *= dt_factor;
            return dynamics::evolve_pure(dynamics::model_hamiltonian(s, diag, 0, 5), PureState::site(5, 0),
                                         s.effective_window(), cfg, ObservableTargets{4, {}});
        });
    }

    const Trajectory& baseline(int dots, double duration) {
        return cached("base:" + std::to_string(dots), [&] {
            const PulseSchedule s = PulseSchedule::gaussian({0, dots - 1}, duration);
            return dynamics::evolve_pure(dynamics::model_hamiltonian(s, {}, 0, dots), PureState::site(dots, 0),
                                         s.effective_window(), integrator(), ObservableTargets{dots - 1, {}});
        });
    }

    static qpc::RailGeometry local_geometry() {
        qpc::RailGeometry g;
        g.profile = qpc::SensitivityProfile::local;
        g.alpha = 0.04;
        g.total_rate = g.n_sites;
        return g;
    }

    const Trajectory& three_site_measured() {
        return cached("lindblad3", [&] {
            const PulseSchedule s = PulseSchedule::gaussian({0, 2}, 150.0);
            const qpc::RailGeometry g = local_geometry();
            const dynamics::Dissipator d = dynamics::infinite_rail_dissipator(g, 0, 3);
            return dynamics::evolve_lindblad(dynamics::model_hamiltonian(s, {}, 0, 3), &d,
                                             DensityState::from_pure(PureState::site(3, 0)), s.effective_window(),
                                             integrator(0.0, g.rate_per_qpc()), ObservableTargets{2, {}});
        });
    }

    const Trajectory& oracle() {
        return cached("oracle", [&] {
            const tls::TlsBath bath{{0.3, 0.5, 0.7}, {0.0, 0.0, 0.0}};
            const DensityState rho0 = oracle_initial();
            return tls::joint_evolution_oracle(rho0, bath, nullptr, nullptr, {0.0, 10.0 * std::numbers::pi},
                                               integrator(0.7), ObservableTargets{{}, {{0, 1}}});
        });
    }

    static DensityState oracle_initial() {
        linalg::ComplexVector v(3);
        v << 1.0, linalg::Complex(0.0, 1.0), -1.0;
        v /= v.norm();
        return DensityState(v * v.adjoint());
    }

    // 3-site block-averaged transport; with `superposition` an uncoupled
    // spectator site precedes the section and the window is doubled.
    const Trajectory& purity_run(double chi, bool superposition) {
        return cached("purity:" + std::to_string(chi) + (superposition ? ":s" : ":o"), [&] {
            PulseSchedule s = PulseSchedule::gaussian({1, 3}, 150.0);
            const TimeWindow w = s.effective_window();
            const tls::TlsBath bath = tls::TlsBath::uniform(3, chi);
            if (!superposition)
                return dynamics::block_averaged_transport(s, bath, DensityState::from_pure(PureState::site(3, 0, 1)),
                                                          nullptr, integrator(chi), ObservableTargets{2, {}});
            s.window = TimeWindow{w.start, w.end + w.length()};
            PureState psi = PureState::site(4, 0, 0);
            psi.amplitudes(0) = psi.amplitudes(1) = 1.0 / std::sqrt(2.0);
            return dynamics::block_averaged_transport(s, bath, DensityState::from_pure(psi), nullptr, integrator(chi),
                                                      ObservableTargets{3, {{0, 3}}});
        });
    }

    std::vector<std::pair<std::string, const Trajectory*>> all() const {
        std::vector<std::pair<std::string, const Trajectory*>> out;
        for (const auto& [k, v] : runs_) out.emplace_back(k, &v);
        return out;
    }

private:
    template <class Make>
    const Trajectory& cached(const std::string& key, Make&& make) {
        auto it = runs_.find(key);
        if (it == runs_.end()) it = runs_.emplace(key, make()).first;
        return it->second;
    }

    double dt_scale_;
    std::map<std::string, Trajectory> runs_;
};

double final_population(const Trajectory& t, int site) {
    return t.final_observables().populations.at(static_cast<std::size_t>(site));
}

std::string pass_word(bool ok) { return ok ? "ok" : "FAIL"; }

Outcome criterion1(Scenarios& s) {
    const double p = s.five_site(0.0).final_observables().fidelity;
    return {std::abs(p - 0.9996) <= 5e-4, fmt("target population %.6f", p), "0.9996 +/- 5e-4"};
}

Outcome criterion2(Scenarios& s) {
    const double p = s.five_site(0.15).final_observables().fidelity;
    const tls::TlsBath bath = tls::TlsBath::uniform(5, 0.15);
    const auto diag = tls::block_diagonal({{-1, 1, 1, 1, 1}, 1.0}, bath);
    const PulseSchedule sched = PulseSchedule::gaussian({0, 4}, 150.0);
    const auto grid = control::uniform_grid(sched.effective_window(), 0.1);
    const control::Spectrum sp = control::track_spectrum(sched, diag, grid);
    std::vector<control::LevelGap> early;
    for (const auto& a : sp.anticrossings)
        if (a.time < 20.0) early.push_back(a);
    const bool one = early.size() == 1;
    const double gap = one ? early.front().gap : std::nan("");
    const double at = one ? early.front().time : std::nan("");
    const bool ok = std::abs(p - 0.975) <= 0.010 && one && gap >= 1e-4 && gap <= 4e-4;
    return {ok,
            fmt("transfer %.5f; ", p) + std::to_string(early.size()) + " anti-crossing(s) before t=20" +
                (one ? fmt(", gap %.3e at t=%.2f", gap, at) : ""),
            "transfer 0.975 +/- 0.010; one anti-crossing, gap in [1e-4, 4e-4], t < 20"};
}

Outcome criterion3(Scenarios& s) {
    const Trajectory& high = s.five_site(0.45);
    const double origin = final_population(high, 0);
    const double target45 = final_population(high, 4);
    const Trajectory& mid = s.five_site(0.3);
    const double target30 = final_population(mid, 4);
    double sum = 0.0, sum2 = 0.0;
    int n = 0;
    for (std::size_t i = 0; i < mid.times.size(); ++i) {
        if (mid.times[i] <= 20.0 || mid.times[i] >= 130.0) continue;
        const double p = mid.observables[i].populations[4];
        sum += p;
        sum2 += p * p;
        ++n;
    }
    const double mean = sum / n;
    const double sd = std::sqrt(std::max(0.0, sum2 / n - mean * mean));
    const bool ok = origin >= 0.90 && target45 <= 0.05 && target30 <= 0.90 && sd > 0.05;
    return {ok,
            fmt("chi=0.45: origin %.5f, target %.2e; ", origin, target45) +
                fmt("chi=0.3: target %.4f, std(20<t<130) %.4f", target30, sd),
            "chi=0.45: origin >= 0.90, target <= 0.05; chi=0.3: target <= 0.90, std > 0.05"};
}

Outcome criterion4(Scenarios& s) {
    const std::vector<std::pair<int, double>> cases{{3, 150}, {5, 196}, {7, 225}, {9, 242}, {11, 249}};
    bool ok = true;
    std::string measured = "loss";
    for (const auto& [dots, duration] : cases) {
        const double loss = 1.0 - s.baseline(dots, duration).final_observables().fidelity;
        ok = ok && loss >= 2.4e-5 / 2 && loss <= 2.4e-5 * 2;
        measured += fmt(" %.0f:%.2e", dots, loss);
    }
    return {ok, measured, "every loss in [1.2e-5, 4.8e-5]"};
}

Outcome criterion5() {
    const auto start = std::chrono::steady_clock::now();
    const std::vector<int> dots{3, 5, 7, 9, 11};
    const std::vector<double> durations{150, 196, 225, 242, 249};
    const std::vector<double> grid = log_grid(0.03, 30.0, 10);
    std::vector<std::vector<double>> loss(dots.size(), std::vector<double>(grid.size()));
    const auto flat = parallel_map(dots.size() * grid.size(), default_jobs(), [&](std::size_t i) {
        return sweep_point_loss(dots[i / grid.size()], durations[i / grid.size()], grid[i % grid.size()], 0.04, 0.01);
    });
    for (std::size_t i = 0; i < flat.size(); ++i) loss[i / grid.size()][i % grid.size()] = flat[i];
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    const double l11 = loss[4].front();
    const double l3 = loss[0].front();
    bool decreasing = true;
    std::string bad;
    for (std::size_t c = 1; c < dots.size(); ++c) {
        const double crossover = (dots[c] - 1) / 4.0;
        for (std::size_t g = 0; g + 1 < grid.size(); ++g)
            if (grid[g] > crossover && !(loss[c][g + 1] < loss[c][g])) {
                decreasing = false;
                bad += " " + std::to_string(dots[c]) + "@" + fmt("%.3g", grid[g]);
            }
    }
    const bool ok = std::abs(l11 / 1.1e-2 - 1.0) <= 0.20 && std::abs(l3 / 4e-3 - 1.0) <= 0.25 && decreasing &&
                    seconds < 120.0;
    return {ok,
            fmt("11 dots %.3e, 3 dots %.3e, sweep %.1f s; ", l11, l3, seconds) +
                (decreasing ? "decreasing past crossover" : "not decreasing at" + bad),
            "11 dots 1.1e-2 +/- 20%, 3 dots 4e-3 +/- 25%, decreasing for a/d > (n-m)/4, < 120 s"};
}

Outcome criterion6(Scenarios& s) {
    const PulseSchedule sched = PulseSchedule::gaussian({0, 2}, 150.0);
    const double first = dynamics::transfer_loss_firstorder(sched, Scenarios::local_geometry());
    const double unitary = s.baseline(3, 150.0).final_observables().fidelity;
    const double exact = unitary - s.three_site_measured().final_observables().fidelity;
    const double rel = std::abs(first - exact) / exact;
    return {rel <= 0.10, fmt("first-order %.5e, master equation %.5e, deviation %.2f%%", first, exact, 100 * rel),
            "relative deviation <= 10%"};
}

Outcome criterion7() {
    const double local = qpc::local_limit_rate(41, 41, 0.04);
    const bool a = std::abs(local - 3.9216e-4) <= 1e-8;

    qpc::RailGeometry g;
    g.total_rate = g.n_sites;
    const double sat = qpc::saturation_rate(g);
    double worst_b = 0.0;
    for (int sep = 10; sep <= 40; ++sep)
        worst_b = std::max(worst_b, std::abs(qpc::decoherence_rate_weak(0, sep, g) - sat) / sat);
    const bool b = worst_b < 0.01;

    double worst_c = 0.0;
    for (int sep = 1; sep <= 20; ++sep) {
        const double exact = qpc::decoherence_rate_exact(0, sep, g);
        const double weak = qpc::decoherence_rate_weak(0, sep, g);
        worst_c = std::max(worst_c, std::abs(exact - weak) / exact);
    }
    const bool c = worst_c < 0.05;
    return {a && b && c,
            fmt("(a) %.7e [", local) + pass_word(a) + fmt("]; (b) max deviation %.1f%% for 10 <= |k-l| <= 40 [", 100 * worst_b) +
                pass_word(b) + fmt("]; (c) max deviation %.2f%% [", 100 * worst_c) + pass_word(c) + "]",
            "(a) 3.9216e-4 +/- 1e-8; (b) < 1%; (c) < 5%"};
}

Outcome criterion8(Scenarios& s) {
    const tls::TlsBath bath{{0.3, 0.5, 0.7}, {0.0, 0.0, 0.0}};
    const DensityState rho0 = Scenarios::oracle_initial();
    const Trajectory& traj = s.oracle();
    const linalg::RealMatrix zero = linalg::RealMatrix::Zero(3, 3);
    double worst = 0.0;
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        if (traj.times[i] > 20.0 + 1e-9) break;
        const DensityState a = tls::analytic_dephasing(rho0, bath, zero, traj.times[i]);
        worst = std::max(worst, linalg::max_abs(a.matrix() - traj.density_states[i]));
    }
    const double revival = traj.final_observables().coherences[0] / std::abs(rho0.matrix()(0, 1));
    return {worst < 1e-6 && revival >= 0.99,
            fmt("max element error %.2e on [0, 20]; |rho_12| revival at t=%.4f: %.6f", worst, traj.times.back(), revival),
            "error < 1e-6; revival >= 0.99"};
}

Outcome criterion9(Scenarios& s) {
    const Trajectory& a = s.purity_run(0.05, false);
    double min_purity = 1.0;
    for (const auto& o : a.observables) min_purity = std::min(min_purity, o.purity);
    const double final_purity = a.final_observables().purity;
    const double target = a.final_observables().fidelity;
    const bool ok_a = min_purity < 0.98 && final_purity >= 0.99 && target >= 0.99;

    const Trajectory& b = s.purity_run(0.02, true);
    const double t_end = PulseSchedule::gaussian({1, 3}, 150.0).effective_window().end;
    double at_end = 1.0, later = 0.0;
    for (std::size_t i = 0; i < b.times.size(); ++i) {
        if (b.times[i] <= t_end + 1e-9) at_end = b.observables[i].purity;
        else later = std::max(later, b.observables[i].purity);
    }
    const bool ok_b = at_end <= 0.95 && later <= 0.95;
    return {ok_a && ok_b,
            fmt("(a) min purity %.4f, final purity %.5f, ", min_purity, final_purity) + fmt("target %.5f [", target) +
                pass_word(ok_a) + fmt("]; (b) final purity %.4f, max over extra window %.4f [", at_end, later) +
                pass_word(ok_b) + "]",
            "(a) min < 0.98, final >= 0.99, target >= 0.99; (b) final <= 0.95, no recovery above 0.95"};
}

Outcome criterion10(Scenarios& s) {
    // Make sure every run of the suite exists, then audit all of them.
    s.five_site(0.0);
    s.five_site(0.15);
    s.five_site(0.3);
    s.five_site(0.45);
    for (const auto& [dots, duration] : std::vector<std::pair<int, double>>{{3, 150}, {5, 196}, {7, 225}, {9, 242}, {11, 249}})
        s.baseline(dots, duration);
    s.three_site_measured();
    s.oracle();
    s.purity_run(0.05, false);
    s.purity_run(0.02, true);

    double drift = 0.0, herm = 0.0, min_eig = 1.0;
    for (const auto& [name, traj] : s.all()) {
        drift = std::max(drift, traj->diagnostics.max_norm_drift);
        herm = std::max(herm, traj->diagnostics.max_herm_err);
        min_eig = std::min(min_eig, traj->diagnostics.min_eigenvalue);
    }
    const double f1 = s.five_site(0.0).final_observables().fidelity;
    const double f2 = s.five_site(0.0, 0.5).final_observables().fidelity;
    const double f4 = s.five_site(0.0, 0.25).final_observables().fidelity;
    const double change = std::abs(f1 - f2);
    const double ratio = change / std::abs(f2 - f4);
    const bool ok = drift <= 1e-8 && herm <= 1e-10 && min_eig >= -1e-8 && change <= 1e-6;
    return {ok,
            fmt("trace drift %.2e, hermiticity %.2e, min eigenvalue %.2e; ", drift, herm, min_eig) +
                fmt("step halving %.2e (successive ratio %.1f)", change, ratio),
            "drift <= 1e-8, hermiticity <= 1e-10, eigenvalue >= -1e-8, halving <= 1e-6"};
}

Outcome criterion11() {
    double residual = 0.0, phase = 0.0;
    for (int span : {2, 4, 6, 8, 10}) {
        const PulseSchedule sched = PulseSchedule::gaussian({0, span}, 150.0);
        const TimeWindow w = sched.effective_window();
        for (double t : control::uniform_grid(w, 0.25)) {
            const auto h = control::rail_hamiltonian(t, sched);
            residual = std::max(residual, (h * control::normalized_dark_state(t, sched)).norm());
        }
        const control::Spectrum sp = control::track_spectrum(sched, {}, control::uniform_grid(w, 0.1));
        phase = std::max(phase, std::abs(control::dynamical_phase(sp, sp.transported_track)) / w.length());
    }
    return {residual <= 1e-12 && phase <= 1e-10,
            fmt("max |H psi_0| %.2e, max |phase|/window %.2e", residual, phase), "<= 1e-12 and <= 1e-10"};
}

struct Criterion {
    int id;
    const char* group;
    const char* title;
    std::function<Outcome(Scenarios&)> check;
};

const std::vector<Criterion>& criteria() {
    static const std::vector<Criterion> list{
        {1, "transport", "five-site transfer fidelity without TLSs", criterion1},
        {2, "transport", "chi=0.15 transfer and step-one anti-crossing", criterion2},
        {3, "transport", "return to origin at chi=0.45, oscillations at chi=0.3", criterion3},
        {4, "transport", "non-adiabatic baseline loss", criterion4},
        {5, "fig4", "transfer loss versus a/d sweep", [](Scenarios&) { return criterion5(); }},
        {6, "firstorder", "first-order loss against the master equation", criterion6},
        {7, "rates", "decoherence rate formulas", [](Scenarios&) { return criterion7(); }},
        {8, "oracle", "analytic TLS dephasing against joint-space evolution", criterion8},
        {9, "purity", "reduced-state purity during transport", criterion9},
        {10, "invariants", "integrator invariants and step halving", criterion10},
        {11, "darkstate", "dark-state residual and dynamical phase", [](Scenarios&) { return criterion11(); }},
    };
    return list;
}

}  // namespace

const std::vector<std::string>& acceptance_groups() {
    static const std::vector<std::string> groups{"transport", "fig4",   "firstorder", "rates",
                                                 "oracle",    "purity", "invariants", "darkstate"};
    return groups;
}

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options) {
    if (options.only) {
        const auto& g = acceptance_groups();
        const bool group = std::find(g.begin(), g.end(), *options.only) != g.end();
        const bool number = std::any_of(criteria().begin(), criteria().end(),
                                        [&](const Criterion& c) { return std::to_string(c.id) == *options.only; });
        if (!group && !number) throw std::invalid_argument("unknown criterion or group '" + *options.only + "'");
    }
    if (!(options.dt_scale > 0)) throw std::invalid_argument("dt scale must be > 0");

    Scenarios scenarios(options.dt_scale);
    std::vector<CriterionResult> out;
    for (const Criterion& c : criteria()) {
        if (options.only && *options.only != c.group && *options.only != std::to_string(c.id)) continue;
        CriterionResult r;
        r.id = c.id;
        r.group = c.group;
        r.title = c.title;
        const auto start = std::chrono::steady_clock::now();
        try {
            const Outcome o = c.check(scenarios);
            r.passed = o.passed;
            r.measured = o.measured;
            r.expected = o.expected;
        } catch (const std::exception& e) {
            r.passed = false;
            r.measured = std::string("error: ") + e.what();
        }
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        out.push_back(std::move(r));
    }
    return out;
}

bool print_report(const std::vector<CriterionResult>& results, std::ostream& out) {
    bool all = true;
    for (const auto& r : results) {
        all = all && r.passed;
        char head[64];
        std::snprintf(head, sizeof head, "[%s] %2d %-10s ", r.passed ? "PASS" : "FAIL", r.id, r.group.c_str());
        out << head << r.title << " | measured: " << r.measured;
        if (!r.expected.empty()) out << " | expected: " << r.expected;
        out << fmt(" | %.1f s", r.seconds) << "\n";
    }
    return all;
}

}  // namespace ctap::experiments
