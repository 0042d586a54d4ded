#include "ctap/experiments/experiments.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "ctap/control.hpp"
#include "ctap/dynamics.hpp"
#include "ctap/tls.hpp"

namespace ctap::experiments {

namespace {

using dynamics::DensityState;
using dynamics::ObservableTargets;
using dynamics::PureState;
using dynamics::Trajectory;

std::string site_column(const char* prefix, int site) { return prefix + std::to_string(site); }

std::string chi_label(double chi) { return "chi=" + format_number(chi); }

double param(const ExperimentConfig& c, const char* key, double fallback) {
    const auto it = c.params.find(key);
    if (it == c.params.end()) return fallback;
    if (!it->is_number()) throw ConfigError(std::string("params.") + key + ": expected a number");
    return it->get<double>();
}

template <class T>
std::vector<T> param_list(const ExperimentConfig& c, const char* key, std::vector<T> fallback) {
    const auto it = c.params.find(key);
    if (it == c.params.end()) return fallback;
    try {
        return it->get<std::vector<T>>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(std::string("params.") + key + ": expected a list");
    }
}

std::string param_string(const ExperimentConfig& c, const char* key, const std::string& fallback) {
    const auto it = c.params.find(key);
    if (it == c.params.end()) return fallback;
    if (!it->is_string()) throw ConfigError(std::string("params.") + key + ": expected a string");
    return it->get<std::string>();
}

void stamp_trajectory(ResultTable& t, const Trajectory& traj) {
    t.set_meta("dt", traj.dt);
    t.set_meta("steps", static_cast<double>(traj.steps));
    t.set_meta("max_norm_drift", traj.diagnostics.max_norm_drift);
    t.set_meta("max_hermiticity_error", traj.diagnostics.max_herm_err);
    t.set_meta("min_eigenvalue", traj.diagnostics.min_eigenvalue);
}

// Electron on the rail: optional spectator sites in front of the section,
// started on the origin site or in an equal superposition of the first
// spectator and the origin.
struct RailRun {
    control::PulseSchedule schedule;
    tls::TlsBath bath;
    std::optional<std::vector<int>> block;
    std::optional<qpc::RailGeometry> geometry;
    int spectators = 0;
    bool superposition = false;
    double extra_windows = 0.0;
    IntegratorConfig integrator;
};

RailRun rail_run(const ExperimentConfig& c) {
    RailRun r;
    r.schedule = c.schedule;
    r.bath = c.bath;
    r.block = c.block;
    r.geometry = c.geometry;
    r.spectators = static_cast<int>(param(c, "spectators", 0));
    const std::string initial = param_string(c, "initial", "origin");
    if (initial == "superposition")
        r.superposition = true;
    else if (initial != "origin")
        throw ConfigError("params.initial: must be origin or superposition");
    if (r.superposition && r.spectators < 1) throw ConfigError("params.initial: superposition needs a spectator site");
    if (r.spectators < 0) throw ConfigError("params.spectators: must be >= 0");
    r.extra_windows = param(c, "extra_windows", 0.0);
    if (r.extra_windows < 0) throw ConfigError("params.extra_windows: must be >= 0");
    r.integrator = c.integrator;
    return r;
}

Trajectory simulate(RailRun r, int jobs) {
    const int k = r.schedule.sites();
    const int dim = k + r.spectators;
    const int offset = r.schedule.section.first - r.spectators;
    if (r.extra_windows > 0) {
        const TimeWindow w = r.schedule.effective_window();
        r.schedule.window = TimeWindow{w.start, w.end + r.extra_windows * w.length()};
    }
    PureState psi = PureState::site(dim, r.spectators, offset);
    if (r.superposition) {
        psi.amplitudes(0) = 1.0 / std::sqrt(2.0);
        psi.amplitudes(r.spectators) = 1.0 / std::sqrt(2.0);
    }
    ObservableTargets targets;
    targets.target_site = dim - 1;
    const auto dissipator = r.geometry ? std::optional(dynamics::infinite_rail_dissipator(*r.geometry, offset, dim))
                                       : std::nullopt;
    const dynamics::Dissipator* diss = dissipator ? &*dissipator : nullptr;

    if (r.block) {
        tls::BlockConfig cfg{*r.block, 1.0};
        const auto h = dynamics::model_hamiltonian(r.schedule, tls::block_diagonal(cfg, r.bath), offset, dim);
        if (!diss) return dynamics::evolve_pure(h, psi, r.schedule.effective_window(), r.integrator, targets);
        return dynamics::evolve_lindblad(h, diss, DensityState::from_pure(psi), r.schedule.effective_window(),
                                         r.integrator, targets);
    }
    return dynamics::block_averaged_transport(r.schedule, r.bath, DensityState::from_pure(psi), diss, r.integrator,
                                              targets, jobs);
}

ResultTable population_table(const std::string& name, const Trajectory& traj, std::optional<double> chi = {}) {
    const int dim = static_cast<int>(traj.observables.front().populations.size());
    std::vector<std::string> cols;
    if (chi) cols.push_back("chi");
    cols.push_back("t");
    for (int i = 0; i < dim; ++i) cols.push_back(site_column("p", traj.basis_offset + i));
    cols.push_back("purity");
    ResultTable t(name, cols);
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        std::vector<double> row;
        if (chi) row.push_back(*chi);
        row.push_back(traj.times[i]);
        for (double p : traj.observables[i].populations) row.push_back(p);
        row.push_back(traj.observables[i].purity);
        t.add_row(std::move(row));
    }
    stamp_trajectory(t, traj);
    return t;
}

std::vector<double> diagonal_for(const ExperimentConfig& c, const tls::TlsBath& bath) {
    std::vector<int> signs = c.block.value_or(std::vector<int>(static_cast<std::size_t>(bath.size()), -1));
    return tls::block_diagonal({signs, 1.0}, bath);
}

ExperimentResult transport(const ExperimentConfig& c, int jobs) {
    const Trajectory traj = simulate(rail_run(c), jobs);
    ExperimentResult out;
    out.tables.push_back(population_table("populations", traj));

    double min_purity = 1.0;
    for (const auto& o : traj.observables) min_purity = std::min(min_purity, o.purity);
    const auto& last = traj.final_observables();
    const int spectators = static_cast<int>(param(c, "spectators", 0));
    ResultTable summary("summary", {"target_population", "origin_population", "final_purity", "min_purity",
                                    "max_norm_drift"});
    summary.add_row({last.fidelity, last.populations[static_cast<std::size_t>(spectators)], last.purity, min_purity,
                     traj.diagnostics.max_norm_drift});
    stamp_trajectory(summary, traj);
    out.tables.push_back(summary);

    Plot plot{"populations", "Site populations", "t", "population", false, false, {}, {}};
    for (std::size_t s = 0; s < last.populations.size(); ++s) {
        PlotSeries series{site_column("site ", traj.basis_offset + static_cast<int>(s)), traj.times, {}};
        for (const auto& o : traj.observables) series.y.push_back(o.populations[s]);
        plot.series.push_back(std::move(series));
    }
    PlotSeries purity{"purity", traj.times, {}};
    for (const auto& o : traj.observables) purity.y.push_back(o.purity);
    plot.series.push_back(std::move(purity));
    out.plots.push_back(std::move(plot));
    return out;
}

int gap_kind_code(control::GapKind k) {
    switch (k) {
        case control::GapKind::crossing_like: return 0;
        case control::GapKind::anti_crossing: return 1;
        case control::GapKind::well_separated: return 2;
    }
    return 2;
}

void spectrum_tables(const control::Spectrum& sp, std::optional<double> chi, ResultTable& levels,
                     ResultTable& crossings) {
    const control::AdiabaticityProfile prof = control::adiabaticity_profile(sp, sp.transported_track);
    for (std::size_t i = 0; i < sp.times.size(); ++i) {
        std::vector<double> row;
        if (chi) row.push_back(*chi);
        row.push_back(sp.times[i]);
        for (Eigen::Index j = 0; j < sp.sorted_energies[i].size(); ++j) row.push_back(sp.sorted_energies[i](j));
        row.push_back(sp.energies[i](sp.transported_track));
        row.push_back(prof.margin[i]);
        row.push_back(prof.ratio[i]);
        levels.add_row(std::move(row));
    }
    for (const auto& a : sp.anticrossings) {
        std::vector<double> row;
        if (chi) row.push_back(*chi);
        row.insert(row.end(), {static_cast<double>(a.lower), a.time, a.gap, static_cast<double>(gap_kind_code(a.kind))});
        crossings.add_row(std::move(row));
    }
}

std::vector<std::string> level_columns(int k, bool with_chi) {
    std::vector<std::string> cols;
    if (with_chi) cols.push_back("chi");
    cols.push_back("t");
    for (int j = 0; j < k; ++j) cols.push_back(site_column("e", j));
    cols.insert(cols.end(), {"e_transported", "adiabatic_margin", "adiabatic_ratio"});
    return cols;
}

std::vector<std::string> crossing_columns(bool with_chi) {
    std::vector<std::string> cols;
    if (with_chi) cols.push_back("chi");
    cols.insert(cols.end(), {"lower_level", "t", "gap", "kind"});
    return cols;
}

ExperimentResult spectrum(const ExperimentConfig& c, int) {
    const double step = param(c, "grid_step", 0.1);
    const std::vector<double> diag = diagonal_for(c, c.bath);
    const auto grid = control::uniform_grid(c.schedule.effective_window(), step);
    const control::Spectrum sp = control::track_spectrum(c.schedule, diag, grid);

    ExperimentResult out;
    ResultTable levels("spectrum", level_columns(c.schedule.sites(), false));
    ResultTable crossings("anticrossings", crossing_columns(false));
    crossings.set_meta("kind_codes", "0 crossing-like, 1 anti-crossing");
    spectrum_tables(sp, {}, levels, crossings);
    levels.set_meta("grid_step", step);

    const std::vector<std::vector<double>> blocks{diag};
    const control::CrossingCheck check = control::crossing_precondition(blocks, c.schedule.omega_max);
    ResultTable summary("spectrum_summary", {"outcome", "dynamical_phase", "ordering_margin", "continuity_flags"});
    summary.set_meta("outcome_codes", "0 transported, 1 return-to-origin, 2 other");
    summary.add_row({static_cast<double>(control::transport_outcome(sp)), control::dynamical_phase(sp, sp.transported_track),
                     check.margin, static_cast<double>(sp.flags.size())});
    out.tables = {levels, crossings, summary};

    Plot plot{"spectrum", "Instantaneous energies", "t", "energy", false, false, {}, {}};
    for (int j = 0; j < sp.levels(); ++j) {
        PlotSeries s{site_column("level ", j), sp.times, {}};
        for (const auto& e : sp.sorted_energies) s.y.push_back(e(j));
        plot.series.push_back(std::move(s));
    }
    out.plots.push_back(std::move(plot));
    return out;
}

ExperimentResult figure3(const ExperimentConfig& c, int jobs) {
    const std::vector<double> chis = param_list<double>(c, "chis", {0.0, 0.15, 0.3, 0.45});
    std::vector<int> block = c.block.value_or(std::vector<int>{-1, 1, 1, 1, 1});
    const int k = c.schedule.sites();
    if (static_cast<int>(block.size()) != k) throw ConfigError("bath.block: needs one sign per section site");
    const double step = param(c, "grid_step", 0.1);

    struct Point {
        control::Spectrum spectrum;
        Trajectory trajectory;
    };
    const auto points = parallel_map(chis.size(), jobs, [&](std::size_t i) {
        const tls::TlsBath bath = tls::TlsBath::uniform(k, chis[i]);
        const std::vector<double> diag = tls::block_diagonal({block, 1.0}, bath);
        const auto grid = control::uniform_grid(c.schedule.effective_window(), step);
        RailRun r;
        r.schedule = c.schedule;
        r.bath = bath;
        r.block = block;
        r.integrator = c.dt_given ? c.integrator
                                  : IntegratorConfig{IntegratorConfig::default_dt(c.schedule.omega_max, chis[i], 0.0)};
        return Point{control::track_spectrum(c.schedule, diag, grid), simulate(r, 1)};
    });

    ExperimentResult out;
    ResultTable levels("figure3_spectrum", level_columns(k, true));
    ResultTable crossings("figure3_anticrossings", crossing_columns(true));
    crossings.set_meta("kind_codes", "0 crossing-like, 1 anti-crossing");
    ResultTable pops("figure3_populations", {});
    Plot target{"figure3_populations", "Target population", "t", "population", false, false, {}, {}};
    for (std::size_t i = 0; i < chis.size(); ++i) {
        spectrum_tables(points[i].spectrum, chis[i], levels, crossings);
        ResultTable p = population_table("figure3_populations", points[i].trajectory, chis[i]);
        if (i == 0) pops = p;
        else pops.rows.insert(pops.rows.end(), p.rows.begin(), p.rows.end());
        PlotSeries s{chi_label(chis[i]), points[i].trajectory.times, {}};
        for (const auto& o : points[i].trajectory.observables) s.y.push_back(o.fidelity);
        target.series.push_back(std::move(s));

        Plot sp{"figure3_spectrum_" + std::to_string(i), "Energies, " + chi_label(chis[i]), "t", "energy", false, false,
                {}, {}};
        for (int j = 0; j < k; ++j) {
            PlotSeries e{site_column("level ", j), points[i].spectrum.times, {}};
            for (const auto& v : points[i].spectrum.sorted_energies) e.y.push_back(v(j));
            sp.series.push_back(std::move(e));
        }
        out.plots.push_back(std::move(sp));
    }
    levels.set_meta("grid_step", step);
    out.tables = {levels, crossings, pops};
    out.plots.push_back(std::move(target));
    return out;
}

ExperimentResult figure4(const ExperimentConfig& c, int jobs) {
    const std::vector<int> dots = param_list<int>(c, "dots", {3, 5, 7, 9, 11});
    const std::vector<double> durations = param_list<double>(c, "durations", {150, 196, 225, 242, 249});
    if (dots.size() != durations.size()) throw ConfigError("params.durations: needs one duration per dot count");
    const double alpha_ratio = param(c, "alpha_ratio", 0.04);
    const double step = param(c, "step", 0.01);
    const std::vector<double> grid =
        log_grid(param(c, "ad_min", 0.03), param(c, "ad_max", 30.0), static_cast<int>(param(c, "points_per_decade", 10)));

    const std::size_t cells = grid.size() * dots.size();
    const auto losses = parallel_map(cells, jobs, [&](std::size_t i) {
        const std::size_t curve = i / grid.size();
        return sweep_point_loss(dots[curve], durations[curve], grid[i % grid.size()], alpha_ratio, step);
    });

    std::vector<std::string> cols{"a_over_d"};
    for (int n : dots) cols.push_back("loss_" + std::to_string(n) + "dots");
    ResultTable table("figure4", cols);
    table.set_meta("alpha_over_a", alpha_ratio);
    table.set_meta("rate_per_qpc", 1.0);
    table.set_meta("step", step);
    for (std::size_t g = 0; g < grid.size(); ++g) {
        std::vector<double> row{grid[g]};
        for (std::size_t curve = 0; curve < dots.size(); ++curve) row.push_back(losses[curve * grid.size() + g]);
        table.add_row(std::move(row));
    }

    ResultTable cross("figure4_crossover", {"dots", "T", "crossover_a_over_d", "loss_at_crossover", "loss_local_end",
                                            "max_loss", "a_over_d_at_max"});
    Plot plot{"figure4", "Transfer loss", "a/d", "loss", true, true, {}, {}};
    for (std::size_t curve = 0; curve < dots.size(); ++curve) {
        const double crossover = (dots[curve] - 1) / 4.0;
        PlotSeries s{std::to_string(dots[curve]) + " dots", grid, {}};
        std::size_t peak = 0;
        for (std::size_t g = 0; g < grid.size(); ++g) {
            s.y.push_back(losses[curve * grid.size() + g]);
            if (s.y[g] > s.y[peak]) peak = g;
        }
        cross.add_row({static_cast<double>(dots[curve]), durations[curve], crossover,
                       sweep_point_loss(dots[curve], durations[curve], crossover, alpha_ratio, step), s.y.front(),
                       s.y[peak], grid[peak]});
        plot.series.push_back(std::move(s));
        plot.x_markers.push_back(crossover);
    }
    ExperimentResult out;
    out.tables = {table, cross};
    out.plots.push_back(std::move(plot));
    return out;
}

ExperimentResult figure5(const ExperimentConfig& c, int jobs) {
    struct Panel {
        int id;
        std::vector<double> chis;
        int spectators;
        bool superposition;
        double extra;
    };
    const std::vector<Panel> panels{
        {1, param_list<double>(c, "chis_a", {0.02, 0.05, 0.15}), 0, false, 0.0},
        {2, param_list<double>(c, "chis_b", {0.005, 0.02, 0.1}), 1, true, param(c, "extra_windows", 1.0)}};

    struct Job {
        std::size_t panel;
        double chi;
    };
    std::vector<Job> work;
    for (std::size_t p = 0; p < panels.size(); ++p)
        for (double chi : panels[p].chis) work.push_back({p, chi});

    const auto trajectories = parallel_map(work.size(), jobs, [&](std::size_t i) {
        const Panel& p = panels[work[i].panel];
        RailRun r;
        r.schedule = c.schedule;
        r.bath = tls::TlsBath::uniform(c.schedule.sites(), work[i].chi);
        r.spectators = p.spectators;
        r.superposition = p.superposition;
        r.extra_windows = p.extra;
        r.integrator = c.dt_given ? c.integrator
                                  : IntegratorConfig{IntegratorConfig::default_dt(c.schedule.omega_max, work[i].chi, 0.0)};
        return simulate(r, 1);
    });

    ExperimentResult out;
    ResultTable table("figure5", {"panel", "chi", "t", "purity", "target_population"});
    std::vector<Plot> plots;
    for (const Panel& p : panels)
        plots.push_back({"figure5_panel" + std::to_string(p.id),
                         p.superposition ? "Purity, superposition input" : "Purity, site input", "t", "purity", false,
                         false, {}, {}});
    for (std::size_t i = 0; i < work.size(); ++i) {
        const Trajectory& traj = trajectories[i];
        PlotSeries s{chi_label(work[i].chi), traj.times, {}};
        for (std::size_t j = 0; j < traj.times.size(); ++j) {
            table.add_row({static_cast<double>(panels[work[i].panel].id), work[i].chi, traj.times[j],
                           traj.observables[j].purity, traj.observables[j].fidelity});
            s.y.push_back(traj.observables[j].purity);
        }
        plots[work[i].panel].series.push_back(std::move(s));
    }
    out.tables.push_back(std::move(table));
    out.plots = std::move(plots);
    return out;
}

ExperimentResult rates(const ExperimentConfig& c, int) {
    ExperimentResult out;
    out.tables.push_back(rates_table(c.geometry.value_or(qpc::RailGeometry{}),
                                     static_cast<int>(param(c, "max_separation", 30))));
    return out;
}

ExperimentResult firstorder(const ExperimentConfig& c, int) {
    const qpc::RailGeometry g = c.geometry.value_or(qpc::RailGeometry{});
    dynamics::FirstOrderOptions options;
    options.step = param(c, "step", 0.01);
    options.use_tracked_eigenstate = param_string(c, "eigenstate", "dark") == "tracked";
    if (options.use_tracked_eigenstate) options.block_diagonal = diagonal_for(c, c.bath);
    const int spectator = static_cast<int>(param(c, "spectator_site", c.schedule.section.first - 1));

    const double loss = dynamics::transfer_loss_firstorder(c.schedule, g, options);
    const double retention = dynamics::coherence_loss_firstorder(spectator, c.schedule, g, options);
    double lindblad = std::nan("");
    if (c.params.value("compare_lindblad", false)) {
        RailRun r;
        r.schedule = c.schedule;
        r.bath = tls::TlsBath::uniform(c.schedule.sites(), 0.0);
        r.block = std::vector<int>(static_cast<std::size_t>(c.schedule.sites()), -1);
        r.integrator = c.integrator;
        const double unitary = simulate(r, 1).final_observables().fidelity;
        r.geometry = g;
        lindblad = unitary - simulate(r, 1).final_observables().fidelity;
    }
    ExperimentResult out;
    ResultTable t("firstorder", {"transfer_loss", "coherence_retention", "spectator_site", "lindblad_loss"});
    t.add_row({loss, retention, static_cast<double>(spectator), lindblad});
    t.set_meta("step", options.step);
    out.tables.push_back(std::move(t));
    return out;
}

std::string sweep_label(const Json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

}  // namespace

const ResultTable& ExperimentResult::table(const std::string& name) const {
    for (const auto& t : tables)
        if (t.name == name) return t;
    throw std::out_of_range("no table named '" + name + "'");
}

int default_jobs() {
    if (const char* env = std::getenv("CTAP_SIM_JOBS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    return std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
}

std::vector<double> log_grid(double lo, double hi, int per_decade) {
    if (!(lo > 0 && hi > lo && per_decade > 0)) throw std::invalid_argument("log_grid needs 0 < lo < hi and per_decade > 0");
    const double decades = std::log10(hi / lo);
    const int n = static_cast<int>(std::lround(decades * per_decade));
    std::vector<double> out(static_cast<std::size_t>(n + 1));
    for (int i = 0; i <= n; ++i) out[static_cast<std::size_t>(i)] = lo * std::pow(hi / lo, static_cast<double>(i) / n);
    return out;
}

double sweep_point_loss(int dots, double duration, double a_over_d, double alpha_ratio, double step) {
    qpc::RailGeometry g;
    g.spacing = 1.0;
    g.offset = a_over_d;
    g.alpha = alpha_ratio * a_over_d;
    g.n_sites = 2 * dots + 1;
    g.total_rate = g.n_sites;
    g.section = {dots / 2 + 1, dots / 2 + dots};
    g.margin = dots / 2 + 1;
    const control::PulseSchedule sched = control::PulseSchedule::gaussian({0, dots - 1}, duration);
    dynamics::FirstOrderOptions options;
    options.step = step;
    return dynamics::transfer_loss_firstorder(sched, g, options);
}

ResultTable rates_table(const qpc::RailGeometry& g, int max_separation) {
    g.validate();
    ResultTable t("rates", {"separation", "exact", "weak", "saturation", "local_limit", "exact_radius", "weak_radius"});
    const double saturation = qpc::saturation_rate(g);
    const double local = qpc::local_limit_rate(g.total_rate, g.n_sites, g.alpha);
    for (int s = 0; s <= max_separation; ++s) {
        const qpc::RailSum exact = qpc::decoherence_rate_exact_sum(0, s, g);
        const qpc::RailSum weak = qpc::decoherence_rate_weak_sum(0, s, g);
        t.add_row({static_cast<double>(s), exact.value, weak.value, saturation, local,
                   static_cast<double>(exact.radius), static_cast<double>(weak.radius)});
    }
    t.set_meta("profile", g.profile == qpc::SensitivityProfile::local ? "local" : "coulomb");
    t.set_meta("spacing", g.spacing);
    t.set_meta("offset", g.offset);
    t.set_meta("alpha", g.alpha);
    t.set_meta("rate_per_qpc", g.rate_per_qpc());
    t.set_meta("tail_cutoff", g.tail_cutoff);
    return t;
}

ExperimentResult run_experiment(const ExperimentConfig& c, int jobs) {
    try {
        if (c.experiment == "transport") return transport(c, jobs);
        if (c.experiment == "spectrum") return spectrum(c, jobs);
        if (c.experiment == "figure3") return figure3(c, jobs);
        if (c.experiment == "figure4") return figure4(c, jobs);
        if (c.experiment == "figure5") return figure5(c, jobs);
        if (c.experiment == "rates") return rates(c, jobs);
        if (c.experiment == "firstorder") return firstorder(c, jobs);
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw std::runtime_error("experiment '" + c.experiment + "': " + e.what());
    }
    throw ConfigError("experiment: unknown experiment '" + c.experiment + "'");
}

RunSummary run(const ExperimentConfig& cfg, const RunOptions& options) {
    const auto start = std::chrono::steady_clock::now();
    const int jobs = options.jobs > 0 ? options.jobs : default_jobs();
    RunSummary summary;

    if (!cfg.sweep) {
        summary.result = run_experiment(cfg, jobs);
    } else {
        std::vector<ExperimentConfig> points;
        for (const Json& v : cfg.sweep->values) {
            Json doc = cfg.document;
            doc.erase("sweep");
            set_path(doc, cfg.sweep->parameter, v);
            points.push_back(ExperimentConfig::from_json(doc));
        }
        const auto results =
            parallel_map(points.size(), jobs, [&](std::size_t i) { return run_experiment(points[i], 1); });
        for (std::size_t i = 0; i < results.size(); ++i) {
            const Json& v = cfg.sweep->values[i];
            const double key = v.is_number() ? v.get<double>() : static_cast<double>(i);
            for (const ResultTable& t : results[i].tables) {
                auto it = std::find_if(summary.result.tables.begin(), summary.result.tables.end(),
                                       [&](const ResultTable& s) { return s.name == t.name; });
                if (it == summary.result.tables.end()) {
                    std::vector<std::string> cols{"sweep_value"};
                    cols.insert(cols.end(), t.columns.begin(), t.columns.end());
                    summary.result.tables.emplace_back(t.name, cols);
                    it = summary.result.tables.end() - 1;
                    it->metadata = t.metadata;
                    it->set_meta("sweep_parameter", cfg.sweep->parameter);
                }
                it->set_meta("sweep_point_" + std::to_string(i), sweep_label(v) + " (" + points[i].hash() + ")");
                for (const auto& row : t.rows) {
                    std::vector<double> r{key};
                    r.insert(r.end(), row.begin(), row.end());
                    it->add_row(std::move(r));
                }
            }
        }
    }

    for (ResultTable& t : summary.result.tables) {
        t.set_meta("experiment", cfg.experiment);
        t.set_meta("config_hash", cfg.hash());
        if (std::none_of(t.metadata.begin(), t.metadata.end(), [](const auto& m) { return m.first == "dt"; }))
            t.set_meta("dt", cfg.integrator.dt);
    }
    summary.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!options.write_files) return summary;

    const std::filesystem::path dir = options.directory.value_or(cfg.output.directory);
    std::filesystem::create_directories(dir);
    if (cfg.output.csv)
        for (const ResultTable& t : summary.result.tables) {
            const auto path = (dir / (t.name + ".csv")).string();
            t.write_csv(path);
            summary.files.push_back(path);
        }
    if (cfg.output.svg)
        for (const Plot& p : summary.result.plots) {
            std::string svg = p.to_svg();
            svg.insert(svg.find('\n') + 1, "<!-- config_hash: " + cfg.hash() + " -->\n");
            const auto path = (dir / (p.name + ".svg")).string();
            std::ofstream(path, std::ios::binary) << svg;
            summary.files.push_back(path);
        }
    Json info{{"experiment", cfg.experiment},
              {"config_hash", cfg.hash()},
              {"config", cfg.document},
              {"jobs", jobs},
              {"wall_seconds", summary.seconds},
              {"files", summary.files}};
    const auto info_path = (dir / "run_info.json").string();
    std::ofstream(info_path) << info.dump(2) << "\n";
    summary.files.push_back(info_path);
    return summary;
}

}  // namespace ctap::experiments
