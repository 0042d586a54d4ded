#pragma once

// Canned experiments and the sweep/run driver behind `ctap-sim run`.

#include <algorithm>
#include <atomic>
#include <exception>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "ctap/experiments/config.hpp"
#include "ctap/experiments/table.hpp"

namespace ctap::experiments {

struct ExperimentResult {
    std::vector<ResultTable> tables;
    std::vector<Plot> plots;

    const ResultTable& table(const std::string& name) const;
};

/// CTAP_SIM_JOBS when set and positive, else the hardware thread count.
int default_jobs();

/// Evaluates fn(0..n-1) on up to `jobs` threads; results keep input order.
/// The first exception (by index) is rethrown.
template <class Fn>
auto parallel_map(std::size_t n, int jobs, Fn&& fn) -> std::vector<decltype(fn(std::size_t{}))> {
    using R = decltype(fn(std::size_t{}));
    std::vector<std::optional<R>> slots(n);
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                slots[i].emplace(fn(i));
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t threads = std::clamp<std::size_t>(jobs > 0 ? static_cast<std::size_t>(jobs) : 1, 1,
                                                        std::max<std::size_t>(n, 1));
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    std::vector<R> out;
    out.reserve(n);
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

/// One experiment without sweep or file output. `jobs` bounds inner
/// parallelism (blocks, grid points).
ExperimentResult run_experiment(const ExperimentConfig& cfg, int jobs = 1);

struct RunOptions {
    int jobs = 0;                          // <= 0: default_jobs()
    std::optional<std::string> directory;  // overrides output.directory
    bool write_files = true;
};

struct RunSummary {
    ExperimentResult result;
    std::vector<std::string> files;
    double seconds = 0.0;
};

/// Full run: expands the sweep (points in parallel, gathered in input
/// order), stamps metadata and writes CSV/SVG plus run_info.json.
RunSummary run(const ExperimentConfig& cfg, const RunOptions& options = {});

/// T_kl against site separation: exact, weak, saturation and local-limit.
ResultTable rates_table(const qpc::RailGeometry& g, int max_separation);

/// `per_decade` log-spaced points from lo to hi inclusive.
std::vector<double> log_grid(double lo, double hi, int per_decade);

/// First-order transfer loss for one point of the loss-vs-(a/d) sweep:
/// gaussian pulses over `dots` sites, d = 1, a = a_over_d, alpha =
/// alpha_ratio * a, unit rate per QPC.
double sweep_point_loss(int dots, double duration, double a_over_d, double alpha_ratio, double step);

}  // namespace ctap::experiments
