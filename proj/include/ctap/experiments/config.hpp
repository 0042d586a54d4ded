#pragma once

// Experiment configuration: one JSON document per experiment.
//
// {
//   "experiment": "transport",
//   "geometry":   {"n_sites", "spacing", "offset", "alpha", "total_rate",
//                  "tail_cutoff", "profile": "coulomb"|"local", "section", "margin"},
//   "bath":       {"couplings": [...], "inversions": [...]} or {"chi", "omega"},
//                 optional "block": [-1, 1, ...] to select one Hamiltonian block,
//   "schedule":   {"section": [m, n], "shape": "gaussian"|"three_step", "T",
//                  "ramp", "hold", "omega_max", "window": [t0, t1]},
//   "integrator": {"dt", "renormalize"},
//   "sweep":      {"parameter": "bath.chi", "values": [...]},
//   "output":     {"directory", "formats": ["csv", "svg"]},
//   "params":     {experiment-specific extras}
// }

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ctap/control.hpp"
#include "ctap/integrator.hpp"
#include "ctap/qpc.hpp"
#include "ctap/tls.hpp"

namespace ctap::experiments {

using Json = nlohmann::json;

struct SweepSpec {
    std::string parameter;
    std::vector<Json> values;
};

struct OutputSpec {
    std::string directory = "out";
    bool csv = true;
    bool svg = false;
};

struct ExperimentConfig {
    std::string experiment;
    control::PulseSchedule schedule;
    tls::TlsBath bath;                 // over the schedule section
    std::optional<std::vector<int>> block;
    std::optional<qpc::RailGeometry> geometry;  // absent: no measurement
    IntegratorConfig integrator;
    bool dt_given = false;
    std::optional<SweepSpec> sweep;
    OutputSpec output;
    Json params = Json::object();
    Json document;  // the validated source, used for hashing and sweeps

    /// Default dt from the fastest scale when none was given.
    double effective_dt() const;

    /// FNV-1a 64 of the canonical document, as 16 hex digits.
    std::string hash() const;

    /// Throws ConfigError naming the offending field.
    static ExperimentConfig from_json(const Json& doc);
};

/// Known experiment names.
const std::vector<std::string>& experiment_names();

Json load_json_file(const std::string& path);

/// Applies "a.b.c=value" to the document. The value is parsed as JSON when
/// possible and taken as a string otherwise.
void apply_override(Json& doc, const std::string& assignment);

/// Sets the value at a dotted path, creating objects as needed.
void set_path(Json& doc, const std::string& path, const Json& value);

std::string fnv1a_hex(const std::string& bytes);

qpc::RailGeometry geometry_from_json(const Json& j);

}  // namespace ctap::experiments
