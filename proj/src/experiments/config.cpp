#include "ctap/experiments/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace ctap::experiments {

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& message) {
    throw ConfigError(field + ": " + message);
}

void allow_keys(const Json& obj, const std::string& where, std::initializer_list<const char*> keys) {
    if (!obj.is_object()) fail(where, "expected an object");
    const std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& item : obj.items())
        if (!allowed.count(item.key())) fail(where + "." + item.key(), "unknown field");
}

template <class T>
T field(const Json& obj, const std::string& key, const std::string& where, T fallback) {
    const auto it = obj.find(key);
    if (it == obj.end()) return fallback;
    try {
        return it->get<T>();
    } catch (const nlohmann::json::exception&) {
        fail(where + "." + key, "has the wrong type (" + std::string(it->type_name()) + ")");
    }
}

Section section_field(const Json& obj, const std::string& key, const std::string& where, Section fallback) {
    const auto v = field<std::vector<int>>(obj, key, where, {fallback.first, fallback.last});
    if (v.size() != 2) fail(where + "." + key, "expected [first, last]");
    return {v[0], v[1]};
}

control::PulseSchedule parse_schedule(const Json& j) {
    const std::string where = "schedule";
    allow_keys(j, where, {"section", "shape", "T", "ramp", "hold", "omega_max", "window"});
    control::PulseSchedule s;
    s.section = section_field(j, "section", where, s.section);
    const auto shape = field<std::string>(j, "shape", where, "gaussian");
    if (shape == "gaussian")
        s.shape = control::PulseShape::gaussian;
    else if (shape == "three_step")
        s.shape = control::PulseShape::three_step;
    else
        fail(where + ".shape", "must be gaussian or three_step, got '" + shape + "'");
    s.duration = field<double>(j, "T", where, s.duration);
    s.ramp = field<double>(j, "ramp", where, s.ramp);
    s.hold = field<double>(j, "hold", where, s.hold);
    s.omega_max = field<double>(j, "omega_max", where, s.omega_max);
    if (j.contains("window")) {
        const auto w = field<std::vector<double>>(j, "window", where, {});
        if (w.size() != 2) fail(where + ".window", "expected [start, end]");
        s.window = TimeWindow{w[0], w[1]};
    }
    try {
        s.validate();
    } catch (const std::invalid_argument& e) {
        fail(where, e.what());
    }
    return s;
}

tls::TlsBath parse_bath(const Json& j, int sites, std::optional<std::vector<int>>& block) {
    const std::string where = "bath";
    allow_keys(j, where, {"couplings", "inversions", "chi", "omega", "block"});
    tls::TlsBath b;
    if (j.contains("chi") && j.contains("couplings")) fail(where, "give either chi or couplings, not both");
    if (j.contains("couplings")) {
        b.couplings = field<std::vector<double>>(j, "couplings", where, {});
    } else {
        b = tls::TlsBath::uniform(sites, field<double>(j, "chi", where, 0.0));
    }
    if (j.contains("inversions"))
        b.inversions = field<std::vector<double>>(j, "inversions", where, {});
    else
        b.inversions.assign(b.couplings.size(), field<double>(j, "omega", where, 0.0));
    if (b.size() != sites)
        fail(where + ".couplings", "has " + std::to_string(b.size()) + " entries for a " + std::to_string(sites) +
                                       "-site section");
    try {
        b.validate();
    } catch (const std::invalid_argument& e) {
        fail(where, e.what());
    }
    if (j.contains("block")) {
        block = field<std::vector<int>>(j, "block", where, {});
        if (static_cast<int>(block->size()) != sites) fail(where + ".block", "needs one sign per section site");
        for (int s : *block)
            if (s != 1 && s != -1) fail(where + ".block", "signs must be -1 or +1");
    }
    return b;
}

}  // namespace

qpc::RailGeometry geometry_from_json(const Json& j) {
    const std::string where = "geometry";
    allow_keys(j, where, {"n_sites", "spacing", "offset", "alpha", "total_rate", "tail_cutoff", "profile",
                          "section", "margin"});
    qpc::RailGeometry g;
    g.n_sites = field<int>(j, "n_sites", where, g.n_sites);
    g.spacing = field<double>(j, "spacing", where, g.spacing);
    g.offset = field<double>(j, "offset", where, g.offset);
    g.alpha = field<double>(j, "alpha", where, g.alpha);
    g.total_rate = field<double>(j, "total_rate", where, static_cast<double>(g.n_sites));
    g.tail_cutoff = field<double>(j, "tail_cutoff", where, g.tail_cutoff);
    const auto profile = field<std::string>(j, "profile", where, "coulomb");
    if (profile == "coulomb")
        g.profile = qpc::SensitivityProfile::coulomb;
    else if (profile == "local")
        g.profile = qpc::SensitivityProfile::local;
    else
        fail(where + ".profile", "must be coulomb or local, got '" + profile + "'");
    g.section = section_field(j, "section", where, {g.n_sites / 2 - 2, g.n_sites / 2 + 2});
    g.margin = field<int>(j, "margin", where, std::min(g.section.first, g.n_sites - 1 - g.section.last));
    try {
        g.validate();
    } catch (const InvalidGeometry& e) {
        fail(where, e.what());
    }
    return g;
}

const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names{"transport", "spectrum", "firstorder", "rates",
                                                "figure3",   "figure4",  "figure5"};
    return names;
}

double ExperimentConfig::effective_dt() const {
    if (dt_given) return integrator.dt;
    return IntegratorConfig::default_dt(schedule.omega_max, bath.max_coupling(),
                                        geometry ? geometry->rate_per_qpc() : 0.0);
}

std::string ExperimentConfig::hash() const { return fnv1a_hex(document.dump()); }

ExperimentConfig ExperimentConfig::from_json(const Json& doc) {
    allow_keys(doc, "config", {"experiment", "geometry", "bath", "schedule", "integrator", "sweep", "output",
                               "params"});
    ExperimentConfig c;
    c.document = doc;
    c.experiment = field<std::string>(doc, "experiment", "config", "");
    const auto& names = experiment_names();
    if (std::find(names.begin(), names.end(), c.experiment) == names.end())
        fail("experiment", "unknown experiment '" + c.experiment + "'");

    c.schedule = parse_schedule(doc.value("schedule", Json::object()));
    c.bath = parse_bath(doc.value("bath", Json::object()), c.schedule.sites(), c.block);
    if (doc.contains("geometry")) c.geometry = geometry_from_json(doc["geometry"]);

    const Json integ = doc.value("integrator", Json::object());
    allow_keys(integ, "integrator", {"dt", "renormalize", "method"});
    if (integ.contains("method") && integ["method"] != "rk4") fail("integrator.method", "only rk4 is available");
    c.dt_given = integ.contains("dt");
    c.integrator.dt = field<double>(integ, "dt", "integrator", c.integrator.dt);
    c.integrator.renormalize = field<bool>(integ, "renormalize", "integrator", false);
    if (!(c.integrator.dt > 0.0)) fail("integrator.dt", "must be > 0");
    c.integrator.dt = c.effective_dt();

    if (doc.contains("sweep")) {
        const Json& s = doc["sweep"];
        allow_keys(s, "sweep", {"parameter", "values"});
        SweepSpec spec;
        spec.parameter = field<std::string>(s, "parameter", "sweep", "");
        if (spec.parameter.empty()) fail("sweep.parameter", "is required");
        if (!s.contains("values") || !s["values"].is_array() || s["values"].empty())
            fail("sweep.values", "must be a non-empty list");
        spec.values.assign(s["values"].begin(), s["values"].end());
        c.sweep = std::move(spec);
    }

    const Json out = doc.value("output", Json::object());
    allow_keys(out, "output", {"directory", "formats"});
    c.output.directory = field<std::string>(out, "directory", "output", c.output.directory);
    const auto formats = field<std::vector<std::string>>(out, "formats", "output", {"csv"});
    c.output.csv = c.output.svg = false;
    for (const auto& f : formats) {
        if (f == "csv")
            c.output.csv = true;
        else if (f == "svg")
            c.output.svg = true;
        else
            fail("output.formats", "unknown format '" + f + "'");
    }
    c.params = doc.value("params", Json::object());
    if (!c.params.is_object()) fail("params", "expected an object");
    return c;
}

Json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

void set_path(Json& doc, const std::string& path, const Json& value) {
    Json* node = &doc;
    std::stringstream ss(path);
    std::string part;
    std::vector<std::string> parts;
    while (std::getline(ss, part, '.')) {
        if (part.empty()) throw ConfigError("bad field path '" + path + "'");
        parts.push_back(part);
    }
    if (parts.empty()) throw ConfigError("empty field path");
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
        Json& next = (*node)[parts[i]];
        if (next.is_null()) next = Json::object();
        if (!next.is_object()) throw ConfigError(path + ": '" + parts[i] + "' is not an object");
        node = &next;
    }
    (*node)[parts.back()] = value;
}

void apply_override(Json& doc, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not path=value");
    const std::string path = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    Json value = Json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;
    set_path(doc, path, value);
}

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace ctap::experiments
