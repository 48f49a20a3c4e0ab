#include "flock/config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

namespace flock {

using nlohmann::json;

ConfigError::ConfigError(Kind kind, std::string field, const std::string& message)
    : Error([&] {
          const char* prefix = kind == Kind::Parse ? "parse error" : kind == Kind::Schema ? "schema error" : "invalid";
          return std::string(prefix) + (field.empty() ? "" : " in '" + field + "'") + ": " + message;
      }()),
      kind_(kind),
      field_(std::move(field)) {}

namespace {

[[noreturn]] void schema_fail(const std::string& field, const std::string& message) {
    throw ConfigError(ConfigError::Kind::Schema, field, message);
}

const json& require(const json& obj, const char* key, const std::string& path) {
    if (!obj.is_object()) { schema_fail(path, "expected an object"); }
    const auto it = obj.find(key);
    if (it == obj.end()) { schema_fail(path.empty() ? key : path + "." + key, "required field is missing"); }
    return *it;
}

std::string join(const std::string& path, const char* key) { return path.empty() ? key : path + "." + key; }

double as_number(const json& v, const std::string& field) {
    if (!v.is_number()) { schema_fail(field, "expected a number"); }
    return v.get<double>();
}

long long as_integer(const json& v, const std::string& field) {
    if (!v.is_number_integer()) { schema_fail(field, "expected an integer"); }
    return v.get<long long>();
}

double number_or(const json& obj, const char* key, const std::string& path, double fallback) {
    const auto it = obj.find(key);
    return it == obj.end() ? fallback : as_number(*it, join(path, key));
}

bool bool_or(const json& obj, const char* key, const std::string& path, bool fallback) {
    const auto it = obj.find(key);
    if (it == obj.end()) { return fallback; }
    if (!it->is_boolean()) { schema_fail(join(path, key), "expected true or false"); }
    return it->get<bool>();
}

Eigen::VectorXd as_vector(const json& v, const std::string& field) {
    if (!v.is_array()) { schema_fail(field, "expected an array of numbers"); }
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
        out(static_cast<Eigen::Index>(i)) = as_number(v[i], field + "[" + std::to_string(i) + "]");
    }
    return out;
}

json vector_json(const Eigen::VectorXd& x) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < x.size(); ++i) { arr.push_back(x(i)); }
    return arr;
}

StackedVector as_stacked(const json& v, int n, int d, const std::string& field) {
    if (!v.is_array() || static_cast<int>(v.size()) != n) {
        schema_fail(field, "expected " + std::to_string(n) + " vectors");
    }
    StackedVector out(d, n);
    for (int i = 0; i < n; ++i) {
        const Eigen::VectorXd b = as_vector(v[static_cast<std::size_t>(i)], field + "[" + std::to_string(i) + "]");
        if (b.size() != d) { schema_fail(field + "[" + std::to_string(i) + "]", "expected " + std::to_string(d) + " entries"); }
        out.block(i) = b;
    }
    return out;
}

json stacked_json(const StackedVector& s) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < s.block_count(); ++i) { arr.push_back(vector_json(s.block(i))); }
    return arr;
}

constexpr const char* kAxisNames[] = {"x", "y", "z"};

int axis_index(const json& v, int d, const std::string& field) {
    if (v.is_string()) {
        const std::string s = v.get<std::string>();
        for (int a = 0; a < d; ++a) {
            if (s == kAxisNames[a]) { return a; }
        }
        schema_fail(field, "unknown axis '" + s + "'");
    }
    const auto idx = as_integer(v, field);
    if (idx < 0 || idx >= d) { schema_fail(field, "axis index out of range"); }
    return static_cast<int>(idx);
}

ForceField parse_forces(const json& v, int n, int d, const std::string& field) {
    ForceField out(n, d);
    if (v.is_null()) { return out; }
    if (!v.is_array()) { schema_fail(field, "expected an array of per-agent force entries"); }
    for (std::size_t k = 0; k < v.size(); ++k) {
        const std::string at = field + "[" + std::to_string(k) + "]";
        const auto agent = as_integer(require(v[k], "agent", at), at + ".agent");
        if (agent < 1 || agent > n) { throw ConfigError(ConfigError::Kind::Invariant, at + ".agent", "agent index out of range"); }
        const json& comps = require(v[k], "force", at);
        if (!comps.is_array() || static_cast<int>(comps.size()) != d) {
            schema_fail(at + ".force", "expected " + std::to_string(d) + " component term lists");
        }
        for (int c = 0; c < d; ++c) {
            const json& terms = comps[static_cast<std::size_t>(c)];
            const std::string cat = at + ".force[" + std::to_string(c) + "]";
            if (!terms.is_array()) { schema_fail(cat, "expected an array of terms"); }
            for (std::size_t t = 0; t < terms.size(); ++t) {
                const std::string tat = cat + "[" + std::to_string(t) + "]";
                ForceTerm term;
                term.amplitude = as_number(require(terms[t], "amplitude", tat), tat + ".amplitude");
                const json& trig = require(terms[t], "trig", tat);
                const std::string name = trig.is_string() ? trig.get<std::string>() : "";
                if (name == "sin") {
                    term.trig = Trig::Sin;
                } else if (name == "cos") {
                    term.trig = Trig::Cos;
                } else if (name == "const") {
                    term.trig = Trig::Const;
                } else {
                    schema_fail(tat + ".trig", "expected \"sin\", \"cos\" or \"const\"");
                }
                term.frequency = number_or(terms[t], "frequency", tat, 0.0);
                const auto in = terms[t].find("input");
                term.input = in == terms[t].end() ? 0 : axis_index(*in, d, tat + ".input");
                try {
                    out.add_term(static_cast<int>(agent - 1), c, term);
                } catch (const Error& e) {
                    throw ConfigError(ConfigError::Kind::Invariant, tat, e.what());
                }
            }
        }
    }
    return out;
}

json forces_json(const ForceField& f) {
    json arr = json::array();
    for (int i = 0; i < f.agent_count(); ++i) {
        bool any = false;
        json comps = json::array();
        for (int c = 0; c < f.dimension(); ++c) {
            json terms = json::array();
            for (const auto& t : f.terms(i, c)) {
                any = true;
                const char* trig = t.trig == Trig::Sin ? "sin" : t.trig == Trig::Cos ? "cos" : "const";
                terms.push_back(json{{"amplitude", t.amplitude},
                                     {"trig", trig},
                                     {"frequency", t.frequency},
                                     {"input", kAxisNames[t.input]}});
            }
            comps.push_back(std::move(terms));
        }
        if (any) { arr.push_back(json{{"agent", i + 1}, {"force", std::move(comps)}}); }
    }
    return arr;
}

template <class F>
auto invariant(const std::string& field, F&& f) {
    try {
        return f();
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(ConfigError::Kind::Invariant, field, e.what());
    }
}

}  // namespace

ScenarioConfig config_from_json(const json& doc) {
    if (!doc.is_object()) { schema_fail("", "top level must be an object"); }
    const auto version = as_integer(require(doc, "schema_version", ""), "schema_version");
    if (version != kConfigSchemaVersion) {
        schema_fail("schema_version", "unsupported version " + std::to_string(version));
    }

    const json& fwj = require(doc, "framework", "");
    const auto n = static_cast<int>(as_integer(require(fwj, "n", "framework"), "framework.n"));
    const auto d = static_cast<int>(as_integer(require(fwj, "d", "framework"), "framework.d"));
    const json& edges_j = require(fwj, "edges", "framework");
    if (!edges_j.is_array()) { schema_fail("framework.edges", "expected an array of [tail, head] pairs"); }
    std::vector<Edge> edges;
    for (std::size_t k = 0; k < edges_j.size(); ++k) {
        const std::string at = "framework.edges[" + std::to_string(k) + "]";
        if (!edges_j[k].is_array() || edges_j[k].size() != 2) { schema_fail(at, "expected [tail, head]"); }
        edges.push_back({static_cast<int>(as_integer(edges_j[k][0], at)) - 1,
                         static_cast<int>(as_integer(edges_j[k][1], at)) - 1});
    }
    const Eigen::VectorXd lengths = as_vector(require(fwj, "desired_lengths", "framework"), "framework.desired_lengths");
    Framework fw = invariant("framework", [&] {
        return Framework(n, d, edges, std::vector<double>(lengths.data(), lengths.data() + lengths.size()));
    });

    const json& init = require(doc, "initial", "");
    StackedVector q0 = as_stacked(require(init, "q", "initial"), n, d, "initial.q");
    StackedVector v0 = init.contains("v") ? as_stacked(init["v"], n, d, "initial.v") : StackedVector(d, n);

    ScenarioConfig cfg{.name = doc.value("name", std::string("custom")),
                       .framework = std::move(fw),
                       .q0 = std::move(q0),
                       .v0 = std::move(v0),
                       .disturbance = parse_forces(doc.contains("disturbances") ? doc["disturbances"] : json(),
                                                   n, d, "disturbances"),
                       .control = {},
                       .gp = {},
                       .sim = {},
                       .bound = {}};

    const json ctrl = doc.value("control", json::object());
    const std::string mode = ctrl.value("mode", std::string("learning"));
    if (mode == "nominal") {
        cfg.control.mode = ControlMode::Nominal;
    } else if (mode == "learning") {
        cfg.control.mode = ControlMode::Learning;
    } else {
        schema_fail("control.mode", "expected \"nominal\" or \"learning\"");
    }
    cfg.control.gains.align = number_or(ctrl, "k_align", "control", 1.0);
    cfg.control.gains.shape = number_or(ctrl, "k_shape", "control", 1.0);
    cfg.control.prior = ctrl.contains("prior") ? parse_forces(ctrl["prior"], n, d, "control.prior") : ForceField();
    if (cfg.control.prior.agent_count() > 0 && cfg.control.prior.is_zero()) { cfg.control.prior = ForceField(); }

    const json gp = doc.value("gp", json::object());
    cfg.gp.kernel = KernelParams::isotropic(2 * d);
    if (gp.contains("lengthscales")) { cfg.gp.kernel.lengthscales = as_vector(gp["lengthscales"], "gp.lengthscales"); }
    cfg.gp.kernel.signal_variance = number_or(gp, "signal_variance", "gp", cfg.gp.kernel.signal_variance);
    cfg.gp.kernel.noise_variance = number_or(gp, "noise_variance", "gp", cfg.gp.kernel.noise_variance);
    cfg.gp.fit_hyperparameters = bool_or(gp, "fit_hyperparameters", "gp", false);

    const json sim = doc.value("sim", json::object());
    cfg.sim.dt = number_or(sim, "dt", "sim", cfg.sim.dt);
    cfg.sim.t_end = number_or(sim, "t_end", "sim", cfg.sim.t_end);
    cfg.sim.sample_interval = number_or(sim, "sample_interval", "sim", 10.0 * cfg.sim.dt);
    cfg.sim.freeze_time = number_or(sim, "freeze_time", "sim", 0.5 * cfg.sim.t_end);
    cfg.sim.accel_noise_sigma = number_or(sim, "accel_noise_sigma", "sim", 0.0);
    if (sim.contains("seed")) {
        if (!sim["seed"].is_number_unsigned() && !(sim["seed"].is_number_integer() && sim["seed"].get<long long>() >= 0)) {
            schema_fail("sim.seed", "expected a non-negative integer");
        }
        cfg.sim.seed = sim["seed"].get<std::uint64_t>();
    }
    cfg.sim.record_every = static_cast<int>(sim.contains("record_every") ? as_integer(sim["record_every"], "sim.record_every") : 1);
    if (sim.contains("max_samples") && !sim["max_samples"].is_null()) {
        cfg.sim.max_samples = static_cast<int>(as_integer(sim["max_samples"], "sim.max_samples"));
    }

    const json bound = doc.value("bound", json::object());
    cfg.bound.epsilon = number_or(bound, "epsilon", "bound", cfg.bound.epsilon);
    if (bound.contains("rkhs_bounds")) {
        const json& r = bound["rkhs_bounds"];
        if (r.is_string()) {
            if (r.get<std::string>() != "surrogate") { schema_fail("bound.rkhs_bounds", "expected \"surrogate\" or an array"); }
        } else {
            cfg.bound.rkhs_bounds = as_vector(r, "bound.rkhs_bounds");
        }
    }
    cfg.bound.surrogate_safety_factor = number_or(bound, "surrogate_safety_factor", "bound", 2.0);
    if (bound.contains("omega")) {
        const json& o = bound["omega"];
        if (o.is_string()) {
            if (o.get<std::string>() != "auto") { schema_fail("bound.omega", "expected \"auto\" or {lower, upper}"); }
        } else {
            cfg.bound.omega = Box{as_vector(require(o, "lower", "bound.omega"), "bound.omega.lower"),
                                  as_vector(require(o, "upper", "bound.omega"), "bound.omega.upper")};
        }
    }
    cfg.bound.omega_inflation = number_or(bound, "omega_inflation", "bound", 0.2);
    cfg.bound.grid_points_per_axis = static_cast<int>(
        bound.contains("grid_points_per_axis") ? as_integer(bound["grid_points_per_axis"], "bound.grid_points_per_axis") : 5);
    cfg.bound.max_cells = number_or(bound, "max_cells", "bound", 1e6);

    invariant("", [&] {
        cfg.validate();
        return 0;
    });
    return cfg;
}

ScenarioConfig parse_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) { throw ConfigError(ConfigError::Kind::Parse, "", "cannot open " + path.string()); }
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(ConfigError::Kind::Parse, "", e.what());
    }
    return config_from_json(doc);
}

json config_to_json(const ScenarioConfig& cfg) {
    const Framework& fw = cfg.framework;
    json edges = json::array();
    for (const auto& e : fw.edges()) { edges.push_back({e.tail + 1, e.head + 1}); }
    json doc;
    doc["schema_version"] = kConfigSchemaVersion;
    doc["name"] = cfg.name;
    doc["framework"] = {{"n", fw.agent_count()},
                        {"d", fw.dimension()},
                        {"edges", edges},
                        {"desired_lengths", fw.desired_lengths()}};
    doc["initial"] = {{"q", stacked_json(cfg.q0)}, {"v", stacked_json(cfg.v0)}};
    doc["disturbances"] = forces_json(cfg.disturbance);
    doc["control"] = {{"mode", cfg.control.mode == ControlMode::Learning ? "learning" : "nominal"},
                      {"k_align", cfg.control.gains.align},
                      {"k_shape", cfg.control.gains.shape},
                      {"prior", forces_json(cfg.control.prior)}};
    doc["gp"] = {{"lengthscales", vector_json(cfg.gp.kernel.lengthscales)},
                 {"signal_variance", cfg.gp.kernel.signal_variance},
                 {"noise_variance", cfg.gp.kernel.noise_variance},
                 {"fit_hyperparameters", cfg.gp.fit_hyperparameters}};
    doc["sim"] = {{"dt", cfg.sim.dt},
                  {"t_end", cfg.sim.t_end},
                  {"sample_interval", cfg.sim.sample_interval},
                  {"freeze_time", cfg.sim.freeze_time},
                  {"accel_noise_sigma", cfg.sim.accel_noise_sigma},
                  {"seed", cfg.sim.seed},
                  {"record_every", cfg.sim.record_every},
                  {"max_samples", cfg.sim.max_samples ? json(*cfg.sim.max_samples) : json(nullptr)}};
    json bound = {{"epsilon", cfg.bound.epsilon},
                  {"surrogate_safety_factor", cfg.bound.surrogate_safety_factor},
                  {"omega_inflation", cfg.bound.omega_inflation},
                  {"grid_points_per_axis", cfg.bound.grid_points_per_axis},
                  {"max_cells", cfg.bound.max_cells}};
    bound["rkhs_bounds"] = cfg.bound.rkhs_bounds ? vector_json(*cfg.bound.rkhs_bounds) : json("surrogate");
    bound["omega"] = cfg.bound.omega
                         ? json{{"lower", vector_json(cfg.bound.omega->lower)}, {"upper", vector_json(cfg.bound.omega->upper)}}
                         : json("auto");
    doc["bound"] = std::move(bound);
    return doc;
}

bool operator==(const ScenarioConfig& a, const ScenarioConfig& b) {
    const auto priors_equal = [](const ForceField& x, const ForceField& y) {
        const bool xz = x.agent_count() == 0 || x.is_zero();
        const bool yz = y.agent_count() == 0 || y.is_zero();
        return (xz && yz) || x == y;
    };
    return a.name == b.name && a.framework == b.framework && a.q0 == b.q0 && a.v0 == b.v0 &&
           a.disturbance == b.disturbance && a.control.mode == b.control.mode &&
           a.control.gains == b.control.gains && priors_equal(a.control.prior, b.control.prior) && a.gp == b.gp &&
           a.sim == b.sim && a.bound == b.bound;
}

// ---------------------------------------------------------------------------
// Presets

namespace {

ForceTerm sin_term(double amplitude, double frequency, int input) { return {amplitude, Trig::Sin, frequency, input}; }
ForceTerm cos_term(double amplitude, double frequency, int input) { return {amplitude, Trig::Cos, frequency, input}; }
ForceTerm const_term(double amplitude) { return {amplitude, Trig::Const, 0.0, 0}; }

constexpr int X = 0;
constexpr int Y = 1;
constexpr int Z = 2;

StackedVector positions(int d, std::initializer_list<std::initializer_list<double>> rows) {
    std::vector<Eigen::VectorXd> blocks;
    for (const auto& r : rows) {
        Eigen::VectorXd b(d);
        int a = 0;
        for (const double x : r) { b(a++) = x; }
        blocks.push_back(b);
    }
    return StackedVector::from_blocks(blocks);
}

// Shared learning/bound settings for the built-in experiments. Positions are
// in the hundreds and the forces only depend on velocity, so the position
// lengthscale is long and the velocity lengthscale matches the force periods.
void apply_common(ScenarioConfig& cfg, std::uint64_t seed, double velocity_lengthscale, Gains gains) {
    const int d = cfg.framework.dimension();
    cfg.control.mode = ControlMode::Learning;
    cfg.control.gains = gains;
    cfg.gp.kernel = KernelParams::isotropic(2 * d, 1.0, 1e4, 1.0);
    cfg.gp.kernel.lengthscales.head(d).setConstant(1e4);
    cfg.gp.kernel.lengthscales.tail(d).setConstant(velocity_lengthscale);
    cfg.sim.dt = 1e-3;
    cfg.sim.t_end = 30.0;
    cfg.sim.sample_interval = 0.1;
    cfg.sim.freeze_time = 15.0;
    cfg.sim.accel_noise_sigma = 1.0;
    cfg.sim.seed = seed;
}

ScenarioConfig triangle2d(std::uint64_t seed) {
    constexpr double side = 200.0;
    Framework fw(3, 2, {{0, 1}, {1, 2}, {2, 0}}, {side, side, side});
    StackedVector q = positions(2, {{0.0, 0.0}, {side, 0.0}, {0.5 * side, 0.5 * std::numbers::sqrt3 * side}});
    StackedVector v(2, 3);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const auto disk = [&](double radius) {
        const double r = radius * std::sqrt(unit(rng));
        const double a = 2.0 * std::numbers::pi * unit(rng);
        return Eigen::Vector2d(r * std::cos(a), r * std::sin(a));
    };
    for (int i = 0; i < 3; ++i) { q.block(i) += disk(0.1 * side); }
    for (int i = 0; i < 3; ++i) { v.block(i) = disk(1.0); }

    ForceField f(3, 2);
    // Cohesion loss on agents 1 and 3.
    f.add_term(0, X, sin_term(-300.0, 0.01, Y));
    f.add_term(0, X, const_term(-50.0));
    f.add_term(0, Y, const_term(-300.0));
    f.add_term(2, X, sin_term(300.0, 0.01, Y));
    f.add_term(2, Y, const_term(300.0));

    ScenarioConfig cfg{.name = "triangle2d", .framework = std::move(fw), .q0 = q, .v0 = v, .disturbance = f,
                       .control = {}, .gp = {}, .sim = {}, .bound = {}};
    apply_common(cfg, seed, 50.0, {.align = 1.0, .shape = 1e-4});
    return cfg;
}

ScenarioConfig hexad2d(std::uint64_t seed) {
    constexpr double side = 200.0;
    Framework fw(6, 2, {{0, 1}, {1, 2}, {0, 2}, {2, 3}, {1, 3}, {3, 4}, {2, 4}, {4, 5}, {3, 5}},
                 std::vector<double>(9, side));
    StackedVector q =
        positions(2, {{450, 200}, {510, 100}, {590, 300}, {450, 0}, {250, 650}, {265, 400}});
    ForceField f(6, 2);
    f.add_term(0, X, sin_term(300.0, 0.2, Y));
    f.add_term(0, Y, const_term(-200.0));
    f.add_term(2, X, sin_term(300.0, 0.2, Y));
    f.add_term(2, Y, const_term(-200.0));
    f.add_term(3, X, sin_term(-300.0, 0.2, Y));
    f.add_term(3, Y, cos_term(300.0, 0.2, X));

    ScenarioConfig cfg{.name = "hexad2d", .framework = std::move(fw), .q0 = q, .v0 = StackedVector(2, 6),
                       .disturbance = f, .control = {}, .gp = {}, .sim = {}, .bound = {}};
    apply_common(cfg, seed, 5.0, {.align = 1.0, .shape = 1e-4});
    return cfg;
}

ScenarioConfig tetra3d(std::uint64_t seed) {
    constexpr double side = 200.0;
    Framework fw(4, 3, {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}, std::vector<double>(6, side));
    StackedVector q = positions(3, {{100, 0, 0}, {0, 0, 200}, {0, -300, 0}, {100, 0, -300}});
    ForceField f(4, 3);
    f.add_term(0, X, sin_term(300.0, 0.2, Y));
    f.add_term(0, Y, cos_term(300.0, 0.2, X));
    f.add_term(0, Z, const_term(10.0));
    f.add_term(2, X, sin_term(300.0, 0.2, Y));
    f.add_term(2, Y, const_term(-200.0));
    f.add_term(2, Z, sin_term(300.0, 0.2, Y));

    ScenarioConfig cfg{.name = "tetra3d", .framework = std::move(fw), .q0 = q, .v0 = StackedVector(3, 4),
                       .disturbance = f, .control = {}, .gp = {}, .sim = {}, .bound = {}};
    // Softer shape gain so the nominal flock visibly loses its spacing; lower
    // alignment keeps the shape modes from being overdamped after the freeze.
    apply_common(cfg, seed, 5.0, {.align = 0.75, .shape = 1.5e-5});
    return cfg;
}

}  // namespace

std::vector<std::string> preset_names() { return {"triangle2d", "hexad2d", "tetra3d"}; }

ScenarioConfig preset(std::string_view name, std::uint64_t seed) {
    ScenarioConfig cfg = [&] {
        if (name == "triangle2d") { return triangle2d(seed); }
        if (name == "hexad2d") { return hexad2d(seed); }
        if (name == "tetra3d") { return tetra3d(seed); }
        throw ConfigError(ConfigError::Kind::Schema, "preset", "unknown preset '" + std::string(name) + "'");
    }();
    cfg.validate();
    return cfg;
}

}  // namespace flock
