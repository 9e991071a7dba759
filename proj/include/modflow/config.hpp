#pragma once

// Experiment configuration: a JSON object with a fixed schema. Unknown keys
// are rejected at every nesting level.
//
// {
//   "grid": {"n1": 64, "n2": 64},
//   "initial": {"kind": "sinusoidal", "u0": 0, "v0": 1, "amp_u": 0.3,
//               "amp_v": 0.3, "k1": 1, "k2": 1, "path": ""},
//   "t_final": 1.0, "cfl_safety": 0.5, "dt_floor": 1e-12,
//   "snapshot_every": 0.02, "stall_threshold": 1e-14,
//   "binning": {"nx": 60, "ny": 60, "y_max": 10},
//   "test_functions": [{"center": [0, 1.5], "radii": [0.3, 0.4]}],
//   "entropy_threshold": 10, "jacobian_threshold": 1e-8,
//   "output_dir": "run", "seed": 0
// }

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "modflow/binning.hpp"
#include "modflow/errors.hpp"
#include "modflow/heat_flow.hpp"
#include "modflow/measures.hpp"
#include "modflow/target_function.hpp"

namespace modflow {

/// Initial condition. Parameter meaning depends on kind:
///   constant        u = u0, v = v0
///   sinusoidal      u = u0 + amp_u sin(2 pi k1 x1), v = v0 + amp_v sin(2 pi k2 x2)
///   winding         u = amp_u sin(2 pi k1 x1),       v = exp(amp_v cos(2 pi k2 x2))
///   random_fourier  seeded Fourier modes up to |k| <= k1 in u (amplitude amp_u)
///                   and in log v (amplitude amp_v), around (u0, v0)
///   file            snapshot at path
struct InitialSpec {
    std::string kind = "sinusoidal";
    double u0 = 0.0;
    double v0 = 1.0;
    double amp_u = 0.3;
    double amp_v = 0.3;
    int k1 = 1;
    int k2 = 1;
    std::string path;

    friend bool operator==(const InitialSpec&, const InitialSpec&) = default;
};

struct BumpSpec {
    double cx = 0.0;
    double cy = 1.5;
    double rx = 0.3;
    double ry = 0.4;

    TargetFunction make() const { return make_bump(cx, cy, rx, ry); }
    friend bool operator==(const BumpSpec&, const BumpSpec&) = default;
};

struct FlowConfig {
    std::size_t n1 = 64;
    std::size_t n2 = 64;
    InitialSpec initial;
    double t_final = 1.0;
    double cfl_safety = 0.5;
    double dt_floor = 1e-12;
    double snapshot_every = 0.02;
    double stall_threshold = 1e-14;
    int bins_x = 60;
    int bins_y = 60;
    double y_max = 10.0;
    std::vector<BumpSpec> test_functions{{0.0, 1.5, 0.3, 0.4}, {-0.2, 2.5, 0.2, 0.8}};
    double entropy_threshold = 10.0;
    double jacobian_threshold = kDefaultJacobianThreshold;
    std::string output_dir = "run";
    std::uint64_t seed = 0;

    FlowOptions flow_options() const {
        FlowOptions o;
        o.t_final = t_final;
        o.cfl_safety = cfl_safety;
        o.dt_floor = dt_floor;
        o.snapshot_every = snapshot_every;
        o.stall_threshold = stall_threshold;
        return o;
    }

    friend bool operator==(const FlowConfig&, const FlowConfig&) = default;
};

namespace detail {

using nlohmann::json;

inline void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    if (!obj.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& [key, _] : obj.items()) {
        if (!allowed.contains(key)) {
            throw ConfigError("unknown key '" + (where.empty() ? key : where + "." + key) + "'");
        }
    }
}

template <class T>
void read_field(const json& obj, const char* key, T& out, const std::string& where) {
    if (!obj.contains(key)) return;
    const std::string name = where.empty() ? key : where + "." + key;
    const json& v = obj.at(key);
    try {
        if constexpr (std::is_same_v<T, std::string>) {
            if (!v.is_string()) throw ConfigError(name + ": expected a string");
        } else if constexpr (std::is_integral_v<T>) {
            if (!v.is_number_integer()) throw ConfigError(name + ": expected an integer");
            if constexpr (std::is_unsigned_v<T>) {
                if (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0) {
                    throw ConfigError(name + ": must be nonnegative");
                }
            }
        } else {
            if (!v.is_number()) throw ConfigError(name + ": expected a number");
        }
        out = v.get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(name + ": " + e.what());
    }
}

inline std::size_t line_of(const std::string& text, std::size_t byte) {
    std::size_t line = 1;
    for (std::size_t k = 0; k < byte && k < text.size(); ++k) {
        if (text[k] == '\n') ++line;
    }
    return line;
}

}  // namespace detail

/// Throws ConfigError naming the first invalid field.
inline void validate(const FlowConfig& c) {
    auto fail = [](const std::string& field, const std::string& why) { throw ConfigError(field + ": " + why); };
    if (c.n1 < DomainGrid::kMinNodes) fail("grid.n1", "must be >= 4");
    if (c.n2 < DomainGrid::kMinNodes) fail("grid.n2", "must be >= 4");
    static const std::set<std::string> kinds{"constant", "sinusoidal", "winding", "random_fourier", "file"};
    if (!kinds.contains(c.initial.kind)) fail("initial.kind", "unknown kind '" + c.initial.kind + "'");
    if (c.initial.kind == "file" && c.initial.path.empty()) fail("initial.path", "required for kind 'file'");
    if (c.initial.kind == "constant" || c.initial.kind == "sinusoidal" || c.initial.kind == "random_fourier") {
        if (!(c.initial.v0 > 0.0)) fail("initial.v0", "must be > 0");
    }
    if (c.initial.k1 < 0) fail("initial.k1", "must be >= 0");
    if (c.initial.k2 < 0) fail("initial.k2", "must be >= 0");
    if (!(c.t_final > 0.0)) fail("t_final", "must be > 0");
    if (!(c.cfl_safety > 0.0 && c.cfl_safety <= 1.0)) fail("cfl_safety", "must be in (0, 1]");
    if (!(c.dt_floor > 0.0)) fail("dt_floor", "must be > 0");
    if (!(c.snapshot_every > 0.0)) fail("snapshot_every", "must be > 0");
    if (!(c.stall_threshold >= 0.0)) fail("stall_threshold", "must be >= 0");
    if (c.bins_x < 1) fail("binning.nx", "must be >= 1");
    if (c.bins_y < 1) fail("binning.ny", "must be >= 1");
    if (!(c.y_max > 1.0)) fail("binning.y_max", "must be > 1");
    const FundamentalDomainBinning binning(c.bins_x, c.bins_y, c.y_max);
    for (std::size_t k = 0; k < c.test_functions.size(); ++k) {
        const BumpSpec& b = c.test_functions[k];
        const std::string name = "test_functions[" + std::to_string(k) + "]";
        if (!(b.rx > 0.0) || !(b.ry > 0.0)) fail(name + ".radii", "must be positive");
        if (!b.make().support_inside(binning)) fail(name, "support must lie strictly inside F_trunc");
    }
    if (!(c.entropy_threshold > 1.0)) fail("entropy_threshold", "must be > 1");
    if (!(c.jacobian_threshold >= 0.0)) fail("jacobian_threshold", "must be >= 0");
    if (c.output_dir.empty()) fail("output_dir", "must not be empty");
}

inline nlohmann::json to_json(const FlowConfig& c) {
    nlohmann::json tf = nlohmann::json::array();
    for (const BumpSpec& b : c.test_functions) tf.push_back({{"center", {b.cx, b.cy}}, {"radii", {b.rx, b.ry}}});
    return {{"grid", {{"n1", c.n1}, {"n2", c.n2}}},
            {"initial",
             {{"kind", c.initial.kind},
              {"u0", c.initial.u0},
              {"v0", c.initial.v0},
              {"amp_u", c.initial.amp_u},
              {"amp_v", c.initial.amp_v},
              {"k1", c.initial.k1},
              {"k2", c.initial.k2},
              {"path", c.initial.path}}},
            {"t_final", c.t_final},
            {"cfl_safety", c.cfl_safety},
            {"dt_floor", c.dt_floor},
            {"snapshot_every", c.snapshot_every},
            {"stall_threshold", c.stall_threshold},
            {"binning", {{"nx", c.bins_x}, {"ny", c.bins_y}, {"y_max", c.y_max}}},
            {"test_functions", tf},
            {"entropy_threshold", c.entropy_threshold},
            {"jacobian_threshold", c.jacobian_threshold},
            {"output_dir", c.output_dir},
            {"seed", c.seed}};
}

inline std::string emit_config(const FlowConfig& c) { return to_json(c).dump(2) + "\n"; }

/// Parses and validates configuration text; missing keys take their defaults.
inline FlowConfig parse_config(const std::string& text) {
    using detail::read_field;
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("syntax error at line " + std::to_string(detail::line_of(text, e.byte)) + ": " + e.what());
    }
    detail::reject_unknown(j,
                           {"grid", "initial", "t_final", "cfl_safety", "dt_floor", "snapshot_every",
                            "stall_threshold", "binning", "test_functions", "entropy_threshold",
                            "jacobian_threshold", "output_dir", "seed"},
                           "");
    FlowConfig c;
    if (j.contains("grid")) {
        const auto& g = j.at("grid");
        detail::reject_unknown(g, {"n1", "n2"}, "grid");
        read_field(g, "n1", c.n1, "grid");
        read_field(g, "n2", c.n2, "grid");
    }
    if (j.contains("initial")) {
        const auto& in = j.at("initial");
        detail::reject_unknown(in, {"kind", "u0", "v0", "amp_u", "amp_v", "k1", "k2", "path"}, "initial");
        read_field(in, "kind", c.initial.kind, "initial");
        read_field(in, "u0", c.initial.u0, "initial");
        read_field(in, "v0", c.initial.v0, "initial");
        read_field(in, "amp_u", c.initial.amp_u, "initial");
        read_field(in, "amp_v", c.initial.amp_v, "initial");
        read_field(in, "k1", c.initial.k1, "initial");
        read_field(in, "k2", c.initial.k2, "initial");
        read_field(in, "path", c.initial.path, "initial");
    }
    read_field(j, "t_final", c.t_final, "");
    read_field(j, "cfl_safety", c.cfl_safety, "");
    read_field(j, "dt_floor", c.dt_floor, "");
    read_field(j, "snapshot_every", c.snapshot_every, "");
    read_field(j, "stall_threshold", c.stall_threshold, "");
    if (j.contains("binning")) {
        const auto& b = j.at("binning");
        detail::reject_unknown(b, {"nx", "ny", "y_max"}, "binning");
        read_field(b, "nx", c.bins_x, "binning");
        read_field(b, "ny", c.bins_y, "binning");
        read_field(b, "y_max", c.y_max, "binning");
    }
    if (j.contains("test_functions")) {
        const auto& tf = j.at("test_functions");
        if (!tf.is_array()) throw ConfigError("test_functions: expected an array");
        c.test_functions.clear();
        for (std::size_t k = 0; k < tf.size(); ++k) {
            const std::string where = "test_functions[" + std::to_string(k) + "]";
            detail::reject_unknown(tf[k], {"center", "radii"}, where);
            for (const char* key : {"center", "radii"}) {
                if (!tf[k].contains(key)) throw ConfigError(where + "." + key + ": required");
                const auto& pair = tf[k].at(key);
                if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number() || !pair[1].is_number()) {
                    throw ConfigError(where + "." + key + ": expected [number, number]");
                }
            }
            BumpSpec b;
            b.cx = tf[k]["center"][0].get<double>();
            b.cy = tf[k]["center"][1].get<double>();
            b.rx = tf[k]["radii"][0].get<double>();
            b.ry = tf[k]["radii"][1].get<double>();
            c.test_functions.push_back(b);
        }
    }
    read_field(j, "entropy_threshold", c.entropy_threshold, "");
    read_field(j, "jacobian_threshold", c.jacobian_threshold, "");
    read_field(j, "output_dir", c.output_dir, "");
    read_field(j, "seed", c.seed, "");
    validate(c);
    return c;
}

}  // namespace modflow
