// Copyright 2026 The sqzmoments Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Run configuration: JSON with complex numbers as [re, im] pairs and H given
// row-major as an array of rows.
//
//   {
//     "modes": 1,
//     "channels": [ { "rate": 1.0, "H": [[[0, 0.5], [0, 0]], [[0, 0], [0, -0.5]]] } ],
//     "initial_state": { "kind": "coherent", "alpha": [[0.3, 0]] },
//     "order": 2,
//     "time": { "t_max": 1.0, "steps": 4 },
//     "oracle": { "cutoff": 60, "strict": true },
//     "mc": { "trajectories": 100000, "seed": 42 }
//   }

#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "sqzmoments/moments.hpp"
#include "sqzmoments/states.hpp"
#include "sqzmoments/symplectic.hpp"

namespace sqz::cli {

using nlohmann::json;

struct ChannelConfig {
    double rate = 0.0;
    CMatrix h;
};

struct StateConfig {
    std::string kind = "vacuum";
    std::vector<Complex> alpha;
    std::optional<CMatrix> squeeze_h;
    std::vector<int> occupations;
};

struct RunConfig {
    int modes = 1;
    std::vector<ChannelConfig> channels;
    StateConfig initial_state;
    int order = 1;
    double t_max = 1.0;
    int steps = 1;
    int cutoff = 40;
    bool strict = false;
    std::uint64_t trajectories = 10000;
    std::uint64_t seed = 0;
};

namespace detail {

inline bool same_matrix(const CMatrix& a, const CMatrix& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
}

}  // namespace detail

inline bool operator==(const StateConfig& a, const StateConfig& b) {
    if (a.kind != b.kind || a.alpha != b.alpha || a.occupations != b.occupations) return false;
    if (a.squeeze_h.has_value() != b.squeeze_h.has_value()) return false;
    return !a.squeeze_h || detail::same_matrix(*a.squeeze_h, *b.squeeze_h);
}

inline bool operator==(const RunConfig& a, const RunConfig& b) {
    if (a.modes != b.modes || a.order != b.order || a.t_max != b.t_max || a.steps != b.steps ||
        a.cutoff != b.cutoff || a.strict != b.strict || a.trajectories != b.trajectories || a.seed != b.seed ||
        !(a.initial_state == b.initial_state) || a.channels.size() != b.channels.size()) {
        return false;
    }
    for (std::size_t k = 0; k < a.channels.size(); ++k) {
        if (a.channels[k].rate != b.channels[k].rate || !detail::same_matrix(a.channels[k].h, b.channels[k].h)) {
            return false;
        }
    }
    return true;
}

namespace detail {

[[noreturn]] inline void field_error(const std::string& path, const std::string& what) {
    throw Error(ErrorCode::Parse, "field '" + path + "': " + what);
}

inline const json& require(const json& obj, const char* key, const std::string& path) {
    if (!obj.is_object()) field_error(path, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) field_error(path.empty() ? key : path + "." + key, "missing");
    return *it;
}

inline double as_double(const json& j, const std::string& path) {
    if (!j.is_number()) field_error(path, "expected a number, got " + std::string(j.type_name()));
    return j.get<double>();
}

inline std::int64_t as_int(const json& j, const std::string& path) {
    if (!j.is_number_integer()) field_error(path, "expected an integer, got " + std::string(j.type_name()));
    return j.get<std::int64_t>();
}

inline std::uint64_t as_uint(const json& j, const std::string& path) {
    if (!j.is_number_unsigned()) field_error(path, "expected a nonnegative integer");
    return j.get<std::uint64_t>();
}

inline Complex as_complex(const json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 2) field_error(path, "expected a complex number as [re, im]");
    return {as_double(j[0], path + "[0]"), as_double(j[1], path + "[1]")};
}

inline std::vector<Complex> as_complex_list(const json& j, const std::string& path) {
    if (!j.is_array()) field_error(path, "expected an array of [re, im] pairs");
    std::vector<Complex> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(as_complex(j[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

inline CMatrix as_matrix(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) field_error(path, "expected a non-empty array of rows");
    const std::size_t rows = j.size();
    CMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(rows));
    for (std::size_t r = 0; r < rows; ++r) {
        const std::string rp = path + "[" + std::to_string(r) + "]";
        if (!j[r].is_array() || j[r].size() != rows) field_error(rp, "expected a row of " + std::to_string(rows) + " entries");
        for (std::size_t c = 0; c < rows; ++c) m(r, c) = as_complex(j[r][c], rp + "[" + std::to_string(c) + "]");
    }
    return m;
}

inline json complex_json(Complex z) { return json::array({z.real(), z.imag()}); }

inline json matrix_json(const CMatrix& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(complex_json(m(r, c)));
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace detail

/// Structural parse only; generator validity is checked by validate_run.
inline RunConfig parse_config_json(const json& root) {
    using namespace detail;
    RunConfig cfg;
    if (!root.is_object()) field_error("<root>", "expected an object");
    cfg.modes = static_cast<int>(as_int(require(root, "modes", ""), "modes"));

    const json& chans = require(root, "channels", "");
    if (!chans.is_array()) field_error("channels", "expected an array");
    for (std::size_t k = 0; k < chans.size(); ++k) {
        const std::string p = "channels[" + std::to_string(k) + "]";
        ChannelConfig c;
        c.rate = as_double(require(chans[k], "rate", p), p + ".rate");
        c.h = as_matrix(require(chans[k], "H", p), p + ".H");
        cfg.channels.push_back(std::move(c));
    }

    const json& st = require(root, "initial_state", "");
    cfg.initial_state.kind = [&] {
        const json& k = require(st, "kind", "initial_state");
        if (!k.is_string()) field_error("initial_state.kind", "expected a string");
        return k.get<std::string>();
    }();
    if (st.contains("alpha")) cfg.initial_state.alpha = as_complex_list(st["alpha"], "initial_state.alpha");
    if (st.contains("squeeze_H")) cfg.initial_state.squeeze_h = as_matrix(st["squeeze_H"], "initial_state.squeeze_H");
    if (st.contains("occupations")) {
        const json& occ = st["occupations"];
        if (!occ.is_array()) field_error("initial_state.occupations", "expected an array");
        for (std::size_t i = 0; i < occ.size(); ++i) {
            cfg.initial_state.occupations.push_back(
                static_cast<int>(as_int(occ[i], "initial_state.occupations[" + std::to_string(i) + "]")));
        }
    }

    if (root.contains("order")) cfg.order = static_cast<int>(as_int(root["order"], "order"));
    const json& time = require(root, "time", "");
    cfg.t_max = as_double(require(time, "t_max", "time"), "time.t_max");
    cfg.steps = static_cast<int>(as_int(require(time, "steps", "time"), "time.steps"));
    if (root.contains("oracle")) {
        const json& o = root["oracle"];
        if (o.contains("cutoff")) cfg.cutoff = static_cast<int>(as_int(o["cutoff"], "oracle.cutoff"));
        if (o.contains("strict")) {
            if (!o["strict"].is_boolean()) field_error("oracle.strict", "expected true or false");
            cfg.strict = o["strict"].get<bool>();
        }
    }
    if (root.contains("mc")) {
        const json& m = root["mc"];
        if (m.contains("trajectories")) cfg.trajectories = as_uint(m["trajectories"], "mc.trajectories");
        if (m.contains("seed")) cfg.seed = as_uint(m["seed"], "mc.seed");
    }
    return cfg;
}

inline RunConfig parse_config_text(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::Parse, e.what());
    }
    return parse_config_json(root);
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Parse, "cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline json config_to_json(const RunConfig& cfg) {
    using namespace detail;
    json root;
    root["modes"] = cfg.modes;
    root["channels"] = json::array();
    for (const auto& c : cfg.channels) root["channels"].push_back({{"rate", c.rate}, {"H", matrix_json(c.h)}});
    json st;
    st["kind"] = cfg.initial_state.kind;
    if (!cfg.initial_state.alpha.empty()) {
        st["alpha"] = json::array();
        for (Complex a : cfg.initial_state.alpha) st["alpha"].push_back(complex_json(a));
    }
    if (cfg.initial_state.squeeze_h) st["squeeze_H"] = matrix_json(*cfg.initial_state.squeeze_h);
    if (!cfg.initial_state.occupations.empty()) st["occupations"] = cfg.initial_state.occupations;
    root["initial_state"] = std::move(st);
    root["order"] = cfg.order;
    root["time"] = {{"t_max", cfg.t_max}, {"steps", cfg.steps}};
    root["oracle"] = {{"cutoff", cfg.cutoff}, {"strict", cfg.strict}};
    root["mc"] = {{"trajectories", cfg.trajectories}, {"seed", cfg.seed}};
    return root;
}

inline std::string emit_config(const RunConfig& cfg) { return config_to_json(cfg).dump(2); }

/// Everything the run workflows need, fully validated.
struct ValidatedRun {
    RunConfig raw;
    ChannelSet channels;
    StateSpec state;
    std::vector<double> grid;
};

inline std::vector<double> time_grid(double t_max, int steps) {
    std::vector<double> grid(static_cast<std::size_t>(steps) + 1);
    for (int j = 0; j <= steps; ++j) grid[j] = t_max * static_cast<double>(j) / static_cast<double>(steps);
    grid.back() = t_max;
    return grid;
}

inline StateSpec build_state_spec(const RunConfig& cfg) {
    StateSpec spec;
    spec.kind = state_kind_from_string(cfg.initial_state.kind);
    spec.n = cfg.modes;
    spec.alpha = cfg.initial_state.alpha;
    spec.occupations = cfg.initial_state.occupations;
    if (cfg.initial_state.squeeze_h) spec.squeeze = validate_generator(cfg.modes, *cfg.initial_state.squeeze_h);
    spec.validate();
    return spec;
}

inline ValidatedRun validate_run(const RunConfig& cfg) {
    if (cfg.modes < 1) throw Error(ErrorCode::InvalidDimension, "modes must be >= 1");
    if (cfg.order < 1) throw Error(ErrorCode::InvalidDimension, "order must be >= 1");
    if (cfg.steps < 1) throw Error(ErrorCode::Configuration, "time.steps must be >= 1");
    if (!(cfg.t_max > 0.0) || !std::isfinite(cfg.t_max)) {
        throw Error(ErrorCode::Configuration, "time.t_max must be positive and finite");
    }
    if (cfg.cutoff < 1) throw Error(ErrorCode::Configuration, "oracle.cutoff must be >= 1");
    if (cfg.trajectories < 1) throw Error(ErrorCode::Configuration, "mc.trajectories must be >= 1");
    std::vector<Channel> chans;
    for (std::size_t k = 0; k < cfg.channels.size(); ++k) {
        try {
            chans.push_back(Channel{cfg.channels[k].rate, validate_generator(cfg.modes, cfg.channels[k].h)});
        } catch (const Error& e) {
            throw Error(e.code(), "channels[" + std::to_string(k) + "]: " + e.message());
        }
    }
    ChannelSet set(std::move(chans));
    StateSpec spec = build_state_spec(cfg);
    if (spec.kind == StateKind::Fock) {
        for (int o : spec.occupations) {
            if (o > cfg.cutoff - (cfg.order + 2)) {
                throw Error(ErrorCode::Configuration, "occupation " + std::to_string(o) +
                                                          " leaves less than M + 2 levels below oracle.cutoff " +
                                                          std::to_string(cfg.cutoff));
            }
        }
    }
    return ValidatedRun{cfg, std::move(set), std::move(spec), time_grid(cfg.t_max, cfg.steps)};
}

inline ValidatedRun parse_config(const std::string& path) { return validate_run(parse_config_text(read_file(path))); }

/// FNV-1a over the canonical dump; stable across platforms and runs.
inline std::string config_hash(const RunConfig& cfg) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : config_to_json(cfg).dump()) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << h;
    return os.str();
}

}  // namespace sqz::cli
