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

#pragma once

#include <algorithm>
#include <cstdio>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "sqzmoments/cli/config.hpp"
#include "sqzmoments/fock.hpp"
#include "sqzmoments/moments.hpp"
#include "sqzmoments/poisson_mc.hpp"
#include "sqzmoments/states.hpp"

namespace sqz::cli {

inline constexpr double kFockRelativeTol = 1e-4;
inline constexpr double kMcSigmaTol = 4.0;
inline constexpr double kRelativeFloor = 1e-8;
inline constexpr double kStderrFloor = 1e-12;

/// Moment samples on a time grid, with optional per-method extras.
struct Series {
    std::string method;
    std::vector<double> times;
    std::vector<MomentTensor> values;
    std::vector<double> leakage;                     // fock
    std::vector<RVector> stderr_re, stderr_im;       // mc
    double fock_step = 0.0;                          // fock
};

/// mu(0) for the configured state: Wick expansion for Gaussian states, number
/// states in closed form up to M = 2 and through the Fock oracle beyond.
inline MomentTensor initial_moments(const ValidatedRun& run, int order) {
    if (run.state.is_gaussian()) return gaussian_moments(run.state, order);
    if (order == 1) return first_two_moments(run.state).first;
    if (order == 2) return first_two_moments(run.state).second;
    const FockSpace fs(run.raw.modes, run.raw.cutoff, Budget::from_env());
    return extract_moments(fs, prepare_state(fs, run.state), order);
}

inline Series run_propagate(const ValidatedRun& run) {
    const Budget budget = Budget::from_env();
    const int order = run.raw.order;
    const MomentGenerator gen = build_generator(run.channels, order, budget);
    Series s{"propagator", run.grid, propagate_series(gen, initial_moments(run, order), run.grid), {}, {}, {}, 0.0};
    return s;
}

inline Series run_oracle(const ValidatedRun& run) {
    const FockSpace fs(run.raw.modes, run.raw.cutoff, Budget::from_env());
    const FockModel model = build_fock_model(fs, run.channels);
    IntegrateOptions opts;
    opts.strict = run.raw.strict;
    opts.orders = run.raw.order == 1 ? std::vector<int>{1} : std::vector<int>{1, run.raw.order};
    const FockTrajectory traj = integrate(model, prepare_state(fs, run.state), run.grid, opts);
    Series s;
    s.method = "fock";
    s.times = run.grid;
    s.fock_step = traj.step;
    for (const auto& st : traj.states) {
        s.values.push_back(extract_moments(fs, st, run.raw.order));
        s.leakage.push_back(st.leakage);
    }
    return s;
}

inline Series run_mc(const ValidatedRun& run, unsigned threads = 1) {
    McConfig mc;
    mc.trajectories = static_cast<std::size_t>(run.raw.trajectories);
    mc.seed = run.raw.seed;
    mc.t_grid = run.grid;
    mc.threads = threads;
    const auto est = estimate(run.channels, initial_moments(run, run.raw.order), mc);
    Series s;
    s.method = "mc";
    s.times = run.grid;
    for (const auto& e : est) {
        s.values.push_back(e.mean);
        s.stderr_re.push_back(e.stderr_re);
        s.stderr_im.push_back(e.stderr_im);
    }
    return s;
}

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Header: t, mu[<label>].re, mu[<label>].im, ... then se[...] (mc) or leakage (fock).
inline void write_series_csv(std::ostream& os, const Series& s) {
    if (s.values.empty()) return;
    const IndexScheme sc = s.values.front().scheme();
    os << "t";
    for (Eigen::Index f = 0; f < sc.size(); ++f) os << ",mu[" << sc.label(f) << "].re,mu[" << sc.label(f) << "].im";
    if (!s.stderr_re.empty()) {
        for (Eigen::Index f = 0; f < sc.size(); ++f) os << ",se[" << sc.label(f) << "].re,se[" << sc.label(f) << "].im";
    }
    if (!s.leakage.empty()) os << ",leakage";
    os << "\n";
    for (std::size_t j = 0; j < s.times.size(); ++j) {
        os << format_double(s.times[j]);
        for (Eigen::Index f = 0; f < sc.size(); ++f) {
            os << ',' << format_double(s.values[j].data(f).real()) << ',' << format_double(s.values[j].data(f).imag());
        }
        if (!s.stderr_re.empty()) {
            for (Eigen::Index f = 0; f < sc.size(); ++f) {
                os << ',' << format_double(s.stderr_re[j](f)) << ',' << format_double(s.stderr_im[j](f));
            }
        }
        if (!s.leakage.empty()) os << ',' << format_double(s.leakage[j]);
        os << "\n";
    }
}

struct DeviationRow {
    double t = 0.0;
    std::string label;
    Complex a;
    Complex b;
    double abs_dev = 0.0;
    double deviation = 0.0;  // relative, or stderr-normalized for Monte Carlo pairs
};

struct ComparisonReport {
    std::string method_a;
    std::string method_b;
    std::string tolerance_kind;  // "relative" or "stderr"
    double tolerance = 0.0;
    std::vector<DeviationRow> rows;
    double max_deviation = 0.0;
    double max_abs_deviation = 0.0;
    bool pass = false;
    std::string config_hash;
    std::string version = kVersion;
    std::uint64_t seed = 0;
};

/// |a - b| / max(|a|, |b|, floor).
inline double relative_deviation(Complex a, Complex b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), kRelativeFloor});
}

/// max over re/im of |a - b| / max(stderr, floor).
inline double stderr_deviation(Complex a, Complex b, double se_re, double se_im) {
    const double zr = std::abs(a.real() - b.real()) / std::max(se_re, kStderrFloor);
    const double zi = std::abs(a.imag() - b.imag()) / std::max(se_im, kStderrFloor);
    return std::max(zr, zi);
}

inline ComparisonReport compare_series(const Series& a, const Series& b, const RunConfig& cfg) {
    if (a.times != b.times || a.values.size() != b.values.size()) {
        throw Error(ErrorCode::Configuration, "cannot compare " + a.method + " and " + b.method + " on different grids");
    }
    ComparisonReport r;
    r.method_a = a.method;
    r.method_b = b.method;
    const Series* mc = !b.stderr_re.empty() ? &b : (!a.stderr_re.empty() ? &a : nullptr);
    r.tolerance_kind = mc ? "stderr" : "relative";
    r.tolerance = mc ? kMcSigmaTol : kFockRelativeTol;
    r.config_hash = config_hash(cfg);
    r.seed = cfg.seed;
    for (std::size_t j = 0; j < a.times.size(); ++j) {
        const IndexScheme sc = a.values[j].scheme();
        for (Eigen::Index f = 0; f < sc.size(); ++f) {
            DeviationRow row;
            row.t = a.times[j];
            row.label = sc.label(f);
            row.a = a.values[j].data(f);
            row.b = b.values[j].data(f);
            row.abs_dev = std::abs(row.a - row.b);
            row.deviation = mc ? stderr_deviation(row.a, row.b, mc->stderr_re[j](f), mc->stderr_im[j](f))
                               : relative_deviation(row.a, row.b);
            r.max_deviation = std::max(r.max_deviation, row.deviation);
            r.max_abs_deviation = std::max(r.max_abs_deviation, row.abs_dev);
            r.rows.push_back(std::move(row));
        }
    }
    r.pass = r.max_deviation <= r.tolerance;
    return r;
}

inline void write_comparison_csv(std::ostream& os, const ComparisonReport& r) {
    os << "t,label," << r.method_a << ".re," << r.method_a << ".im," << r.method_b << ".re," << r.method_b
       << ".im,abs_dev," << (r.tolerance_kind == "stderr" ? "z" : "rel_dev") << "\n";
    for (const auto& row : r.rows) {
        os << format_double(row.t) << ',' << row.label << ',' << format_double(row.a.real()) << ','
           << format_double(row.a.imag()) << ',' << format_double(row.b.real()) << ',' << format_double(row.b.imag())
           << ',' << format_double(row.abs_dev) << ',' << format_double(row.deviation) << "\n";
    }
}

inline nlohmann::json report_json(const ComparisonReport& r) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : r.rows) {
        rows.push_back({{"t", row.t}, {"label", row.label}, {"abs", row.abs_dev}, {"deviation", row.deviation}});
    }
    return {{"methods", {r.method_a, r.method_b}},
            {"tolerance", {{"kind", r.tolerance_kind}, {"value", r.tolerance}}},
            {"max_deviation", r.max_deviation},
            {"max_abs_deviation", r.max_abs_deviation},
            {"pass", r.pass},
            {"rows", std::move(rows)},
            {"metadata",
             {{"config_hash", r.config_hash},
              {"version", r.version},
              {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                            std::to_string(EIGEN_MINOR_VERSION)},
              {"seed", r.seed}}}};
}

struct CompareOutcome {
    std::map<std::string, Series> series;
    std::vector<ComparisonReport> reports;
    bool pass = true;
};

inline std::vector<std::string> parse_methods(const std::string& list) {
    static const std::vector<std::string> order = {"propagator", "fock", "mc"};
    std::set<std::string> picked;
    std::size_t start = 0;
    while (start <= list.size()) {
        const std::size_t comma = std::min(list.find(',', start), list.size());
        const std::string m = list.substr(start, comma - start);
        if (std::find(order.begin(), order.end(), m) == order.end()) {
            throw Error(ErrorCode::Configuration, "unknown method '" + m + "' (expected propagator, fock, mc)");
        }
        picked.insert(m);
        start = comma + 1;
    }
    std::vector<std::string> out;
    for (const auto& m : order)
        if (picked.count(m)) out.push_back(m);
    return out;
}

/// Runs every method on the run's grid and compares each pair.
inline CompareOutcome run_compare(const ValidatedRun& run, const std::vector<std::string>& methods,
                                  unsigned threads = 1) {
    if (methods.size() < 2) throw Error(ErrorCode::Configuration, "compare needs at least two methods");
    CompareOutcome out;
    for (const auto& m : methods) {
        try {
            if (m == "propagator") out.series.emplace(m, run_propagate(run));
            else if (m == "fock") out.series.emplace(m, run_oracle(run));
            else if (m == "mc") out.series.emplace(m, run_mc(run, threads));
        } catch (const Error& e) {
            throw Error(e.code(), "[" + m + "] " + e.message());
        }
    }
    for (std::size_t i = 0; i < methods.size(); ++i)
        for (std::size_t j = i + 1; j < methods.size(); ++j) {
            out.reports.push_back(compare_series(out.series.at(methods[i]), out.series.at(methods[j]), run.raw));
            out.pass = out.pass && out.reports.back().pass;
        }
    return out;
}

struct ChannelValidation {
    GeneratorResiduals residuals;
    bool valid = false;
    std::string error;
};

struct ValidationReport {
    std::vector<ChannelValidation> channels;
    bool valid = true;
    std::string error;  // config-level problem outside the channels
};

/// Per-channel residuals and growth indicator; never throws on invalid H.
inline ValidationReport run_validate(const RunConfig& cfg) {
    ValidationReport rep;
    for (const auto& c : cfg.channels) {
        ChannelValidation cv;
        try {
            cv.residuals = inspect_generator(cfg.modes, c.h);
            validate_generator(cfg.modes, c.h);
            if (!(c.rate > 0.0)) throw Error(ErrorCode::Configuration, "rate must be positive");
            cv.valid = true;
        } catch (const Error& e) {
            cv.error = e.what();
        }
        rep.valid = rep.valid && cv.valid;
        rep.channels.push_back(std::move(cv));
    }
    try {
        validate_run(cfg);
    } catch (const Error& e) {
        rep.valid = false;
        rep.error = e.what();
    }
    return rep;
}

inline nlohmann::json validation_json(const ValidationReport& rep) {
    nlohmann::json chans = nlohmann::json::array();
    for (const auto& c : rep.channels) {
        chans.push_back({{"valid", c.valid},
                         {"symmetry_residual", c.residuals.symmetry},
                         {"tilde_residual", c.residuals.tilde},
                         {"symplectic_residual", c.residuals.symplectic},
                         {"jump_tilde_residual", c.residuals.jump_tilde},
                         {"spectral_radius", c.residuals.spectral_radius},
                         {"error", c.error}});
    }
    return {{"valid", rep.valid}, {"channels", std::move(chans)}, {"error", rep.error}};
}

}  // namespace sqz::cli
