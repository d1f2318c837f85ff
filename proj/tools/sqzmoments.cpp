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

// Batch harness. Exit codes: 0 pass, 1 tolerance failure, 2 configuration or
// validation error, 3 numerical or capacity error.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "sqzmoments/cli/config.hpp"
#include "sqzmoments/cli/harness.hpp"

namespace {

using namespace sqz;
using namespace sqz::cli;

struct Options {
    std::string config;
    std::string out = ".";
    std::optional<int> order;
    std::optional<double> tmax;
    std::optional<int> steps;
    std::optional<int> cutoff;
    std::optional<std::uint64_t> trajectories;
    std::optional<std::uint64_t> seed;
    bool strict = false;
    std::string methods = "propagator,fock,mc";
    unsigned threads = 1;
};

RunConfig load(const Options& o) {
    RunConfig cfg = parse_config_text(read_file(o.config));
    if (o.order) cfg.order = *o.order;
    if (o.tmax) cfg.t_max = *o.tmax;
    if (o.steps) cfg.steps = *o.steps;
    if (o.cutoff) cfg.cutoff = *o.cutoff;
    if (o.trajectories) cfg.trajectories = *o.trajectories;
    if (o.seed) cfg.seed = *o.seed;
    if (o.strict) cfg.strict = true;
    return cfg;
}

std::filesystem::path out_file(const Options& o, const std::string& name) {
    std::filesystem::create_directories(o.out);
    return std::filesystem::path(o.out) / name;
}

void write_series(const Options& o, const Series& s) {
    const auto path = out_file(o, s.method + ".csv");
    std::ofstream f(path);
    write_series_csv(f, s);
    std::cout << "wrote " << path.string() << " (" << s.times.size() << " rows)\n";
}

int cmd_validate(const Options& o) {
    const ValidationReport rep = run_validate(load(o));
    const std::string text = validation_json(rep).dump(2);
    std::cout << text << "\n";
    if (o.out != ".") {
        std::ofstream(out_file(o, "validate.json")) << text << "\n";
    }
    return rep.valid ? 0 : 2;
}

int cmd_propagate(const Options& o) {
    write_series(o, run_propagate(validate_run(load(o))));
    return 0;
}

int cmd_oracle(const Options& o) {
    const Series s = run_oracle(validate_run(load(o)));
    write_series(o, s);
    double worst = 0.0;
    for (double l : s.leakage) worst = std::max(worst, l);
    std::cout << "max leakage " << worst << ", accepted RK4 step " << s.fock_step << "\n";
    return 0;
}

int cmd_mc(const Options& o) {
    write_series(o, run_mc(validate_run(load(o)), o.threads));
    return 0;
}

int cmd_compare(const Options& o) {
    const ValidatedRun run = validate_run(load(o));
    const CompareOutcome res = run_compare(run, parse_methods(o.methods), o.threads);
    for (const auto& [name, s] : res.series) write_series(o, s);
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& r : res.reports) {
        {
            std::ofstream f(out_file(o, "compare_" + r.method_a + "_" + r.method_b + ".csv"));
            write_comparison_csv(f, r);
        }
        pairs.push_back(report_json(r));
        std::cout << r.method_a << " vs " << r.method_b << ": max " << r.tolerance_kind << " deviation "
                  << r.max_deviation << " (tolerance " << r.tolerance << ") " << (r.pass ? "PASS" : "FAIL") << "\n";
    }
    nlohmann::json report = {{"pass", res.pass}, {"pairs", std::move(pairs)}};
    std::ofstream(out_file(o, "report.json")) << report.dump(2) << "\n";
    return res.pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Exact moment dynamics for Poisson squeeze jumps, with Fock and Monte Carlo cross-checks"};
    app.require_subcommand(1);
    Options o;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "run configuration (JSON)")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", o.out, "output directory");
        sub->add_option("--order", o.order, "moment order M");
        sub->add_option("--tmax", o.tmax, "final time");
        sub->add_option("--steps", o.steps, "number of grid intervals");
        sub->add_option("--cutoff", o.cutoff, "per-mode Fock cutoff");
        sub->add_option("--trajectories", o.trajectories, "Monte Carlo trajectories");
        sub->add_option("--seed", o.seed, "Monte Carlo seed");
        sub->add_flag("--strict", o.strict, "treat Fock leakage above 1e-6 as an error");
        sub->add_option("--threads", o.threads, "Monte Carlo worker threads");
    };

    auto* validate = app.add_subcommand("validate", "report generator residuals and growth indicators");
    auto* propagate = app.add_subcommand("propagate", "exact moment trajectory");
    auto* oracle = app.add_subcommand("oracle", "truncated Fock-space master equation");
    auto* mc = app.add_subcommand("mc", "Monte Carlo over Poisson jump trajectories");
    auto* compare = app.add_subcommand("compare", "run several methods and compare them");
    for (auto* sub : {validate, propagate, oracle, mc, compare}) add_common(sub);
    compare->add_option("--methods", o.methods, "comma-separated subset of propagator,fock,mc");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*validate) return cmd_validate(o);
        if (*propagate) return cmd_propagate(o);
        if (*oracle) return cmd_oracle(o);
        if (*mc) return cmd_mc(o);
        if (*compare) return cmd_compare(o);
    } catch (const Error& e) {
        std::cerr << e.what() << "\n";
        return is_configuration_error(e.code()) ? 2 : 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 2;
}
