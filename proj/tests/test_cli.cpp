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

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sqzmoments/cli/config.hpp"
#include "sqzmoments/cli/harness.hpp"

namespace {

using namespace sqz;
using namespace sqz::cli;
namespace fs = std::filesystem;

const std::string kConfigs = SQZ_CONFIG_DIR;
const std::string kCli = SQZ_CLI_PATH;

RunConfig load(const std::string& name) { return parse_config_text(read_file(kConfigs + "/" + name)); }

std::string csv_of(const Series& s) {
    std::ostringstream os;
    write_series_csv(os, s);
    return os.str();
}

int run_cli(const std::string& args) {
    const std::string cmd = kCli + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("sqzmoments_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

ErrorCode parse_code(const std::string& text) {
    try {
        parse_config_text(text);
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::InvalidInput;
}

TEST(Config, RoundTripAllSamples) {
    for (const auto& entry : fs::directory_iterator(kConfigs)) {
        const RunConfig cfg = parse_config_text(read_file(entry.path().string()));
        EXPECT_TRUE(parse_config_text(emit_config(cfg)) == cfg) << entry.path();
        EXPECT_EQ(config_hash(cfg), config_hash(parse_config_text(emit_config(cfg))));
    }
}

TEST(Config, RoundTripGaussianPure) {
    RunConfig cfg = load("squeeze_vs_fock.json");
    cfg.initial_state.kind = "gaussian-pure";
    cfg.initial_state.squeeze_h = squeeze_h(1, 0, 0.15);
    cfg.seed = 18446744073709551615ULL;
    const RunConfig back = parse_config_text(emit_config(cfg));
    EXPECT_TRUE(back == cfg);
    EXPECT_NO_THROW(validate_run(back));
}

TEST(Config, ZeroGeneratorIsIdentity) {
    const ValidatedRun run = validate_run(load("zero_generator.json"));
    EXPECT_EQ(run.channels[0].generator.jump(), CMatrix(CMatrix::Identity(2, 2)));
}

TEST(Config, SqueezeMatchesValidatedExample) {
    const ValidatedRun run = validate_run(load("squeeze_closed_form.json"));
    const CMatrix& s = run.channels[0].generator.jump();
    EXPECT_NEAR(s(0, 0).real(), 1.1276259652063807, 1e-14);
    EXPECT_NEAR(s(0, 1).real(), -0.5210953054937474, 1e-14);
}

TEST(Config, SymmetryViolation) {
    try {
        validate_run(load("asymmetric_invalid.json"));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::SymmetryViolation);
        const std::string msg = e.what();
        EXPECT_NE(msg.find("channels[0]"), std::string::npos) << msg;
        EXPECT_EQ(msg.find("error:"), msg.rfind("error:")) << "prefix repeated: " << msg;
    }
}

TEST(Config, ParseErrorsCarryContext) {
    try {
        parse_config_text("{\n  \"modes\": 1,\n  \"channels\": [\n");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::Parse);
        EXPECT_NE(std::string(e.what()).find("line"), std::string::npos) << e.what();
    }
    const std::string bad_entry =
        R"({"modes": 1, "channels": [{"rate": 1, "H": [[[0, 0], [0, 0]], [[0, 0], "x"]]}],
            "initial_state": {"kind": "vacuum"}, "time": {"t_max": 1, "steps": 1}})";
    try {
        parse_config_text(bad_entry);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::Parse);
        EXPECT_NE(std::string(e.what()).find("channels[0].H[1][1]"), std::string::npos) << e.what();
    }
    EXPECT_EQ(parse_code(R"({"modes": 1})"), ErrorCode::Parse);
    EXPECT_EQ(parse_code(R"([1, 2])"), ErrorCode::Parse);
}

TEST(Config, ValidationErrors) {
    RunConfig cfg = load("zero_generator.json");
    cfg.steps = 0;
    EXPECT_THROW(validate_run(cfg), Error);
    cfg = load("zero_generator.json");
    cfg.channels.clear();
    EXPECT_THROW(validate_run(cfg), Error);
    cfg = load("zero_generator.json");
    cfg.initial_state = StateConfig{"fock", {}, std::nullopt, {38}};
    EXPECT_THROW(validate_run(cfg), Error);
    cfg.initial_state.occupations = {2};
    EXPECT_NO_THROW(validate_run(cfg));
    cfg.channels[0].h(0, 0) = Complex(0.0, 1.0);
    cfg.channels[0].h(1, 1) = Complex(0.0, 1.0);
    try {
        validate_run(cfg);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::TildeViolation);
    }
}

TEST(Validate, SpectralRadius) {
    const ValidationReport sq = run_validate(load("squeeze_closed_form.json"));
    ASSERT_TRUE(sq.valid);
    EXPECT_NEAR(sq.channels[0].residuals.spectral_radius, 1.6487212707001282, 1e-12);
    const ValidationReport rot = run_validate(load("rotation_dephasing.json"));
    ASSERT_TRUE(rot.valid);
    EXPECT_NEAR(rot.channels[0].residuals.spectral_radius, 1.0, 1e-14);
    const ValidationReport bad = run_validate(load("asymmetric_invalid.json"));
    EXPECT_FALSE(bad.valid);
    EXPECT_GT(bad.channels[0].residuals.symmetry, 0.0);
    EXPECT_EQ(validation_json(bad)["valid"], false);
}

TEST(Propagate, ZeroGeneratorRowsConstant) {
    const ValidatedRun run = validate_run(load("zero_generator.json"));
    const Series s = run_propagate(run);
    for (const auto& v : s.values) EXPECT_EQ(v.data, s.values.front().data);
}

TEST(Propagate, ClosedFormColumns) {
    Series rot = run_propagate(validate_run(load("rotation_dephasing.json")));
    EXPECT_NEAR(rot.values.back().data(0).real(), 0.1353352832366127, 1e-12);
    Series sq = run_propagate(validate_run(load("squeeze_closed_form.json")));
    EXPECT_NEAR(sq.values.back().data(0).real(), 0.6747120037358997, 1e-12);
}

TEST(Csv, HeaderAndDeterminism) {
    const ValidatedRun run = validate_run(load("two_channel_mc.json"));
    RunConfig small = run.raw;
    small.trajectories = 5000;
    const ValidatedRun r2 = validate_run(small);
    const std::string a = csv_of(run_mc(r2));
    const std::string b = csv_of(run_mc(r2, 2));
    EXPECT_EQ(a, b);
    const std::string header = a.substr(0, a.find('\n'));
    EXPECT_EQ(header.rfind("t,mu[a1.a1].re,mu[a1.a1].im,mu[a1.a1+].re", 0), 0u) << header;
    EXPECT_NE(header.find("se[a1+.a1+].im"), std::string::npos);
    const std::string p = csv_of(run_propagate(run));
    EXPECT_EQ(p, csv_of(run_propagate(run)));
    // 17 significant digits survive a text round trip.
    std::istringstream in(p);
    std::string line;
    std::getline(in, line);
    std::getline(in, line);
    std::getline(in, line);
    const std::string field = line.substr(line.find(',') + 1, line.find(',', line.find(',') + 1) - line.find(',') - 1);
    EXPECT_EQ(std::stod(field), run_propagate(run).values[1].data(0).real());
}

TEST(Compare, PassMirrorsInequality) {
    const ValidatedRun run = validate_run(load("squeeze_vs_fock.json"));
    const CompareOutcome out = run_compare(run, parse_methods("propagator,fock"));
    ASSERT_EQ(out.reports.size(), 1u);
    const ComparisonReport& r = out.reports[0];
    double worst = 0.0;
    for (const auto& row : r.rows) {
        EXPECT_DOUBLE_EQ(row.deviation, relative_deviation(row.a, row.b));
        worst = std::max(worst, row.deviation);
    }
    EXPECT_EQ(worst, r.max_deviation);
    EXPECT_EQ(r.pass, r.max_deviation <= r.tolerance);
    EXPECT_TRUE(r.pass);
    EXPECT_EQ(r.tolerance, 1e-4);
    EXPECT_EQ(r.config_hash, config_hash(run.raw));

    ComparisonReport tight = compare_series(out.series.at("propagator"), out.series.at("fock"), run.raw);
    EXPECT_EQ(tight.max_deviation, r.max_deviation);
    const nlohmann::json j = report_json(r);
    EXPECT_EQ(j["pass"], r.pass);
    EXPECT_EQ(j["metadata"]["config_hash"], r.config_hash);
}

TEST(Compare, ZeroGeneratorAllMethods) {
    const ValidatedRun run = validate_run(load("zero_generator.json"));
    const CompareOutcome out = run_compare(run, parse_methods("mc,fock,propagator"));
    ASSERT_EQ(out.reports.size(), 3u);
    EXPECT_TRUE(out.pass);
    for (const auto& r : out.reports) EXPECT_LE(r.max_abs_deviation, 1e-12) << r.method_a << "/" << r.method_b;
}

TEST(Compare, MethodErrors) {
    EXPECT_THROW(parse_methods("propagator,exact"), Error);
    const ValidatedRun run = validate_run(load("zero_generator.json"));
    EXPECT_THROW(run_compare(run, {"propagator"}), Error);
    RunConfig tiny = run.raw;
    tiny.cutoff = 3;
    try {
        run_compare(validate_run(tiny), {"propagator", "fock"});
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("[fock]"), std::string::npos) << e.what();
    }
}

TEST(Deviation, Metrics) {
    EXPECT_NEAR(relative_deviation(1.0, 1.1), 0.1 / 1.1, 1e-15);
    EXPECT_DOUBLE_EQ(relative_deviation(0.0, 0.0), 0.0);
    EXPECT_DOUBLE_EQ(stderr_deviation(Complex(1.0, 0.0), Complex(1.2, 0.1), 0.1, 0.1), 2.0);
    EXPECT_DOUBLE_EQ(stderr_deviation(1.0, 1.0, 0.0, 0.0), 0.0);
}

TEST(Binary, ExitCodes) {
    const fs::path out = scratch("exit");
    EXPECT_EQ(run_cli("validate --config " + kConfigs + "/squeeze_closed_form.json"), 0);
    EXPECT_EQ(run_cli("validate --config " + kConfigs + "/asymmetric_invalid.json"), 2);
    EXPECT_EQ(run_cli("propagate --config " + kConfigs + "/asymmetric_invalid.json --out " + out.string()), 2);
    EXPECT_EQ(run_cli("propagate --config " + kConfigs + "/rotation_dephasing.json --out " + out.string()), 0);
    EXPECT_TRUE(fs::exists(out / "propagator.csv"));
    EXPECT_EQ(run_cli("propagate --config /nonexistent.json"), 2);
    EXPECT_EQ(run_cli("frobnicate"), 2);
    // Tolerance failure: cutoff 50 truncates this state's Fock tail by ~6e-4.
    EXPECT_EQ(run_cli("compare --config " + kConfigs + "/two_channel_mc.json --methods propagator,fock --cutoff 50 " +
                      "--out " + out.string()),
              1);
    EXPECT_TRUE(fs::exists(out / "report.json"));
    // Capacity: Fock space above the cap.
    EXPECT_EQ(run_cli("oracle --config " + kConfigs + "/zero_generator.json --cutoff 5000 --out " + out.string()), 3);
    // Overflow of the moments is a numerical error.
    // <a> = i starts on the growing eigenvector of the squeeze.
    RunConfig grow = load("squeeze_closed_form.json");
    grow.initial_state.alpha = {Complex(0.0, 1.0)};
    grow.t_max = 2000.0;
    grow.steps = 2;
    std::ofstream(out / "grow.json") << emit_config(grow);
    EXPECT_EQ(run_cli("propagate --config " + (out / "grow.json").string() + " --out " + out.string()), 3);
}

TEST(Binary, CapacityOverride) {
    const fs::path out = scratch("cap");
    const std::string cmd = "SQZ_CAPACITY=8 " + kCli + " oracle --config " + kConfigs +
                            "/zero_generator.json --out " + out.string() + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    EXPECT_EQ(WEXITSTATUS(status), 3);
    const std::string bad = "SQZ_CAPACITY=abc " + kCli + " propagate --config " + kConfigs +
                            "/zero_generator.json --out " + out.string() + " > /dev/null 2>&1";
    EXPECT_EQ(WEXITSTATUS(std::system(bad.c_str())), 2);
}

TEST(Binary, CompareArtifactsDeterministic) {
    const fs::path a = scratch("det_a");
    const fs::path b = scratch("det_b");
    const std::string base = "compare --config " + kConfigs + "/two_channel_mc.json --methods propagator,mc " +
                             "--trajectories 8000 --out ";
    ASSERT_EQ(run_cli(base + a.string()), 0);
    ASSERT_EQ(run_cli(base + b.string() + " --threads 2"), 0);
    for (const char* f : {"mc.csv", "propagator.csv", "compare_propagator_mc.csv", "report.json"}) {
        EXPECT_EQ(read_file((a / f).string()), read_file((b / f).string())) << f;
    }
}

}  // namespace
