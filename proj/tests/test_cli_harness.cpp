#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "catch_amalgamated.hpp"
#include "plate/experiment.hpp"

using namespace plate;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Small quartic run: 32^2 grid, a couple of seconds of simulated time.
json tiny_config() {
    return {{"name", "tiny"},
            {"grid", {{"dim", 2}, {"half_length_over_pi", 8.0}, {"points_per_axis", 32}}},
            {"model", {{"name", "quartic"}, {"params", {{"beta", 1.0}}}}},
            {"initial_data", {{"u0", {{"type", "gaussian"}, {"amplitude", 0.01}, {"width", 2.0}}}}},
            {"integrator", {{"dt", 0.1}}},
            {"t_end", 2.0},
            {"checkpoints", {{"count", 20}, {"spacing", "linear"}}},
            {"analysis", {{"fit_windows", {{0.5, 2.0}}}, {"rates", {"u:k=0:L2"}}, {"fields", "all"}}}};
}

struct TempDir {
    fs::path path;
    TempDir() {
        std::random_device rd;
        path = fs::temp_directory_path() / ("plate_cli_" + std::to_string(rd()) + std::to_string(rd()));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("config parsing rejects unknown keys at every level") {
    REQUIRE_NOTHROW(RunConfig::from_json(tiny_config()));
    for (const char* path : {"/bogus", "/grid/bogus", "/model/bogus", "/integrator/bogus", "/analysis/bogus",
                             "/checkpoints/bogus", "/initial_data/bogus"}) {
        json doc = tiny_config();
        doc[json::json_pointer(path)] = 1;
        CHECK_THROWS_AS(RunConfig::from_json(doc), ConfigError);
    }
    json doc = tiny_config();
    doc.erase("t_end");
    CHECK_THROWS_AS(RunConfig::from_json(doc), ConfigError);
    doc = tiny_config();
    doc["grid"]["half_length"] = 10.0;
    CHECK_THROWS_AS(RunConfig::from_json(doc), ConfigError);
    CHECK_THROWS_AS(parse_json_text("{\"a\": 1,\n \"b\": }", "inline"), ConfigError);
}

TEST_CASE("JSON round trip preserves the configuration") {
    for (const auto& name : preset_names()) {
        RunConfig c = preset(name);
        json j = c.to_json();
        CHECK(RunConfig::from_json(j).to_json() == j);
    }
}

TEST_CASE("overrides write dotted keys") {
    json doc = tiny_config();
    apply_override(doc, "integrator.dt=0.05");
    apply_override(doc, "model.params.beta=2");
    apply_override(doc, "name=renamed");
    apply_override(doc, "analysis.fit_windows.0.1=1.5");
    CHECK(doc["integrator"]["dt"].get<double>() == 0.05);
    CHECK(doc["model"]["params"]["beta"].get<int>() == 2);
    CHECK(doc["name"].get<std::string>() == "renamed");
    CHECK(doc["analysis"]["fit_windows"][0][1].get<double>() == 1.5);
    CHECK_THROWS_AS(apply_override(doc, "no_equals"), ConfigError);
    CHECK_THROWS_AS(apply_override(doc, "=3"), ConfigError);
    CHECK_THROWS_AS(apply_override(doc, "t_end.x=3"), ConfigError);
    CHECK_THROWS_AS(apply_override(doc, "analysis.fit_windows.7.0=1"), ConfigError);
    CHECK_THROWS_AS(apply_override(doc, "a..b=1"), ConfigError);
}

TEST_CASE("presets carry their documented parameters") {
    RunConfig c = preset("linear_decay_n2");
    CHECK(c.dim == 2);
    CHECK_THAT(c.half_length, WithinRel(32.0 * std::numbers::pi, 1e-15));
    CHECK(c.points == 256);
    CHECK(c.t_end == 500.0);
    CHECK(c.model == "linear_isotropic");

    RunConfig z = preset("moment_zero_gain");
    CHECK(z.u0.value("zero_mean", false));

    RunConfig nl = preset("nonlinear_smalldata_n2");
    CHECK(nl.model == "quartic");
    CHECK(nl.t_end <= nl.validity_limit());

    CHECK(preset_names().size() == 8);
    CHECK_THROWS_AS(preset("no_such_preset"), ConfigError);
}

TEST_CASE("torus validity window is enforced unless overridden") {
    json doc = tiny_config();
    // (8)^4 / 100 = 40.96
    CHECK_THAT(RunConfig::from_json(doc).validity_limit(), WithinRel(40.96, 1e-12));
    doc["t_end"] = 41.0;
    doc["analysis"]["fit_windows"] = json::array();
    CHECK_THROWS_AS(RunConfig::from_json(doc), ConfigError);
    doc["allow_long_time"] = true;
    CHECK_NOTHROW(RunConfig::from_json(doc));
}

TEST_CASE("checkpoint times are snapped to the step and include both ends") {
    RunConfig c = RunConfig::from_json(tiny_config());
    auto ts = checkpoint_times(c);
    CHECK(ts.front() == 0.0);
    CHECK(ts.back() == c.t_end);
    CHECK(std::is_sorted(ts.begin(), ts.end()));
    for (double t : ts) CHECK_THAT(std::remainder(t, c.integrator.dt), WithinAbs(0.0, 1e-12));

    RunConfig p = preset("linear_decay_n2");
    auto lt = checkpoint_times(p);
    CHECK(lt.size() >= 50);
    CHECK(lt[1] == 1.0);
}

TEST_CASE("run statuses map onto exit codes") {
    TempDir tmp;
    SECTION("success writes the artifact set") {
        RunResult r = run_from_json(tiny_config(), {}, tmp.path / "ok");
        REQUIRE(r.status == kExitOk);
        for (const char* f : {"manifest.json", "norms.csv", "rates.csv", "diagnostics.csv"})
            CHECK(fs::exists(tmp.path / "ok" / f));
        json m = read_manifest(tmp.path / "ok");
        CHECK(m["status"].get<int>() == 0);
        CHECK(m["validation"]["passed"].get<bool>());
        CHECK(!m["fields"].empty());
    }
    SECTION("configuration error") {
        RunResult r = run_from_json(tiny_config(), {"integrator.dt=-1"}, tmp.path / "cfg");
        CHECK(r.status == kExitConfig);
        r = run_from_json(tiny_config(), {"model.name=no_such_model"}, tmp.path / "cfg2");
        CHECK(r.status == kExitConfig);
    }
    SECTION("structural violation") {
        RunResult r = run_from_json(tiny_config(),
                                    {"model.name=anisotropic", "model.params={\"strength\": -2}"}, tmp.path / "st");
        CHECK(r.status == kExitStructure);
        CHECK(fs::exists(tmp.path / "st" / "manifest.json"));
    }
    SECTION("bound violation records when it happened") {
        RunResult r = run_from_json(tiny_config(), {"initial_data.u0.amplitude=10"}, tmp.path / "bd");
        CHECK(r.status == kExitBound);
        json m = read_manifest(tmp.path / "bd");
        REQUIRE(m.contains("bound_violation"));
        CHECK(m["bound_violation"]["time"].get<double>() >= 0.0);
        CHECK(m["bound_violation"]["hessian"].get<double>() > m["bound_violation"]["bound"].get<double>());
    }
    SECTION("too few samples in the fit window is an analysis failure") {
        RunResult r = run_from_json(tiny_config(), {"analysis.fit_windows=[[1.9, 2.0]]"}, tmp.path / "an");
        CHECK(r.status == kExitAnalysis);
    }
}

TEST_CASE("identical configurations produce identical outputs") {
    TempDir tmp;
    json doc = tiny_config();
    doc["initial_data"]["u1"] = {{"type", "gaussian"}, {"amplitude", 0.005}, {"width", 3.0}};
    REQUIRE(run_from_json(doc, {}, tmp.path / "a").status == kExitOk);
    REQUIRE(run_from_json(doc, {}, tmp.path / "b").status == kExitOk);
    CHECK(slurp(tmp.path / "a" / "norms.csv") == slurp(tmp.path / "b" / "norms.csv"));
    CHECK(slurp(tmp.path / "a" / "rates.csv") == slurp(tmp.path / "b" / "rates.csv"));

    json cmp = compare_runs(tmp.path / "a", tmp.path / "b");
    CHECK(cmp["max_field_l2_diff"].get<double>() == 0.0);
    REQUIRE(!cmp["rates"].empty());
    for (const auto& r : cmp["rates"]) CHECK(r["difference"].get<double>() == 0.0);
}

TEST_CASE("compare reports differences and refuses mismatched grids") {
    TempDir tmp;
    REQUIRE(run_from_json(tiny_config(), {}, tmp.path / "a").status == kExitOk);
    REQUIRE(run_from_json(tiny_config(), {"model.params.beta=3"}, tmp.path / "b").status == kExitOk);
    REQUIRE(run_from_json(tiny_config(), {"grid.points_per_axis=16"}, tmp.path / "c").status == kExitOk);
    json cmp = compare_runs(tmp.path / "a", tmp.path / "b");
    CHECK(cmp["max_field_l2_diff"].get<double>() > 0.0);
    CHECK(cmp["fields"].size() == 21);
    CHECK_THROWS_AS(compare_runs(tmp.path / "a", tmp.path / "c"), InvalidInput);
    CHECK_THROWS_AS(compare_runs(tmp.path / "a", tmp.path / "missing"), InvalidInput);
}

TEST_CASE("sweeps run each value in its own directory") {
    TempDir tmp;
    auto entries = sweep(tiny_config(), {"analysis.fields=\"none\""}, "model.params.beta", {"0.5", "1", "2", "4"},
                         tmp.path, 3);
    REQUIRE(entries.size() == 4);
    std::set<fs::path> dirs;
    for (const auto& e : entries) dirs.insert(e.result.directory);
    CHECK(dirs.size() == 4);
    for (const auto& e : entries) CHECK(e.result.status == kExitOk);
    // threads must not perturb the runs
    auto serial = sweep(tiny_config(), {"analysis.fields=\"none\""}, "model.params.beta", {"2"}, tmp.path / "serial", 1);
    CHECK(slurp(serial[0].result.directory / "norms.csv") == slurp(entries[2].result.directory / "norms.csv"));
    CHECK(read_manifest(entries[2].result.directory)["config"]["model"]["params"]["beta"].get<double>() == 2.0);
}

TEST_CASE("fmt17 round-trips doubles") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-30.0, 30.0);
    for (int i = 0; i < 1000; ++i) {
        double v = std::exp(u(rng)) * (i % 2 ? 1.0 : -1.0);
        CHECK(std::stod(fmt17(v)) == v);
    }
    CHECK(fmt17(0.1) == "0.10000000000000001");
}
