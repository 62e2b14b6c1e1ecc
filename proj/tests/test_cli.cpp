#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <alifs/pipeline.hpp>

#include <filesystem>
#include <fstream>
#include <iterator>

using namespace alifs;
namespace fs = std::filesystem;

namespace {

const char* kArch = R"({
  "model": {"family": "arch1", "beta": 1.0, "lambda": 1.0},
  "run": {"seed": 3, "samples": 20000, "shards": 8}
})";

// Small Monte Carlo budgets keep the full pipeline fast.
RunConfig small(const std::string& text, const std::string& out) {
    RunConfig c = parse_config(text);
    c.run.out = out;
    c.verify.gelfand_paths = 2000;
    c.verify.martingale_paths = 2000;
    c.verify.identity_paths = 2000;
    c.verify.comparison_draws = 200;
    return c;
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("alifs_test_cli_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

const CheckResult* find(const std::vector<CheckResult>& cs, const std::string& name) {
    for (const auto& c : cs)
        if (c.name == name) return &c;
    return nullptr;
}

}  // namespace

TEST_CASE("theta grid parsing") {
    const auto g = parse_theta_grid("0.5:2:4");
    CHECK(g.lo == 0.5);
    CHECK(g.hi == 2.0);
    CHECK(g.n == 4);
    CHECK(g.points() == std::vector<double>{0.5, 1.0, 1.5, 2.0});
    CHECK(format_theta_grid(g) == "0.5:2:4");
    CHECK_THROWS_AS(parse_theta_grid("1:0:3"), ConfigError);
    CHECK_THROWS_AS(parse_theta_grid("0:1"), ConfigError);
    CHECK_THROWS_AS(parse_theta_grid("0:1:3x"), ConfigError);
}

TEST_CASE("config round trip") {
    const char* text = R"({
      "model": {"family": "custom_two_slope", "coupling": "independent",
                "a_minus": {"type": "two_point", "v1": -0.5, "p1": 0.5, "v2": 1.2},
                "a_plus": {"type": "uniform", "lo": 0.1, "hi": 2.0},
                "B": {"type": "gaussian", "mean": 0, "sd": 2},
                "perturbation": {"kind": "sine", "factor": 0.5}},
      "run": {"seed": 12, "burn_in": 500, "hill_k": 300, "theta_grid": "0:3:7"},
      "verify": {"strict": true, "gelfand_n": 10}
    })";
    const RunConfig c = parse_config(text);
    CHECK(c.model.family() == Family::CustomTwoSlope);
    CHECK(*c.run.seed == 12);
    CHECK(*c.run.burn_in == 500);
    CHECK(*c.run.hill_k == 300);
    CHECK(c.verify.strict);
    CHECK(c.verify.gelfand_n == 10);
    const Json once = config_to_json(c);
    const Json twice = config_to_json(config_from_json(once));
    CHECK(once.dump() == twice.dump());
    CHECK_FALSE(once["run"].contains("threads"));

    for (const char* fam : {R"({"family": "affine", "A": {"type": "point_mass", "value": 0.5}, "B": {"type": "pareto", "scale": 1, "alpha": 3}})",
                            R"({"family": "beverton_holt", "A": {"type": "lognormal", "mu": 0, "sigma": 1}, "B": {"type": "uniform", "lo": 1, "hi": 2}})",
                            R"({"family": "unit_interval_conjugate", "inner": {"map": "logistic", "A": {"type": "uniform", "lo": 1, "hi": 3}}})",
                            R"({"family": "ar1_arch1", "alpha": 0.5, "beta": 1, "lambda": 1})",
                            R"({"family": "lindley", "A": {"type": "point_mass", "value": 1}, "B": {"type": "gaussian"}})"}) {
        const Json m = model_to_json(model_from_json(Json::parse(fam)));
        CHECK(model_to_json(model_from_json(m)).dump() == m.dump());
    }
}

TEST_CASE("config errors carry a location") {
    try {
        parse_config("{\n  \"model\": {\"family\": \"arch1\",\n    \"beta\": 1 \"lambda\": 1}\n}", "bad.json");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("bad.json:3:") != std::string::npos);
    }
    try {
        parse_config(R"({"model": {"family": "arch1", "beta": 1, "lambda": 1}, "run": {"sampels": 10}})");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("run.sampels") != std::string::npos);
    }
    try {
        parse_config(R"({"model": {"family": "affine", "A": {"type": "cauchy"}, "B": {"type": "gaussian"}}})");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("model.A") != std::string::npos);
    }
    CHECK_THROWS_AS(load_config("/nonexistent/alifs.json"), Error);
}

TEST_CASE("analyze reports the spectral summary") {
    const RunConfig c = small(kArch, scratch("analyze").string());
    const auto res = cmd_analyze(c, false);
    const Json& a = res.report["analysis"];
    CHECK(res.report["schema"] == "alifs-report/1");
    CHECK(a["classification"]["case"] == "irreducible");
    CHECK(a["kappa"]["kappa"].get<double>() == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(a["rho_log_convex"].get<bool>());
    CHECK(a["drift_at_kappa"]["drift"].get<double>() == doctest::Approx(0.3648185772692609).epsilon(1e-6));
    CHECK(a["rho_grid"].size() == 41);
    CHECK_FALSE(a["degeneracy"]["flagged"].get<bool>());

    const auto sep = cmd_analyze(small(R"({"model": {"family": "ar1_arch1", "alpha": 1, "beta": 1, "lambda": 1,
        "Z": {"type": "uniform", "lo": -0.5, "hi": 0.5}}})", "unused"), false);
    CHECK(sep.report["analysis"]["classification"]["case"] == "separated");

    // deterministic unit slope: rho = 1 everywhere
    const auto deg = cmd_analyze(small(R"({"model": {"family": "affine", "A": {"type": "point_mass", "value": 1},
        "B": {"type": "point_mass", "value": 1}}})", "unused"), false);
    CHECK(deg.report["analysis"]["degeneracy"]["flagged"].get<bool>());
    CHECK(deg.report["analysis"]["kappa"]["error"] == "DegenerateSpectrum");
}

TEST_CASE("rho beyond the moment domain is reported as inf") {
    const auto r = cmd_analyze(small(R"({"model": {"family": "affine", "A": {"type": "pareto", "scale": 0.2, "alpha": 3},
        "B": {"type": "point_mass", "value": 1}}, "run": {"theta_grid": "0:4:5"}})", "unused"), false);
    const Json& g = r.report["analysis"]["rho_grid"];
    CHECK(g[3]["rho"] == "inf");
    CHECK(g[4]["rho"] == "inf");
    CHECK(g[2]["rho"].is_number());
}

TEST_CASE("simulate writes its artifacts") {
    const fs::path out = scratch("simulate");
    const RunConfig c = small(kArch, out.string());
    cmd_simulate(c);
    for (const char* f : {"samples.bin", "samples.csv", "tailcurve.csv", "report.json"}) CHECK(fs::exists(out / f));
    const auto x = read_samples_bin((out / "samples.bin").string());
    CHECK(x.size() == 20000);
    CHECK(fs::file_size(out / "samples.bin") == 8 * 20000);
    const std::string csv = slurp(out / "samples.csv");
    CHECK(csv.rfind("x\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 20001);
    const std::string tail = slurp(out / "tailcurve.csv");
    CHECK(tail.rfind("threshold,left,right,ci_lo,ci_hi,left_ci_lo,left_ci_hi\n", 0) == 0);
    const Json r = Json::parse(slurp(out / "report.json"));
    CHECK(r["simulation"]["certified"].get<bool>());
    fs::remove_all(out);
}

TEST_CASE("samples round trip through the binary format") {
    const fs::path p = scratch("bin");
    fs::create_directories(p);
    const std::vector<double> v = {0.0, -1.5, 1e300, -0.0, 3.141592653589793};
    write_samples_bin((p / "x.bin").string(), v);
    const auto w = read_samples_bin((p / "x.bin").string());
    REQUIRE(w.size() == v.size());
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(std::bit_cast<std::uint64_t>(w[i]) == std::bit_cast<std::uint64_t>(v[i]));
    // little endian: 1.0 = 0x3ff0000000000000
    write_samples_bin((p / "one.bin").string(), {1.0});
    const std::string b = slurp(p / "one.bin");
    CHECK(static_cast<unsigned char>(b[7]) == 0x3f);
    CHECK(static_cast<unsigned char>(b[6]) == 0xf0);
    CHECK(static_cast<unsigned char>(b[0]) == 0x00);
    fs::remove_all(p);
}

TEST_CASE("zero samples") {
    RunConfig c = small(kArch, scratch("zero").string());
    c.run.samples = 0;
    const auto r = cmd_simulate(c, false);
    CHECK(r.report["simulation"]["n"] == 0);
    CHECK(r.report["empirical"]["hill_right"]["error"] == "InsufficientTail");
}

TEST_CASE("seed is required for sampling commands") {
    RunConfig c = small(kArch, "unused");
    c.run.seed.reset();
    CHECK_THROWS_AS(cmd_simulate(c, false), ConfigError);
    CHECK_THROWS_AS(cmd_verify(c, false), ConfigError);
    CHECK_NOTHROW(cmd_analyze(c, false));
}

TEST_CASE("unwritable output directory") {
    const fs::path blocker = scratch("blocker");
    { std::ofstream(blocker) << "file"; }
    const RunConfig c = small(kArch, (blocker / "sub").string());
    CHECK_THROWS_AS(cmd_simulate(c), IoError);
    CHECK_THROWS_AS(cmd_analyze(c), IoError);
    fs::remove(blocker);
}

TEST_CASE("verify is deterministic across thread counts") {
    RunConfig c = small(kArch, scratch("verify").string());
    std::string first;
    for (unsigned t : {1u, 3u, 8u}) {
        c.run.threads = t;
        const auto r = cmd_verify(c);
        CHECK(r.exit_code == 0);
        const std::string s = slurp(fs::path(c.run.out) / "report.json");
        if (first.empty()) first = s;
        CHECK(s == first);
    }
    const Json r = Json::parse(first);
    CHECK(r["command"] == "verify");
    CHECK(r["summary"]["required_failed"] == 0);
    fs::remove_all(c.run.out);
}

TEST_CASE("verify checks for the irreducible example") {
    const auto r = cmd_verify(small(kArch, "unused"), false);
    for (const char* name : {"kappa_solver", "eigen_residual", "rho_log_convex", "drift_consistency", "al_bound",
                             "comparison_bound"}) {
        const auto* c = find(r.checks, name);
        REQUIRE(c != nullptr);
        CHECK(c->required);
        CHECK(c->status == CheckStatus::Pass);
    }
    REQUIRE(find(r.checks, "tail_constants_case1") != nullptr);
    CHECK(find(r.checks, "tail_constants_case1")->status == CheckStatus::Pass);
}

TEST_CASE("arithmetic sublaw marks the prediction not covered") {
    // the positive part of the minus slope is a single atom at 1.2
    const auto r = cmd_verify(small(R"({
      "model": {"family": "custom_two_slope",
                "a_minus": {"type": "two_point", "v1": -0.5, "p1": 0.5, "v2": 1.2},
                "a_plus": {"type": "two_point", "v1": 2.0, "p1": 0.5, "v2": 0.1},
                "B": {"type": "point_mass", "value": 1.0},
                "perturbation": {"kind": "random_sign"}},
      "run": {"seed": 7, "samples": 20000, "shards": 8}})", "unused"), false);
    const auto* a = find(r.checks, "tail_constants_case2a");
    REQUIRE(a != nullptr);
    CHECK(a->status == CheckStatus::NotCovered);
    CHECK(r.report["predictions"][0]["covered_by_theory"] == false);
    const auto* b = find(r.checks, "tail_constants_case2b");
    REQUIRE(b != nullptr);
    CHECK(b->status == CheckStatus::Pass);
}

TEST_CASE("strict mode turns advisory failures into a nonzero exit") {
    RunConfig c = small(kArch, "unused");
    c.run.hill_k = 9000;  // nearly the whole positive half: far from the tail, the Hill CI misses 2
    auto r = cmd_verify(c, false);
    REQUIRE(find(r.checks, "hill_right") != nullptr);
    CHECK(find(r.checks, "hill_right")->status == CheckStatus::Fail);
    CHECK(r.exit_code == 0);
    c.verify.strict = true;
    r = cmd_verify(c, false);
    CHECK(r.exit_code == 1);
}
