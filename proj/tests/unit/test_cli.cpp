#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "perturblab/cli.hpp"

using namespace perturblab;
using namespace perturblab::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("perturblab_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string joined(const ValidationReport& r) {
  std::string s;
  for (const auto& e : r.errors) s += e + "\n";
  return s;
}

ExperimentConfig small_cusp(const fs::path& dir) {
  auto c = default_config("cusp-diagram");
  c.params["grid"] = {11, 9};
  c.output_dir = dir.string();
  return c;
}

int shell(const std::string& cmd) {
  const int st = std::system((cmd + " >/dev/null 2>&1").c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

}  // namespace

TEST_CASE("every experiment has a preset") {
  CHECK(experiment_names().size() == 13);
  for (const auto& n : experiment_names()) {
    const auto c = default_config(n);
    CHECK(c.experiment == n);
    CHECK(c.params.is_object());
  }
  CHECK_THROWS_AS(default_config("nope"), ConfigError);
}

TEST_CASE("validation diagnostics") {
  SUBCASE("minimal file") {
    const auto r = validate_text(R"({"experiment": "cusp-diagram"})");
    CHECK(r.ok);
    REQUIRE(r.config);
    CHECK(r.config->params["grid"] == nlohmann::json({101, 101}));
  }
  SUBCASE("unknown experiment names the nearest one") {
    CHECK(nearest_experiment("golden-brakeup") == "golden-breakup");
    CHECK(nearest_experiment("tb_diagram") == "tb-diagram");
    const auto r = validate_text("{\n  \"experiment\": \"hopf-dely\"\n}", "run.json");
    CHECK_FALSE(r.ok);
    CHECK(joined(r).find("run.json:2: experiment") != std::string::npos);
    CHECK(joined(r).find("did you mean 'hopf-delay'") != std::string::npos);
  }
  SUBCASE("missing eps list") {
    const auto r = validate_text("{\n\"experiment\": \"vdp-relaxation\",\n\"params\": {}\n}", "v.json");
    CHECK_FALSE(r.ok);
    CHECK(joined(r).find("v.json:3: params.eps") != std::string::npos);
    CHECK(joined(r).find("missing") != std::string::npos);
    CHECK_FALSE(validate_text(R"({"experiment": "tihonov", "params": {"eps": []}})").ok);
    CHECK(validate_text(R"({"experiment": "tihonov", "params": {"eps": [0.1]}})").ok);
  }
  SUBCASE("unknown keys are rejected") {
    const auto r = validate_text("{\n\"experiment\": \"cusp-diagram\",\n\"formts\": [\"csv\"],\n"
                                 "\"params\": {\n  \"gird\": [3, 3]\n}\n}",
                                 "c.json");
    CHECK_FALSE(r.ok);
    const auto s = joined(r);
    CHECK(s.find("c.json:3: formts: unknown key; did you mean 'formats'?") != std::string::npos);
    CHECK(s.find("c.json:5: params.gird") != std::string::npos);
    CHECK(s.find("'grid'") != std::string::npos);
  }
  SUBCASE("types and values") {
    CHECK_FALSE(validate_text(R"({"experiment": "cusp-diagram", "params": {"grid": [3.5, 3]}})").ok);
    CHECK_FALSE(validate_text(R"({"experiment": "golden-breakup", "params": {"K": "big"}})").ok);
    CHECK_FALSE(validate_text(R"({"experiment": "gevrey-truncation", "params": {"amplitudes": "x"}})").ok);
    CHECK_FALSE(validate_text(R"({"experiment": "cusp-diagram", "formats": ["png"]})").ok);
    CHECK_FALSE(validate_text(R"({"experiment": "cusp-diagram", "rng_seed": -1})").ok);
    CHECK_FALSE(validate_text(R"({"params": {}})").ok);
    CHECK(validate_text(R"({"experiment": "golden-breakup", "params": {"K": 256.0}})").config->params["K"] == 256);
  }
  SUBCASE("malformed file") {
    const auto r = validate_text("{\n\"experiment\": \"cusp-diagram\",\n}", "m.json");
    CHECK_FALSE(r.ok);
    CHECK(joined(r).find("m.json:3") != std::string::npos);
    CHECK(joined(r).find("malformed") != std::string::npos);
    CHECK_THROWS_AS(validate("/nonexistent/dir/config.json"), ConfigError);
  }
}

TEST_CASE("command-line values override the file") {
  const std::string text = R"({"experiment": "cusp-diagram", "output_dir": "a", "formats": ["svg", "csv"], "rng_seed": 4})";
  const auto plain = parse_config(text);
  CHECK(plain.output_dir == "a");
  CHECK(plain.formats == std::vector<std::string>{"csv", "svg"});
  CHECK(plain.rng_seed == 4);
  Overrides o;
  o.output_dir = "b";
  o.formats = parse_formats("json, csv");
  o.rng_seed = 9;
  const auto c = parse_config(text, "t", o);
  CHECK(c.output_dir == "b");
  CHECK(c.formats == std::vector<std::string>{"csv", "json"});
  CHECK(c.rng_seed == 9);
  o.experiment = "tb-diagram";
  CHECK(parse_config(text, "t", o).experiment == "tb-diagram");
  o.formats = std::vector<std::string>{"pdf"};
  CHECK_THROWS_AS(parse_config(text, "t", o), ConfigError);
  CHECK_THROWS_AS(resolve_config(std::nullopt, Overrides{}), ConfigError);
  CHECK_THROWS_AS(parse_config("[1, 2]"), ConfigError);
}

TEST_CASE("runs are byte-identical and emit a manifest") {
  const auto d1 = scratch("det1"), d2 = scratch("det2");
  const auto r1 = run(small_cusp(d1));
  const auto r2 = run(small_cusp(d2));
  REQUIRE(r1.exit_code == kOk);
  REQUIRE(r2.exit_code == kOk);
  CHECK(r1.files == std::vector<std::string>{"cusp-diagram.csv", "cusp-diagram.json", "cusp-diagram.svg",
                                             "manifest.json"});
  for (const auto& f : r1.files) {
    if (f == "manifest.json") continue;
    CHECK(slurp(d1 / f) == slurp(d2 / f));
  }
  const auto manifest = nlohmann::json::parse(slurp(d1 / "manifest.json"));
  CHECK(manifest["config"]["params"]["grid"] == nlohmann::json({11, 9}));
  CHECK(manifest["config"]["rng_seed"] == 1);
  CHECK(manifest["status"] == "ok");
  CHECK(manifest["config"]["formats"] == nlohmann::json({"csv", "json", "svg"}));
  // csv has one row per grid point plus the header
  const std::string csv = slurp(d1 / "cusp-diagram.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 11 * 9);
  const std::string svg = slurp(d1 / "cusp-diagram.svg");
  CHECK(svg.find("viewBox=\"0 0 800 600\"") != std::string::npos);
  CHECK(svg.find("r=\"0.6\"") != std::string::npos);
  for (const auto& e : fs::directory_iterator(d1)) CHECK(e.path().string().find(".tmp.") == std::string::npos);

  auto only_csv = small_cusp(scratch("det3"));
  only_csv.formats = {"csv"};
  CHECK(run(only_csv).files == std::vector<std::string>{"cusp-diagram.csv", "manifest.json"});
}

TEST_CASE("cusp diagram counts") {
  auto c = small_cusp(scratch("cusp"));
  c.formats = {"json"};
  const auto s = run_experiment(c).summary;
  int total = 0;
  for (const auto& [k, v] : s["equilibrium_counts"].items()) total += v.get<int>();
  CHECK(total == 99);
  CHECK(s["equilibrium_counts"]["3"].get<int>() > 0);
  CHECK(s["equilibrium_counts"]["1"].get<int>() > 0);
}

TEST_CASE("portrait seeds follow rng_seed") {
  auto c = default_config("standard-map-portrait");
  c.params["eps"] = {0.5};
  c.params["seeds"] = 4;
  c.params["iterations"] = 50;
  c.formats = {"csv"};
  const auto a = run_experiment(c), b = run_experiment(c);
  REQUIRE(a.artifacts.size() == 1);
  CHECK(a.artifacts[0].file == "standard-map-portrait_eps0.5.csv");
  CHECK(a.artifacts[0].content == b.artifacts[0].content);
  c.rng_seed = 2;
  CHECK(run_experiment(c).artifacts[0].content != a.artifacts[0].content);
  // worker count does not change the output
  setenv("PERTURBLAB_THREADS", "1", 1);
  auto f = default_config("forced-oscillator-portrait");
  f.params["eps"] = {0.005};
  f.params["seeds"] = 3;
  f.params["iterations"] = 20;
  f.formats = {"csv"};
  const auto one = run_experiment(f);
  setenv("PERTURBLAB_THREADS", "3", 1);
  const auto three = run_experiment(f);
  unsetenv("PERTURBLAB_THREADS");
  CHECK(one.artifacts[0].content == three.artifacts[0].content);
}

TEST_CASE("exit codes") {
  auto bad = default_config("averaging-demo");
  bad.params["eps"] = {0.1, -0.01};
  bad.output_dir = scratch("exit1").string();
  const auto r1 = run(bad);
  CHECK(r1.exit_code == kConfigError);
  const auto m = nlohmann::json::parse(slurp(fs::path(bad.output_dir) / "manifest.json"));
  CHECK(m["status"] == "config_error");

  auto num = default_config("golden-breakup");
  num.params["K"] = 32;
  num.params["eps_range"] = {0.1, 0.2};
  num.output_dir = scratch("exit2").string();
  const auto r2 = run(num);
  CHECK(r2.exit_code == kNumericalFailure);
  CHECK(r2.message.find("no transition") != std::string::npos);

  auto acc = default_config("acceptance-suite");
  acc.params["criteria"] = {99};
  acc.output_dir = scratch("exit3").string();
  CHECK(run(acc).exit_code == kConfigError);
  acc.params["criteria"] = {11};
  const auto r3 = run(acc);
  CHECK(r3.exit_code == kOk);
  CHECK(r3.summary["all_passed"] == true);
}

TEST_CASE("small experiments report their checks") {
  auto lie = default_config("lie-triangle-demo");
  lie.formats = {"json"};
  const auto s = run_experiment(lie).summary;
  CHECK(s["K1_vanishes"] == true);
  CHECK(s["K2_is_minus_half_I"] == true);
  CHECK(s["first_order_relation"] == true);
  CHECK(s["second_order_relation"] == true);

  auto gev = default_config("gevrey-truncation");
  gev.formats = {"json"};
  const auto g = run_experiment(gev).summary;
  CHECK(g["k_star"] == 10);
  gev.params["amplitudes"] = "expansion";
  gev.params["order"] = 18;
  const auto ge = run_experiment(gev).summary;
  CHECK(ge["k_star"].get<int>() >= 8);
  CHECK(ge["k_star"].get<int>() <= 12);
}

TEST_CASE("atomic writes and csv shape") {
  const auto d = scratch("atomic");
  write_atomic((d / "sub" / "x.txt").string(), "one");
  write_atomic((d / "sub" / "x.txt").string(), "two");
  CHECK(slurp(d / "sub" / "x.txt") == "two");
  int n = 0;
  for (const auto& e : fs::directory_iterator(d / "sub")) {
    (void)e;
    ++n;
  }
  CHECK(n == 1);
}

TEST_CASE("command-line tool") {
  const std::string exe = PERTURBLAB_CLI_PATH;
  const auto d = scratch("tool");
  fs::create_directories(d);
  CHECK(shell(exe + " list") == 0);
  CHECK(shell(exe + " no-such-experiment --out " + d.string()) == kConfigError);
  CHECK(shell(exe + " cusp-diagram --format csv,bogus --out " + d.string()) == kConfigError);
  {
    std::ofstream f(d / "ok.json");
    f << R"({"experiment": "cusp-diagram", "params": {"grid": [5, 5]}, "formats": ["json"]})";
  }
  {
    std::ofstream f(d / "bad.json");
    f << R"({"experiment": "averaging-demo", "params": {}})";
  }
  CHECK(shell(exe + " validate " + (d / "ok.json").string()) == 0);
  CHECK(shell(exe + " validate " + (d / "bad.json").string()) == kConfigError);
  CHECK(shell(exe + " --config " + (d / "ok.json").string() + " --out " + (d / "run").string()) == 0);
  CHECK(fs::exists(d / "run" / "cusp-diagram.json"));
  CHECK_FALSE(fs::exists(d / "run" / "cusp-diagram.csv"));
  CHECK(fs::exists(d / "run" / "manifest.json"));
  CHECK(shell(exe + " cusp-diagram --config " + (d / "ok.json").string() + " --seed 7 --out " +
              (d / "run2").string()) == 0);
  const auto m = nlohmann::json::parse(slurp(d / "run2" / "manifest.json"));
  CHECK(m["config"]["rng_seed"] == 7);
}
