#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "weaksde/csv.hpp"
#include "weaksde/experiment.hpp"

using namespace weaksde;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "weaksde_tests" / "experiment" / name;
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string config_error_key(const json& j) {
  try {
    parse_config(j);
  } catch (const ConfigError& e) {
    return e.key;
  }
  return "<no error>";
}

const json kWeak = {{"experiment", "weak_order"}, {"seed", 5}, {"model", "tanh_sech"},
                    {"schemes", {"em", "skewed_em"}},  {"eps_list", {0.25, 0.125, 0.0625}},
                    {"n_paths", 3000}};
const json kSample = {{"experiment", "sample"}, {"seed", 6},        {"target", "bimodal_quartic"},
                      {"n_steps", 30000},       {"burn_in", 1000}, {"bins", 20}};
const json kSgd = {{"experiment", "sgd_stationary"}, {"seed", 7}, {"m1", 0.3}, {"m2", 20.0}, {"eps", 0.1},
                   {"n_steps", 30000},               {"burn_in", 1000}};
const json kSgld = {{"experiment", "sgld_beta"}, {"seed", 8},        {"m2", 10.0}, {"eps", 0.1},
                    {"n_steps", 30000},          {"burn_in", 2000}, {"variants", {"gaussian", "skewed", "adaptive_two_point"}}};
const json kMoments = {{"experiment", "moment_check"}, {"seed", 9}, {"n", 20000}};

}  // namespace

TEST_SUITE("experiment") {

TEST_CASE("validation errors name the offending key") {
  CHECK(config_error_key({{"experiment", "weak_order"}, {"model", "linear_additive"}}) == "seed");
  CHECK(config_error_key({{"seed", 1}}) == "experiment");
  CHECK(config_error_key({{"experiment", "frobnicate"}, {"seed", 1}}) == "experiment");
  json j = kWeak;
  j["n_pths"] = 10;
  CHECK(config_error_key(j) == "n_pths");
  j = kWeak;
  j["n_paths"] = "many";
  CHECK(config_error_key(j) == "n_paths");
  j = kWeak;
  j["seed"] = -1;
  CHECK(config_error_key(j) == "seed");
  j = kWeak;
  j["eps_list"] = {0.25, 0.2};
  CHECK(config_error_key(j) == "eps_list[1]");
  j = kWeak;
  j["eps_list"] = {0.125, 0.25};
  CHECK(config_error_key(j) == "eps_list");
  j = kWeak;
  j["schemes"] = {{{"scheme", "skewed_em"}, {"noise", {{"kind", "two_point_symmetric"}, {"amplitude", 2.0}}}}};
  CHECK(config_error_key(j) == "schemes[0].noise");
  j["schemes"] = {{{"scheme", "em"}, {"nosie", "gaussian"}}};
  CHECK(config_error_key(j) == "schemes[0].nosie");
  j = kWeak;
  j["test_function"] = "square";  // no second-moment oracle for tanh_sech
  CHECK(config_error_key(j) == "test_function");
  j = kWeak;
  j["model"] = {{"polynomial", {{"drift", {1.0}}, {"diffusion", {1.0}}, {"x0", 0.0}}}};
  CHECK(config_error_key(j) == "test_function");
  j = kSample;
  j["burn_in"] = 30000;
  CHECK(config_error_key(j) == "burn_in");
  j = kSample;
  j["target"] = {{"gumbel", {{"mu", 0.0}, {"beta_scale", -1.0}}}};
  CHECK(config_error_key(j) == "target.gumbel.beta_scale");
  j = kSample;
  j["noise"] = {{"kind", "two_point"}, {"x_plus", 1.0}, {"x_minus", -1.0}, {"p_plus", 1.2}};
  CHECK(config_error_key(j) == "noise");
  j = kSgd;
  j["m2"] = 0.05;
  CHECK(config_error_key(j) == "m2");
  j = kSgld;
  j["gamma1"] = 1.0;
  CHECK(config_error_key(j) == "gamma1");
  j = kSgld;
  j["variants"] = {"gaussian", "gaussian"};
  CHECK(config_error_key(j) == "variants[1].variant");
  j = kMoments;
  j["n"] = 100;
  CHECK(config_error_key(j) == "n");
}

TEST_CASE("the echoed config has every default filled in") {
  const auto c = parse_config(kSgld);
  CHECK(c.canonical["gamma1"] == 0.9);
  CHECK(c.canonical["gamma2"] == 0.999);
  CHECK(c.canonical["thin"] == 1);
  CHECK(c.canonical["target"] == "std_gaussian");
  CHECK(c.canonical["gradient_noise_shape"]["kind"] == "skewed_reference");
  const auto w = parse_config({{"experiment", "weak_order"}, {"seed", 1}, {"model", "linear_additive"}});
  CHECK(w.canonical["n_paths"] == 100000);
  CHECK(w.canonical["eps_list"].size() == 5);
  CHECK(w.canonical["schemes"][1]["noise"]["kind"] == "skewed_reference");
  // the echo itself parses to the same canonical form
  CHECK(parse_config(c.canonical).canonical == c.canonical);
  CHECK(parse_config(w.canonical).canonical == w.canonical);
  const auto g = parse_config({{"experiment", "sample"}, {"seed", 1}, {"target", "gumbel"}});
  CHECK(g.canonical["target"]["gumbel"]["beta_scale"] == 1.0);
  CHECK(g.canonical["range"] == json{-3.0, 12.0});
}

TEST_CASE("runs write the documented CSV schemas and every file parses back") {
  struct Case {
    json cfg;
    std::string csv;
    std::vector<std::string> header;
  };
  const Case cases[] = {
      {kWeak, "weak_order_em.csv", {"eps", "error", "std_error", "n_paths"}},
      {kSample, "histogram.csv", {"bin_left", "bin_right", "hist_density", "analytic_density"}},
      {kSgd, "histogram.csv", {"bin_left", "bin_right", "hist_density", "analytic_density"}},
      {kSgld, "sgld_beta.csv", {"variant", "predicted_beta", "empirical_variance", "target_variance"}},
      {kMoments, "moment_check.csv", {"noise", "order", "empirical", "declared", "z_score", "pass"}},
  };
  for (const auto& c : cases) {
    const auto dir = scratch("schema_" + c.cfg["experiment"].get<std::string>());
    RunOptions opt;
    opt.output_dir = dir;
    const auto rep = run_experiment(parse_config(c.cfg), opt);
    INFO(c.cfg["experiment"]);
    CHECK(read_csv(dir / c.csv).header == c.header);
    for (const auto& f : rep.files) CHECK_NOTHROW(read_csv(dir / f));
    for (const auto& f : rep.plots) CHECK(fs::exists(dir / f));
    const auto report = json::parse(slurp(dir / "report.json"));
    CHECK(report["config"] == rep.config);
    CHECK(report["files"].size() == rep.files.size());
  }
}

TEST_CASE("sample outputs") {
  const auto dir = scratch("sample_outputs");
  RunOptions opt;
  opt.output_dir = dir;
  const auto rep = run_experiment(parse_config(kSample), opt);
  const auto h = read_csv(dir / "histogram.csv");
  CHECK(h.rows.size() == 20);
  CHECK(read_csv(dir / "samples.csv").rows.size() == 29000);
  CHECK(rep.summary["l1"].get<double>() < 0.3);
  CHECK(rep.summary["kept"] == 29000);
}

TEST_CASE("moment check flags pass per declared order") {
  const auto dir = scratch("moments");
  RunOptions opt;
  opt.output_dir = dir;
  const auto rep = run_experiment(parse_config(kMoments), opt);
  const auto t = read_csv(dir / "moment_check.csv");
  CHECK(t.rows.size() == 12);
  const int declared = t.column("declared"), pass = t.column("pass");
  for (const auto& row : t.rows) {
    if (row[1] == "4" && row[0] != "gaussian") {
      CHECK(row[declared].empty());
      CHECK(row[pass].empty());
    } else {
      CHECK_FALSE(row[declared].empty());
    }
  }
  CHECK(rep.summary["all_pass"].is_boolean());
}

TEST_CASE("re-running the echoed config reproduces the CSVs byte for byte") {
  const auto a = scratch("echo_a"), b = scratch("echo_b");
  RunOptions opt;
  opt.output_dir = a;
  const auto first = run_experiment(parse_config(kWeak), opt);
  json echo = json::parse(slurp(a / "report.json"))["config"];
  echo["output_dir"] = b.string();
  run_experiment(parse_config(echo));
  for (const auto& f : first.files) CHECK(slurp(a / f) == slurp(b / f));
}

TEST_CASE("CSVs are identical across thread counts") {
  for (const json& cfg : {kWeak, kSample, kSgd, kSgld, kMoments}) {
    std::vector<std::string> files;
    std::vector<fs::path> dirs;
    for (int threads : {1, 3, 8}) {
      const auto dir = scratch("threads_" + cfg["experiment"].get<std::string>() + std::to_string(threads));
      RunOptions opt;
      opt.output_dir = dir;
      opt.threads = threads;
      opt.plots = false;
      files = run_experiment(parse_config(cfg), opt).files;
      dirs.push_back(dir);
    }
    for (const auto& f : files) {
      INFO(cfg["experiment"] << " " << f);
      CHECK(slurp(dirs[0] / f) == slurp(dirs[1] / f));
      CHECK(slurp(dirs[0] / f) == slurp(dirs[2] / f));
    }
  }
}

TEST_CASE("runtime errors carry experiment context") {
  json j = kSgld;
  j["m2"] = 60.0;
  j["variants"] = {"adaptive_two_point"};
  RunOptions opt;
  opt.output_dir = scratch("budget");
  try {
    run_experiment(parse_config(j), opt);
    FAIL("expected the adaptive budget to be exceeded");
  } catch (const ExperimentError& e) {
    CHECK(std::string(e.kind()) == "budget");
    CHECK(std::string(e.what()).find("sgld_beta, variant 'adaptive_two_point'") != std::string::npos);
  }
}

TEST_CASE("shipped configs") {
  const fs::path configs = WEAKSDE_CONFIG_DIR;
  auto run = [&](const std::string& name) {
    RunOptions opt;
    opt.output_dir = scratch("shipped_" + name);
    return run_config_file(configs / (name + ".json"), opt);
  };
  // the echo of a shipped config is a fixed point: every key is already explicit
  for (const char* name : {"weak_order", "sample", "sgd_stationary", "sgld_beta", "moment_check"}) {
    INFO(name);
    const auto c = load_config(configs / (std::string(name) + ".json"));
    CHECK(c.canonical == parse_config(c.canonical).canonical);
  }

  const auto w = run("weak_order");
  const double slope = w.summary["schemes"]["em"]["slope"].get<double>();
  CHECK(slope >= 0.7);
  CHECK(slope <= 1.3);
  CHECK(run("sample").summary["l1"].get<double>() < 0.1);
  CHECK(run("moment_check").summary["all_pass"] == true);
  const auto sg = run("sgld_beta");
  CHECK(sg.summary["variants"]["gaussian"]["nominal_beta"] == 0.5);
  CHECK(sg.summary["variants"]["adaptive_two_point"]["nominal_beta"] == 1.0);
}

TEST_CASE("command line") {
  const auto dir = scratch("cli");
  fs::create_directories(dir);
  const std::string cli = WEAKSDE_CLI;

  {
    std::ofstream(dir / "bad.json") << R"({"experiment": "moment_check", "seed": 1, "n": 20000, "ordres": [1]})";
    const std::string cmd = cli + " run --config " + (dir / "bad.json").string() + " 2> " + (dir / "err.txt").string();
    CHECK(std::system(cmd.c_str()) != 0);
    const std::string err = slurp(dir / "err.txt");
    CHECK(std::count(err.begin(), err.end(), '\n') == 1);
    const auto line = json::parse(err);
    CHECK(line["status"] == "error");
    CHECK(line["kind"] == "config");
    CHECK(line["key"] == "ordres");
  }
  {
    std::ofstream(dir / "ok.json") << kMoments.dump();
    const std::string cmd = cli + " run --config " + (dir / "ok.json").string() + " --out " + (dir / "out").string() +
                            " --threads 2 > " + (dir / "out.txt").string();
    CHECK(std::system(cmd.c_str()) == 0);
    const auto line = json::parse(slurp(dir / "out.txt"));
    CHECK(line["status"] == "ok");
    CHECK(fs::exists(dir / "out" / "moment_check.csv"));
    CHECK(json::parse(slurp(dir / "out" / "report.json"))["config"]["threads"] == 2);
  }
  {
    const std::string cmd = cli + " plot --csv " + (dir / "out" / "moment_check.csv").string() +
                            " --kind loglog_error 2> " + (dir / "plot_err.txt").string();
    CHECK(std::system(cmd.c_str()) != 0);
    const auto line = json::parse(slurp(dir / "plot_err.txt"));
    CHECK(line["message"].get<std::string>().find("eps,error,std_error,n_paths") != std::string::npos);
    CHECK_FALSE(fs::exists(dir / "out" / "moment_check.svg"));
  }
  {
    const std::string cmd = cli + " frobnicate 2> " + (dir / "usage.txt").string();
    CHECK(std::system(cmd.c_str()) != 0);
    CHECK(json::parse(slurp(dir / "usage.txt"))["kind"] == "usage");
  }
}

}
