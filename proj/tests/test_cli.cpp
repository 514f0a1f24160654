#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "timesynth/cli.hpp"
#include "timesynth/config.hpp"
#include "timesynth/io.hpp"
#include "timesynth/metrics_table.hpp"

using namespace timesynth;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

// Small datasets and short training so the whole pipeline takes seconds.
fs::path small_config(const fs::path& dir) {
  const nlohmann::json train = {{"max_epochs", 2}};
  const nlohmann::json j = {
      {"seed", 11},
      {"split_sizes", {{"train", 3}, {"val", 1}, {"test", 2}}},
      {"shift_series", 2},
      {"windowing", {{"train_stride", 50}}},
      {"models",
       {{{"name", "linear"}, {"architecture", {{"kind", "linear"}}}, {"train", train}},
        {{"name", "mlp"}, {"architecture", {{"kind", "mlp"}, {"hidden", {8}}}}, {"train", train}},
        {{"name", "dlinear"}, {"architecture", {{"kind", "dlinear"}}}, {"train", train}}}},
      {"occasions", {"clean", "noise:20", "shift:shift1"}},
  };
  fs::create_directories(dir);
  io::write_atomic(dir / "config.json", j.dump(2));
  return dir / "config.json";
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) { fs::remove_all(path); }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("generate writes clean and shifted datasets idempotently") {
  TempDir tmp("timesynth_cli_generate");
  const auto cfg = small_config(tmp.path);
  const auto out = (tmp.path / "out").string();

  auto r = cli({"generate", "--config", cfg.string(), "--out", out});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("15 of 15 datasets written") != std::string::npos);
  for (const char* f : {"drift", "spm", "dpm"}) {
    CHECK(fs::exists(fs::path(out) / "datasets" / f / "clean" / "manifest.json"));
    for (const char* s : {"shift1", "shift2", "shift3", "shift4"}) {
      CHECK(fs::exists(fs::path(out) / "datasets" / f / s / "manifest.json"));
    }
  }
  const auto before = io::read_text(fs::path(out) / "datasets" / "spm" / "clean" / "manifest.json");
  r = cli({"generate", "--config", cfg.string(), "--out", out});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("0 of 15 datasets written") != std::string::npos);
  CHECK(io::read_text(fs::path(out) / "datasets" / "spm" / "clean" / "manifest.json") == before);
}

TEST_CASE("generate for one family") {
  TempDir tmp("timesynth_cli_family");
  const auto cfg = small_config(tmp.path);
  const auto out = tmp.path / "out";
  const auto r = cli({"generate", "--config", cfg.string(), "--out", out.string(), "--families", "drift"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("5 of 5 datasets written") != std::string::npos);
  CHECK(fs::exists(out / "datasets" / "drift" / "clean"));
  CHECK(!fs::exists(out / "datasets" / "spm"));
}

TEST_CASE("output directory falls back to TIMESYNTH_OUT") {
  TempDir tmp("timesynth_cli_env");
  const auto cfg = small_config(tmp.path);
  const auto env_out = tmp.path / "from_env";
  ::setenv("TIMESYNTH_OUT", env_out.string().c_str(), 1);
  const auto r = cli({"generate", "--config", cfg.string(), "--families", "spm"});
  ::unsetenv("TIMESYNTH_OUT");
  REQUIRE(r.code == 0);
  CHECK(fs::exists(env_out / "datasets" / "spm" / "clean" / "manifest.json"));
}

TEST_CASE("run, stats and plot-data") {
  TempDir tmp("timesynth_cli_run");
  const auto cfg = small_config(tmp.path);
  const auto out = tmp.path / "out";

  SUBCASE("run needs datasets unless asked to generate") {
    const auto r = cli({"run", "--config", cfg.string(), "--out", out.string()});
    CHECK(r.code != 0);
    CHECK(r.err.find("generate") != std::string::npos);
  }

  auto r = cli({"run", "--config", cfg.string(), "--out", out.string(), "--generate", "--models", "linear,mlp",
                "--occasions", "clean"});
  REQUIRE(r.code == 0);
  const auto bundle = out / "bundle";
  auto meta = nlohmann::json::parse(io::read_text(bundle / "bundle.json"));
  CHECK(meta.at("cells").size() == 6);
  CHECK(meta.at("complete") == true);
  CHECK(meta.at("config").at("seed") == 11);
  const auto rows = read_metrics_csv(bundle / "metrics.csv");
  CHECK(rows.size() == 6 * 2);

  SUBCASE("same seed, same bytes") {
    const auto first = io::read_text(bundle / "metrics.csv");
    const auto again = cli({"run", "--config", cfg.string(), "--out", out.string(), "--models", "linear,mlp",
                            "--occasions", "clean"});
    REQUIRE(again.code == 0);
    CHECK(io::read_text(bundle / "metrics.csv") == first);
  }

  SUBCASE("flags override the config") {
    const auto again = cli({"run", "--config", cfg.string(), "--out", out.string(), "--models", "linear,mlp",
                            "--occasions", "clean", "--seed", "12", "--generate"});
    REQUIRE(again.code == 0);
    meta = nlohmann::json::parse(io::read_text(bundle / "bundle.json"));
    CHECK(meta.at("config").at("seed") == 12);
  }

  SUBCASE("stats") {
    r = cli({"stats", "--metrics", (bundle / "metrics.csv").string(), "--metric", "mae"});
    REQUIRE(r.code == 0);
    const auto csv = io::read_text(bundle / "stats" / "contrasts_mae.csv");
    CHECK(csv.rfind("model,metric,coef,std_err,p_value\n", 0) == 0);
    CHECK(count_lines(csv) == 2);
    CHECK(csv.find("\nmlp,mae,") != std::string::npos);
    CHECK(fs::exists(bundle / "stats" / "lmm_mae.json"));
  }

  SUBCASE("stats on a single model") {
    std::vector<MetricsRow> only_linear;
    for (const auto& row : rows) {
      if (row.model == "linear") only_linear.push_back(row);
    }
    const auto path = tmp.path / "single" / "metrics.csv";
    fs::create_directories(path.parent_path());
    io::write_atomic(path, format_metrics_csv(only_linear));
    r = cli({"stats", "--metrics", path.string(), "--metric", "phase"});
    REQUIRE(r.code == 0);
    CHECK(r.err.find("only one model") != std::string::npos);
    CHECK(io::read_text(path.parent_path() / "stats" / "contrasts_phase_err_deg.csv") ==
          "model,metric,coef,std_err,p_value\n");
  }

  SUBCASE("stats names a missing column") {
    const auto path = tmp.path / "broken.csv";
    io::write_atomic(path, "family,model,series_id,mae,mse,freq_err_hz,phase_err_deg\ndrift,linear,a,1,1,1,1\n");
    r = cli({"stats", "--metrics", path.string()});
    CHECK(r.code != 0);
    CHECK(r.err.find("occasion") != std::string::npos);
  }

  SUBCASE("plot-data") {
    r = cli({"plot-data", "--bundle", bundle.string(), "--kind", "horizon_mse"});
    REQUIRE(r.code == 0);
    auto csv = io::read_text(bundle / "plots" / "horizon_mse.csv");
    CHECK(csv.rfind("model,family,h,mse\n", 0) == 0);
    CHECK(count_lines(csv) == 1 + 6 * 100);

    r = cli({"plot-data", "--bundle", bundle.string(), "--kind", "per_series_mae"});
    REQUIRE(r.code == 0);
    csv = io::read_text(bundle / "plots" / "per_series_mae.csv");
    CHECK(csv.rfind("family,model,occasion,series_id,mae\n", 0) == 0);
    CHECK(count_lines(csv) == 1 + 12);

    r = cli({"plot-data", "--bundle", bundle.string(), "--kind", "shift_phase"});
    CHECK(r.code == 1);  // partial output, exit code flags the gaps
    CHECK(r.err.find("missing cell") != std::string::npos);
    CHECK(io::read_text(bundle / "plots" / "shift_phase.csv").rfind("family,model,shift,phase_mean,phase_median\n", 0) == 0);

    r = cli({"plot-data", "--bundle", bundle.string(), "--kind", "noise_curve"});
    REQUIRE(r.code == 0);
    CHECK(io::read_text(bundle / "plots" / "noise_curve.csv").rfind("family,model,snr_db,mae_mean,phase_mean\n", 0) == 0);

    r = cli({"plot-data", "--bundle", bundle.string(), "--kind", "violin"});
    CHECK(r.code != 0);
  }
}

TEST_CASE("full occasion grid runs from the config") {
  TempDir tmp("timesynth_cli_grid");
  const auto cfg = small_config(tmp.path);
  const auto out = tmp.path / "out";
  const auto r = cli({"run", "--config", cfg.string(), "--out", out.string(), "--generate", "--families", "dpm"});
  REQUIRE(r.code == 0);
  const auto meta = nlohmann::json::parse(io::read_text(out / "bundle" / "bundle.json"));
  CHECK(meta.at("cells").size() == 3 * 3);
  CHECK(fs::exists(out / "bundle" / "cells" / "dpm__dlinear__shift_shift1.json"));
  CHECK(r.out.find("dlinear") != std::string::npos);
}

TEST_CASE("bad input") {
  TempDir tmp("timesynth_cli_bad");
  fs::create_directories(tmp.path);
  io::write_atomic(tmp.path / "bad.json", "{\"families\": [\"square\"]}");
  auto r = cli({"generate", "--config", (tmp.path / "bad.json").string(), "--out", tmp.path.string()});
  CHECK(r.code != 0);
  CHECK(r.err.find("square") != std::string::npos);
  io::write_atomic(tmp.path / "typo.json", "{\"sede\": 1}");
  r = cli({"generate", "--config", (tmp.path / "typo.json").string(), "--out", tmp.path.string()});
  CHECK(r.code != 0);
  CHECK(r.err.find("sede") != std::string::npos);
  r = cli({"run", "--occasions", "noise:loud", "--out", tmp.path.string()});
  CHECK(r.code != 0);
  r = cli({"frobnicate"});
  CHECK(r.code != 0);
}

TEST_CASE("config echo round trip") {
  auto cfg = RunConfig::defaults();
  cfg.output_dir = "somewhere";
  cfg.plan.seed = 99;
  const auto j = run_config_to_json(cfg);
  const auto back = run_config_from_json(j);
  CHECK(run_config_to_json(back) == j);
  CHECK(back.output_dir == "somewhere");
  CHECK(back.plan.models.size() == 4);
  CHECK(back.plan.occasions.size() == 8);
}
