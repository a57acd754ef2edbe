// Exercises the shared library through its C header only.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "echosim/echosim.h"

namespace fs = std::filesystem;

namespace {

struct Owned {
  char* p = nullptr;
  ~Owned() { es_string_free(p); }
  std::string str() const { return p ? p : ""; }
};

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("echosim_capi_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_SUITE("c_api") {
  TEST_CASE("version and argument checks") {
    CHECK(std::string(es_version()).size() >= 5);
    CHECK(es_config_from_json(nullptr, nullptr, nullptr) == ES_ERR_INVALID_ARGUMENT);
    CHECK(std::string(es_last_error()).size() > 0);
    es_config* cfg = nullptr;
    CHECK(es_config_from_json("{not json", nullptr, &cfg) == ES_ERR_CONFIG);
    CHECK(cfg == nullptr);
    CHECK(es_config_from_json(R"({"alpah": 1})", nullptr, &cfg) == ES_ERR_CONFIG);
    CHECK(std::string(es_last_error()).find("alpah") != std::string::npos);
  }

  TEST_CASE("config set, validate and snapshot") {
    es_config* cfg = nullptr;
    REQUIRE(es_config_from_json("{}", nullptr, &cfg) == ES_OK);
    CHECK(std::string(es_last_error()).empty());
    CHECK(es_config_set(cfg, "alpha", "1.0") == ES_OK);
    CHECK(es_config_set(cfg, "nonsense", "1") == ES_ERR_CONFIG);
    CHECK(es_config_set(cfg, "engine", "warp") == ES_ERR_CONFIG);  // rejected, config unchanged

    Owned violations;
    CHECK(es_config_validate(cfg, &violations.p) == ES_OK);
    CHECK(violations.str() == "[]");

    Owned snap;
    REQUIRE(es_config_to_json(cfg, &snap.p) == ES_OK);
    CHECK(snap.str().find("\"alpha\": 1.0") != std::string::npos);
    CHECK(snap.str().find("\"engine\": \"surrogate\"") != std::string::npos);

    CHECK(es_config_set(cfg, "N", "200") == ES_OK);
    Owned bad;
    CHECK(es_config_validate(cfg, &bad.p) == ES_ERR_VALIDATION);
    CHECK(bad.str().find("N must be <= M-1") != std::string::npos);
    es_config_free(cfg);
  }

  TEST_CASE("run, analyze and sweep") {
    const auto dir = scratch("run");
    es_config* cfg = nullptr;
    REQUIRE(es_config_from_json(R"({"M": 20, "K": 3, "seed": 4})", nullptr, &cfg) == ES_OK);
    es_run* run = nullptr;
    REQUIRE(es_run_experiment(cfg, dir.c_str(), "r1", 2, &run) == ES_OK);
    CHECK(std::string(es_run_id(run)) == "r1");
    CHECK(fs::exists(fs::path(es_run_dir(run)) / "trial_2.jsonl"));
    CHECK(std::string(es_run_summary_json(run)).find("\"ok\": true") != std::string::npos);
    CHECK(std::string(es_run_table(run)).find(" (") != std::string::npos);
    es_run_free(run);

    es_run* dup = nullptr;
    CHECK(es_run_experiment(cfg, dir.c_str(), "r1", 1, &dup) == ES_ERR_EXISTS);
    CHECK(dup == nullptr);

    Owned report;
    REQUIRE(es_analyze((dir / "r1").c_str(), R"({"embedder": "hash"})", &report.p) == ES_OK);
    CHECK(report.str().find("\"regression\"") != std::string::npos);
    CHECK(es_analyze((dir / "missing").c_str(), nullptr, nullptr) == ES_ERR_IO);

    Owned matrix;
    REQUIRE(es_sweep(cfg, R"({"alpha": [0.5, 1.0]})", dir.c_str(), "s", 1, &matrix.p) == ES_OK);
    CHECK(matrix.str().find("\"n_cells\": 2") != std::string::npos);

    CHECK(es_config_set(cfg, "N", "50") == ES_OK);
    es_run* invalid = nullptr;
    CHECK(es_run_experiment(cfg, dir.c_str(), nullptr, 1, &invalid) == ES_ERR_VALIDATION);
    CHECK(std::string(es_last_error()).find("N must be <= M-1") != std::string::npos);
    es_config_free(cfg);
  }

  TEST_CASE("config files resolve paths next to themselves") {
    const auto dir = scratch("load");
    std::ofstream(dir / "cfg.json") << R"({"topic": "t_master", "M": 10, "N": 3})";
    es_config* cfg = nullptr;
    REQUIRE(es_config_load((dir / "cfg.json").c_str(), &cfg) == ES_OK);
    Owned snap;
    REQUIRE(es_config_to_json(cfg, &snap.p) == ES_OK);
    CHECK(snap.str().find("doctoral") != std::string::npos);
    es_config_free(cfg);
    CHECK(es_config_load((dir / "nope.json").c_str(), &cfg) == ES_ERR_IO);
  }

  TEST_CASE("genbank without a credential") {
    const auto dir = scratch("genbank");
    es_config* cfg = nullptr;
    REQUIRE(es_config_from_json(R"({"llm": {"api_key_env": "ECHOSIM_SURELY_UNSET_KEY"}})", nullptr, &cfg) == ES_OK);
    CHECK(es_genbank(cfg, (dir / "b.json").c_str(), 10, 0, nullptr) == ES_ERR_CONFIG);
    CHECK(std::string(es_last_error()).find("missing API credential") != std::string::npos);
    es_config_free(cfg);
  }
}
