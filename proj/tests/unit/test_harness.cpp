#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cht/error.hpp"
#include "cht/harness.hpp"

using namespace cht;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

ExperimentConfig blobs_config(const std::string& preset, const std::filesystem::path& out) {
  std::ostringstream j;
  j << R"({"preset": ")" << preset << R"(", "sparsity": 0.8, "seeds": [0, 1, 2],
          "out": ")" << out.string() << R"(",
          "mlp": {"layer_sizes": [8, 16, 16, 3]},
          "train": {"epochs": 3, "batch_size": 16, "lr_start": 0.05, "lr_end": 0.005},
          "dataset": {"kind": "blobs", "train_samples": 160, "test_samples": 48,
                      "features": 8, "classes": 3}})";
  return parse_config(j.str());
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("every preset expands to a complete quadruple") {
  for (const std::string& name : preset_names()) {
    const MethodQuadruple q = expand_preset(name, 0.9, 10);
    CHECK_NOTHROW(q.schedule.validate());
    CHECK(q.schedule.final_sparsity == (name == "fc" ? 0.0 : 0.9));
    CHECK_FALSE(explain_preset(name, 0.9, 10).empty());
  }
  CHECK_THROWS_AS(expand_preset("magnitude", 0.9, 10), InvalidArgument);
}

TEST_CASE("preset contents") {
  const MethodQuadruple set = expand_preset("set", 0.95, 10);
  CHECK(set.regrowth.kind == RegrowthKind::random);
  CHECK(set.generator.kind == TopologyKind::er);
  CHECK(set.removal.softness == Softness::deterministic);

  const MethodQuadruple rigl = expand_preset("rigl", 0.95, 10);
  CHECK(rigl.regrowth.kind == RegrowthKind::gradient);

  const MethodQuadruple chts = expand_preset("chts", 0.95, 10);
  CHECK(chts.regrowth.kind == RegrowthKind::ch2_l3n_soft);
  CHECK(chts.removal.softness == Softness::soft);
  CHECK(chts.removal.delta.start == 0.5);
  CHECK(chts.removal.delta.end == 0.75);
  CHECK(chts.schedule.kind == ScheduleKind::constant);
  CHECK(chts.percolate);

  const MethodQuadruple chtss = expand_preset("chtss", 0.95, 11);
  CHECK(chtss.schedule.kind == ScheduleKind::sigmoid);
  CHECK(chtss.schedule.initial_sparsity == 0.5);
  // Half of the cubic reference window [0, 10].
  CHECK(chtss.schedule.t_final == 5.0);

  const MethodQuadruple gmp = expand_preset("gmp", 0.95, 11);
  CHECK(gmp.schedule.kind == ScheduleKind::cubic);
  CHECK(gmp.schedule.initial_sparsity == 0.0);
  CHECK(gmp.regrowth.kind == RegrowthKind::none);
  CHECK(gmp.removal.alpha == 0.0);
}

TEST_CASE("explicit sections override the preset") {
  const ExperimentConfig c = parse_config(R"({"preset": "set", "sparsity": 0.9,
      "evolution": {"regrowth": "ch3_l3p_soft", "zeta": 0.2},
      "topology": {"kind": "bsw", "bsw_beta": 0.1}})");
  CHECK(c.method.regrowth.kind == RegrowthKind::ch3_l3p_soft);
  CHECK(c.train.evolution.zeta == 0.2);
  CHECK(c.method.generator.kind == TopologyKind::bsw);
  CHECK(c.method.removal.softness == Softness::deterministic);
  CHECK_THROWS_AS(parse_config("{"), InvalidArgument);
  CHECK_THROWS_AS(parse_config(R"({"preset": "nope"})"), InvalidArgument);
  CHECK_THROWS_AS(parse_config(R"({"seeds": []})"), InvalidArgument);
}

TEST_CASE("resolved config reproduces itself") {
  const ExperimentConfig c = parse_config(R"({"preset": "chtss", "sparsity": 0.97, "seeds": [4, 5],
      "train": {"epochs": 20}, "evolution": {"delta_end": 0.9}})");
  const std::string text = resolved_config_json(c);
  CHECK(resolved_config_json(parse_config(text)) == text);
  CHECK(text.find("\"sigmoid\"") != std::string::npos);
}

TEST_CASE("update interval converts epochs to steps") {
  ExperimentConfig c = parse_config(R"({"train": {"batch_size": 32}})");
  CHECK(resolve_train_config(c, 4000, 0).evolution.update_interval == 125);
  c.update_interval_epochs = 0.5;
  CHECK(resolve_train_config(c, 4000, 0).evolution.update_interval == 63);
}

TEST_CASE("runs are byte-identical per seed and summarised over seeds") {
  const auto root = std::filesystem::temp_directory_path() / "cht_harness_test";
  std::filesystem::remove_all(root);
  const ExperimentResult a = run_experiment(blobs_config("chts", root / "a"));
  run_experiment(blobs_config("chts", root / "b"));
  for (const char* file : {"metrics.csv", "epochs.csv", "mask_trace.csv", "layer0.bpmk"}) {
    const std::string x = slurp(root / "a" / "seed_1" / file);
    CHECK_FALSE(x.empty());
    CHECK(x == slurp(root / "b" / "seed_1" / file));
  }
  CHECK(a.runs.size() == 3);
  const std::string summary = slurp(root / "a" / "summary.csv");
  CHECK(summary.rfind("metric,mean,stderr,seeds\n", 0) == 0);
  CHECK(summary.find("final_test_accuracy,") != std::string::npos);
  CHECK(std::filesystem::exists(root / "a" / "resolved_config.json"));
  CHECK(std::filesystem::exists(root / "a" / "seed_0" / "run.json"));
  std::filesystem::remove_all(root);
}

TEST_CASE("summary statistics") {
  std::vector<RunRecord> runs(3);
  runs[0].final_test_accuracy = 0.8;
  runs[1].final_test_accuracy = 0.9;
  runs[2].final_test_accuracy = 1.0;
  const auto stats = summarize(runs);
  CHECK(stats[0].metric == "final_test_accuracy");
  CHECK(stats[0].mean == doctest::Approx(0.9));
  CHECK(stats[0].stderr_ == doctest::Approx(0.1 / std::sqrt(3.0)));
}

TEST_CASE("missing dataset names the path") {
  ExperimentConfig c = parse_config(R"({"dataset": {"kind": "idx", "path": "/no/such/mnist"}})");
  try {
    run_experiment(c);
    FAIL("expected an error");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("/no/such/mnist") != std::string::npos);
  }
}

}
