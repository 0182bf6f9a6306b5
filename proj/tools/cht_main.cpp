// cht: dynamic sparse training experiments and topology utilities.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cht/error.hpp"
#include "cht/harness.hpp"
#include "cht/linkpred.hpp"
#include "cht/mask_io.hpp"
#include "cht/netgen.hpp"
#include "cht/schedule.hpp"
#include "cht/topology.hpp"

namespace {

bool has_suffix(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// Masks ending in .txt or .edges are edge lists, anything else BPMK.
cht::BipartiteMask read_any_mask(const std::string& path) {
  if (has_suffix(path, ".txt") || has_suffix(path, ".edges")) {
    std::ifstream in(path);
    if (!in) throw cht::IoError("cannot open mask " + path);
    try {
      return cht::read_edge_list(in);
    } catch (const cht::Error& e) {
      throw cht::IoError(path + ": " + e.what());
    }
  }
  return cht::load_mask(path);
}

void write_any_mask(const std::string& path, const cht::BipartiteMask& mask) {
  if (path.empty() || path == "-") {
    cht::write_edge_list(std::cout, mask);
  } else if (has_suffix(path, ".txt") || has_suffix(path, ".edges")) {
    std::ofstream out(path);
    if (!out) throw cht::IoError("cannot write " + path);
    cht::write_edge_list(out, mask);
  } else {
    cht::save_mask(path, mask);
  }
}

// Writes to a file, or stdout for "" / "-".
template <typename F>
void emit(const std::string& path, F&& body) {
  if (path.empty() || path == "-") {
    body(std::cout);
    return;
  }
  std::ofstream out(path);
  if (!out) throw cht::IoError("cannot write " + path);
  body(out);
}

struct GenArgs {
  std::string kind = "er";
  std::size_t rows = 64;
  std::size_t cols = 64;
  double sparsity = 0.9;
  std::uint64_t seed = 0;
  double randomness = 0.25;
  std::string degree_mode = "fixed";
  bool literal_score = false;
  double beta = 0.25;
  bool equal_partition = false;
  std::string data;
  std::size_t calibration = 1000;
  std::string out;
};

int run_gen(const GenArgs& a) {
  const double density = 1.0 - a.sparsity;
  cht::BipartiteMask mask;
  switch (cht::parse_topology_kind(a.kind)) {
    case cht::TopologyKind::dense:
      mask = cht::BipartiteMask::full(a.rows, a.cols);
      break;
    case cht::TopologyKind::er:
      mask = cht::gen_er(a.rows, a.cols, density, a.seed);
      break;
    case cht::TopologyKind::brf: {
      cht::BrfParams p;
      p.randomness = a.randomness;
      p.degree_mode = a.degree_mode == "uniform" ? cht::DegreeMode::uniform : cht::DegreeMode::fixed;
      p.target_density = density;
      p.seed = a.seed;
      p.literal_score = a.literal_score;
      mask = cht::gen_brf(a.rows, a.cols, p);
      break;
    }
    case cht::TopologyKind::bsw:
      mask = cht::gen_bsw(a.rows, a.cols, {a.beta, density, a.seed});
      break;
    case cht::TopologyKind::bsf:
      mask = cht::gen_bsf(a.rows, a.cols, {density, a.equal_partition, false, a.seed});
      break;
    case cht::TopologyKind::csti: {
      if (a.data.empty()) throw cht::InvalidArgument("csti needs --data <idx directory>");
      const cht::DatasetSplit d = cht::load_idx_directory(a.data, a.calibration, 1);
      mask = cht::gen_csti(d.train.feature_count(), a.cols, {d.train.features, density, a.seed});
      break;
    }
  }
  write_any_mask(a.out, mask);
  std::cerr << a.kind << ": " << mask.rows() << "x" << mask.cols() << ", " << mask.link_count()
            << " links\n";
  return 0;
}

struct ScheduleArgs {
  std::string kind = "sigmoid";
  double initial = 0.5;
  double sparsity = 0.95;
  double t0 = 0.0;
  double t_final = 100.0;
  double dt = 1.0;
  double curvature = 6.0;
  bool equalize = false;
  double step = 1.0;
  std::string out;
};

int run_schedule(const ScheduleArgs& a) {
  cht::DensitySchedule s;
  const cht::ScheduleKind kind = cht::parse_schedule_kind(a.kind);
  if (kind == cht::ScheduleKind::constant) {
    s = cht::DensitySchedule::constant(a.sparsity);
  } else if (kind == cht::ScheduleKind::cubic) {
    s = cht::DensitySchedule::cubic(a.initial, a.sparsity, a.t0, a.t_final, a.dt);
  } else {
    s = cht::DensitySchedule::sigmoid(a.initial, a.sparsity, a.t0, a.t_final, a.dt, a.curvature);
    if (a.equalize) {
      s = cht::equalize_flops(s, cht::DensitySchedule::cubic(a.initial, a.sparsity, a.t0, a.t_final, a.dt));
    }
  }
  s.validate();
  if (!(a.step > 0.0)) throw cht::InvalidArgument("--step must be positive");
  emit(a.out, [&](std::ostream& out) {
    out.precision(12);
    out << "t,sparsity,density\n";
    const double end = std::max(a.t_final, s.t_final);
    for (double t = a.t0; t <= end + 1e-9; t += a.step) {
      out << t << ',' << cht::sparsity_at(s, t) << ',' << cht::density_at(s, t) << '\n';
    }
  });
  return 0;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) v.push_back(std::stod(item));
  }
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cht: dynamic sparse training with local-community (CH) link regrowth"};
  app.require_subcommand(1);

  // train
  auto* train = app.add_subcommand("train", "Run a training experiment (one run per seed)");
  std::string config_path;
  std::string preset;
  std::vector<std::uint64_t> seeds;
  double sparsity = -1.0;
  std::string out_dir;
  std::string data_dir;
  std::size_t epochs = 0;
  bool explain = false;
  train->add_option("--config", config_path, "JSON experiment config")->check(CLI::ExistingFile);
  train->add_option("--preset", preset, "Method preset: chts, chtss, set, rigl, gmp, fc");
  train->add_option("--seed", seeds, "Seed(s); replaces the config's seed list");
  train->add_option("--sparsity", sparsity, "Target sparsity of the sparse layers");
  train->add_option("--out", out_dir, "Output directory");
  train->add_option("--data", data_dir, "IDX dataset directory");
  train->add_option("--epochs", epochs, "Number of epochs");
  train->add_flag("--explain", explain, "Print the expanded preset and resolved config, then exit");

  // gen
  auto* gen = app.add_subcommand("gen", "Generate a sparse bipartite mask");
  GenArgs ga;
  gen->add_option("--kind", ga.kind, "dense, er, brf, bsw, bsf or csti")->capture_default_str();
  gen->add_option("--rows", ga.rows)->capture_default_str();
  gen->add_option("--cols", ga.cols)->capture_default_str();
  gen->add_option("--sparsity", ga.sparsity)->capture_default_str();
  gen->add_option("--seed", ga.seed)->capture_default_str();
  gen->add_option("--randomness", ga.randomness, "BRF r")->capture_default_str();
  gen->add_option("--degree-mode", ga.degree_mode, "BRF output degrees: fixed or uniform")->capture_default_str();
  gen->add_flag("--literal-score", ga.literal_score, "BRF: use the literal distance score");
  gen->add_option("--beta", ga.beta, "BSW rewiring fraction")->capture_default_str();
  gen->add_flag("--equal-partition", ga.equal_partition, "BSF: equalise input degrees");
  gen->add_option("--data", ga.data, "CSTI: IDX dataset directory");
  gen->add_option("--calibration", ga.calibration, "CSTI: calibration samples")->capture_default_str();
  gen->add_option("--out", ga.out, "Output (.bpmk binary, .txt/.edges edge list, - for stdout)");

  // predict
  auto* pred = app.add_subcommand("predict", "Score the non-links of a mask");
  std::string mask_path;
  std::string variant = "ch2_l3n";
  std::string pred_out;
  pred->add_option("--mask", mask_path, "Mask file")->required();
  pred->add_option("--variant", variant, "ch2_l3n or ch3_l3p")->capture_default_str();
  pred->add_option("--out", pred_out, "Scores CSV (stdout if omitted)");

  // bench
  auto* bench = app.add_subcommand("bench", "Time one-shot link prediction on ER masks");
  std::string sizes = "256,512,1024";
  std::string densities = "0.01,0.05,0.1,0.2";
  std::string variants = "ch2_l3n,ch3_l3p";
  std::uint64_t bench_seed = 1;
  int repeats = 1;
  std::string bench_out;
  bench->add_option("--sizes", sizes)->capture_default_str();
  bench->add_option("--densities", densities)->capture_default_str();
  bench->add_option("--variants", variants)->capture_default_str();
  bench->add_option("--seed", bench_seed)->capture_default_str();
  bench->add_option("--repeats", repeats)->capture_default_str();
  bench->add_option("--out", bench_out, "CSV (stdout if omitted)");

  // schedule
  auto* sched = app.add_subcommand("schedule", "Dump a sparsity schedule as CSV");
  ScheduleArgs sa;
  sched->add_option("--kind", sa.kind, "constant, cubic or sigmoid")->capture_default_str();
  sched->add_option("--initial", sa.initial, "Initial sparsity")->capture_default_str();
  sched->add_option("--sparsity", sa.sparsity, "Final sparsity")->capture_default_str();
  sched->add_option("--t0", sa.t0)->capture_default_str();
  sched->add_option("--t-final", sa.t_final)->capture_default_str();
  sched->add_option("--dt", sa.dt)->capture_default_str();
  sched->add_option("--curvature", sa.curvature)->capture_default_str();
  sched->add_flag("--equalize", sa.equalize, "Halve the sigmoid window against the cubic one");
  sched->add_option("--step", sa.step, "Sampling step of the dump")->capture_default_str();
  sched->add_option("--out", sa.out, "CSV (stdout if omitted)");

  // percolate
  auto* perc = app.add_subcommand("percolate", "Remove inactive neurons from a chain of masks");
  std::vector<std::string> chain_paths;
  std::string perc_out;
  bool include_inputs = false;
  perc->add_option("--mask", chain_paths, "Layer masks in network order")->required();
  perc->add_option("--out", perc_out, "Directory for the percolated masks");
  perc->add_flag("--include-inputs", include_inputs, "Count input neurons in ANP");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      nlohmann::ordered_json j = nlohmann::ordered_json::object();
      if (!config_path.empty()) {
        std::ifstream in(config_path);
        try {
          j = nlohmann::ordered_json::parse(in);
        } catch (const nlohmann::json::exception& e) {
          throw cht::InvalidArgument(config_path + ": " + e.what());
        }
      }
      if (!preset.empty()) j["preset"] = preset;
      if (sparsity >= 0.0) j["sparsity"] = sparsity;
      if (!seeds.empty()) j["seeds"] = seeds;
      if (!out_dir.empty()) j["out"] = out_dir;
      if (!data_dir.empty()) {
        j["dataset"]["kind"] = "idx";
        j["dataset"]["path"] = data_dir;
      }
      if (epochs > 0) j["train"]["epochs"] = epochs;
      const cht::ExperimentConfig config = cht::parse_config(j.dump());
      if (explain) {
        std::cout << cht::explain_preset(config.preset, config.sparsity, config.train.epochs) << '\n'
                  << cht::resolved_config_json(config);
        return 0;
      }
      const cht::ExperimentResult result = cht::run_experiment(config);
      std::cout << "metric,mean,stderr\n";
      for (const auto& s : result.summary) {
        std::cout << s.metric << ',' << s.mean << ',' << s.stderr_ << '\n';
      }
      std::cerr << "wrote " << config.out.string() << '\n';
    } else if (*gen) {
      return run_gen(ga);
    } else if (*pred) {
      const cht::BipartiteMask mask = read_any_mask(mask_path);
      const cht::ScoreMatrix s = cht::predict(mask, cht::parse_ch_variant(variant));
      emit(pred_out, [&](std::ostream& out) { cht::write_scores_csv(out, s); });
    } else if (*bench) {
      std::vector<std::size_t> size_list;
      for (double s : parse_list(sizes)) size_list.push_back(static_cast<std::size_t>(s));
      std::vector<cht::ChVariant> variant_list;
      std::stringstream ss(variants);
      std::string item;
      while (std::getline(ss, item, ',')) variant_list.push_back(cht::parse_ch_variant(item));
      const auto rows =
          cht::bench_predict(size_list, parse_list(densities), variant_list, bench_seed, repeats);
      emit(bench_out, [&](std::ostream& out) { cht::write_bench_csv(out, rows); });
    } else if (*sched) {
      return run_schedule(sa);
    } else if (*perc) {
      cht::MaskChain chain;
      for (const auto& p : chain_paths) {
        chain.layers.push_back(read_any_mask(p));
        chain.names.push_back(p);
      }
      auto [reduced, report] = cht::percolate(chain, {include_inputs});
      std::cout << "layer,removed_inputs,removed_outputs,removed_links,links_after\n";
      for (std::size_t k = 0; k < reduced.layers.size(); ++k) {
        std::cout << chain.names[k] << ',' << report.layers[k].removed_inputs.size() << ','
                  << report.layers[k].removed_outputs.size() << ',' << report.layers[k].removed_links
                  << ',' << reduced.layers[k].link_count() << '\n';
      }
      std::cout << "anp," << report.anp << '\n';
      if (!perc_out.empty()) {
        std::filesystem::create_directories(perc_out);
        for (std::size_t k = 0; k < reduced.layers.size(); ++k) {
          cht::save_mask(std::filesystem::path(perc_out) / ("layer" + std::to_string(k) + ".bpmk"),
                         reduced.layers[k]);
        }
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "cht: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
