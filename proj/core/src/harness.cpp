#include "cht/harness.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "cht/error.hpp"
#include "cht/mask_io.hpp"

namespace cht {
namespace {

using nlohmann::ordered_json;

std::string_view softness_name(Softness s) { return s == Softness::soft ? "soft" : "deterministic"; }

Softness parse_softness(std::string_view name) {
  if (name == "soft") return Softness::soft;
  if (name == "deterministic") return Softness::deterministic;
  throw InvalidArgument("unknown softness '" + std::string(name) + "'");
}

std::string_view degree_mode_name(DegreeMode m) { return m == DegreeMode::fixed ? "fixed" : "uniform"; }

DegreeMode parse_degree_mode(std::string_view name) {
  if (name == "fixed") return DegreeMode::fixed;
  if (name == "uniform") return DegreeMode::uniform;
  throw InvalidArgument("unknown degree mode '" + std::string(name) + "'");
}

// Time of the last evolution step: evolution runs at epoch ends except the last.
double last_evolution_epoch(std::size_t epochs) {
  return static_cast<double>(std::max<std::size_t>(epochs, 2) - 1);
}

template <typename T>
void take(const ordered_json& j, const char* key, T& value) {
  if (j.contains(key)) value = j.at(key).get<T>();
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

}  // namespace

std::vector<std::string> preset_names() { return {"chts", "chtss", "set", "rigl", "gmp", "fc"}; }

MethodQuadruple expand_preset(std::string_view name, double sparsity, std::size_t epochs) {
  if (!(sparsity >= 0.0 && sparsity < 1.0)) throw InvalidArgument("sparsity must be in [0, 1)");
  MethodQuadruple q;
  const double t_end = last_evolution_epoch(epochs);

  if (name == "chts" || name == "chtss") {
    q.generator.kind = TopologyKind::csti;
    q.generator.csti_fallback = TopologyKind::brf;
    q.generator.brf_randomness = 0.25;
    q.removal = {1.0, {0.5, 0.75}, Softness::soft};
    q.regrowth = {RegrowthKind::ch2_l3n_soft, 1e-4};
    q.schedule = DensitySchedule::constant(sparsity);
    q.percolate = true;
    if (name == "chtss") {
      const double s_i = std::min(0.5, sparsity);
      const DensitySchedule cubic = DensitySchedule::cubic(s_i, sparsity, 0.0, t_end);
      q.schedule = equalize_flops(DensitySchedule::sigmoid(s_i, sparsity, 0.0, t_end), cubic);
    }
    return q;
  }
  if (name == "set" || name == "rigl") {
    q.generator.kind = TopologyKind::er;
    q.removal = {1.0, {0.5, 0.75}, Softness::deterministic};
    q.regrowth = {name == "set" ? RegrowthKind::random : RegrowthKind::gradient, 1e-4};
    q.schedule = DensitySchedule::constant(sparsity);
    q.percolate = false;
    return q;
  }
  if (name == "gmp") {
    q.generator.kind = TopologyKind::er;  // unused: the first density is 1
    q.removal = {0.0, {0.5, 0.75}, Softness::deterministic};
    q.regrowth = {RegrowthKind::none, 1e-4};
    q.schedule = DensitySchedule::cubic(0.0, sparsity, 0.0, t_end);
    q.percolate = false;
    return q;
  }
  if (name == "fc") {
    q.generator.kind = TopologyKind::dense;
    q.regrowth = {RegrowthKind::none, 1e-4};
    q.schedule = DensitySchedule::constant(0.0);
    q.percolate = false;
    q.evolve = false;
    return q;
  }
  throw InvalidArgument("unknown preset '" + std::string(name) + "'");
}

std::string explain_preset(std::string_view name, double sparsity, std::size_t epochs) {
  const MethodQuadruple q = expand_preset(name, sparsity, epochs);
  std::ostringstream out;
  out << "preset " << name << " (sparsity " << sparsity << ", " << epochs << " epochs)\n";
  out << "  generator: " << to_string(q.generator.kind);
  if (q.generator.kind == TopologyKind::csti) {
    out << " on the input layer, " << to_string(q.generator.csti_fallback) << " elsewhere";
  }
  if (q.generator.kind == TopologyKind::brf ||
      (q.generator.kind == TopologyKind::csti && q.generator.csti_fallback == TopologyKind::brf)) {
    out << " (brf r=" << q.generator.brf_randomness << ")";
  }
  out << "\n  removal: ";
  if (q.regrowth.kind == RegrowthKind::none && !q.evolve) {
    out << "none";
  } else {
    out << (q.removal.alpha == 1.0 ? "weight magnitude" : "relative importance") << " (alpha "
        << q.removal.alpha << "), " << softness_name(q.removal.softness);
    if (q.removal.softness == Softness::soft) {
      out << ", delta " << q.removal.delta.start << " -> " << q.removal.delta.end;
    }
  }
  out << "\n  regrowth: " << to_string(q.regrowth.kind);
  out << "\n  schedule: " << to_string(q.schedule.kind);
  if (q.schedule.kind == ScheduleKind::constant) {
    out << " sparsity " << q.schedule.final_sparsity;
  } else {
    out << " sparsity " << q.schedule.initial_sparsity << " -> " << q.schedule.final_sparsity
        << " over epochs [" << q.schedule.t0 << ", " << q.schedule.t_final << "]";
  }
  out << "\n  percolation: " << (q.percolate ? "on" : "off");
  out << "\n  evolution: " << (q.evolve ? "every epoch, zeta 0.3" : "off") << '\n';
  return out.str();
}

DatasetSplit load_dataset(const DatasetSpec& spec) {
  if (spec.kind == "idx") {
    if (spec.path.empty()) throw InvalidArgument("dataset.path is required for idx datasets");
    return load_idx_directory(spec.path, spec.train_limit, spec.test_limit);
  }
  if (spec.kind == "blobs") {
    return make_blobs(spec.train_samples, spec.test_samples, spec.features, spec.classes,
                      spec.spread, spec.seed);
  }
  if (spec.kind == "moons") {
    return make_two_moons(spec.train_samples, spec.test_samples, spec.noise, spec.seed);
  }
  throw InvalidArgument("unknown dataset kind '" + spec.kind + "'");
}

void apply_preset(ExperimentConfig& config, std::string_view preset) {
  config.preset = std::string(preset);
  config.method = expand_preset(preset, config.sparsity, config.train.epochs);
}

ExperimentConfig parse_config(const std::string& json_text) {
  ordered_json j;
  try {
    j = ordered_json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("config: ") + e.what());
  }
  ExperimentConfig c;
  c.train.mlp.layer_sizes = {784, 256, 256, 10};
  try {
    take(j, "sparsity", c.sparsity);
    if (j.contains("train")) take(j["train"], "epochs", c.train.epochs);
    std::string preset = c.preset;
    take(j, "preset", preset);
    apply_preset(c, preset);

    if (j.contains("seeds")) c.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
    if (j.contains("out")) c.out = j["out"].get<std::string>();
    if (j.contains("mlp")) {
      const auto& m = j["mlp"];
      take(m, "layer_sizes", c.train.mlp.layer_sizes);
      take(m, "sparsify_last", c.train.mlp.sparsify_last);
    }
    if (j.contains("train")) {
      const auto& t = j["train"];
      take(t, "batch_size", c.train.batch_size);
      take(t, "lr_start", c.train.lr_start);
      take(t, "lr_end", c.train.lr_end);
      take(t, "momentum", c.train.momentum);
      take(t, "weight_decay", c.train.weight_decay);
    }
    if (j.contains("dataset")) {
      const auto& d = j["dataset"];
      take(d, "kind", c.dataset.kind);
      take(d, "path", c.dataset.path);
      take(d, "train_limit", c.dataset.train_limit);
      take(d, "test_limit", c.dataset.test_limit);
      take(d, "train_samples", c.dataset.train_samples);
      take(d, "test_samples", c.dataset.test_samples);
      take(d, "features", c.dataset.features);
      take(d, "classes", c.dataset.classes);
      take(d, "spread", c.dataset.spread);
      take(d, "noise", c.dataset.noise);
      take(d, "seed", c.dataset.seed);
    }
    MethodQuadruple& q = c.method;
    if (j.contains("topology")) {
      const auto& t = j["topology"];
      if (t.contains("kind")) q.generator.kind = parse_topology_kind(t["kind"].get<std::string>());
      take(t, "brf_randomness", q.generator.brf_randomness);
      if (t.contains("brf_degree_mode")) {
        q.generator.brf_degree_mode = parse_degree_mode(t["brf_degree_mode"].get<std::string>());
      }
      take(t, "bsw_beta", q.generator.bsw_beta);
      take(t, "bsf_equal_partition", q.generator.bsf_equal_partition);
      take(t, "bsf_resort", q.generator.bsf_resort);
      if (t.contains("csti_fallback")) {
        q.generator.csti_fallback = parse_topology_kind(t["csti_fallback"].get<std::string>());
      }
      take(t, "csti_samples", q.generator.csti_samples);
    }
    if (j.contains("evolution")) {
      const auto& e = j["evolution"];
      take(e, "evolve", q.evolve);
      take(e, "zeta", c.train.evolution.zeta);
      take(e, "update_interval_epochs", c.update_interval_epochs);
      take(e, "alpha", q.removal.alpha);
      take(e, "delta_start", q.removal.delta.start);
      take(e, "delta_end", q.removal.delta.end);
      if (e.contains("removal_softness")) {
        q.removal.softness = parse_softness(e["removal_softness"].get<std::string>());
      }
      if (e.contains("regrowth")) q.regrowth.kind = parse_regrowth_kind(e["regrowth"].get<std::string>());
      take(e, "epsilon_floor", q.regrowth.epsilon_floor);
      take(e, "percolate", q.percolate);
      take(e, "use_historical", c.train.evolution.use_historical);
      take(e, "elm_threshold", c.train.evolution.elm_threshold);
    }
    if (j.contains("schedule")) {
      const auto& s = j["schedule"];
      if (s.contains("kind")) q.schedule.kind = parse_schedule_kind(s["kind"].get<std::string>());
      take(s, "initial_sparsity", q.schedule.initial_sparsity);
      take(s, "final_sparsity", q.schedule.final_sparsity);
      take(s, "t0", q.schedule.t0);
      take(s, "t_final", q.schedule.t_final);
      take(s, "dt", q.schedule.dt);
      take(s, "curvature", q.schedule.curvature);
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("config: ") + e.what());
  }
  if (c.seeds.empty()) throw InvalidArgument("config: seeds must not be empty");
  if (!(c.update_interval_epochs > 0.0)) throw InvalidArgument("config: update interval must be positive");
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_config(buffer.str());
  } catch (const InvalidArgument& e) {
    throw InvalidArgument(path.string() + ": " + e.what());
  }
}

std::string resolved_config_json(const ExperimentConfig& c) {
  const MethodQuadruple& q = c.method;
  ordered_json j;
  j["preset"] = c.preset;
  j["sparsity"] = c.sparsity;
  j["seeds"] = c.seeds;
  j["out"] = c.out.string();
  j["mlp"] = {{"layer_sizes", c.train.mlp.layer_sizes}, {"sparsify_last", c.train.mlp.sparsify_last}};
  j["train"] = {{"epochs", c.train.epochs},         {"batch_size", c.train.batch_size},
                {"lr_start", c.train.lr_start},     {"lr_end", c.train.lr_end},
                {"momentum", c.train.momentum},     {"weight_decay", c.train.weight_decay}};
  j["dataset"] = {{"kind", c.dataset.kind},
                  {"path", c.dataset.path},
                  {"train_limit", c.dataset.train_limit},
                  {"test_limit", c.dataset.test_limit},
                  {"train_samples", c.dataset.train_samples},
                  {"test_samples", c.dataset.test_samples},
                  {"features", c.dataset.features},
                  {"classes", c.dataset.classes},
                  {"spread", c.dataset.spread},
                  {"noise", c.dataset.noise},
                  {"seed", c.dataset.seed}};
  j["topology"] = {{"kind", to_string(q.generator.kind)},
                   {"brf_randomness", q.generator.brf_randomness},
                   {"brf_degree_mode", degree_mode_name(q.generator.brf_degree_mode)},
                   {"bsw_beta", q.generator.bsw_beta},
                   {"bsf_equal_partition", q.generator.bsf_equal_partition},
                   {"bsf_resort", q.generator.bsf_resort},
                   {"csti_fallback", to_string(q.generator.csti_fallback)},
                   {"csti_samples", q.generator.csti_samples}};
  j["evolution"] = {{"evolve", q.evolve},
                    {"zeta", c.train.evolution.zeta},
                    {"update_interval_epochs", c.update_interval_epochs},
                    {"alpha", q.removal.alpha},
                    {"delta_start", q.removal.delta.start},
                    {"delta_end", q.removal.delta.end},
                    {"removal_softness", softness_name(q.removal.softness)},
                    {"regrowth", to_string(q.regrowth.kind)},
                    {"epsilon_floor", q.regrowth.epsilon_floor},
                    {"percolate", q.percolate},
                    {"use_historical", c.train.evolution.use_historical},
                    {"elm_threshold", c.train.evolution.elm_threshold}};
  j["schedule"] = {{"kind", to_string(q.schedule.kind)},
                   {"initial_sparsity", q.schedule.initial_sparsity},
                   {"final_sparsity", q.schedule.final_sparsity},
                   {"t0", q.schedule.t0},
                   {"t_final", q.schedule.t_final},
                   {"dt", q.schedule.dt},
                   {"curvature", q.schedule.curvature}};
  return j.dump(2) + "\n";
}

TrainConfig resolve_train_config(const ExperimentConfig& config, std::size_t train_samples,
                                 std::uint64_t seed) {
  TrainConfig t = config.train;
  const MethodQuadruple& q = config.method;
  t.seed = seed;
  t.topology = q.generator;
  t.schedule = q.schedule;
  t.evolve = q.evolve;
  t.evolution.removal = q.removal;
  t.evolution.regrowth = q.regrowth;
  t.evolution.percolate = q.percolate;
  t.evolution.seed = seed;
  const std::size_t steps_per_epoch = (train_samples + t.batch_size - 1) / std::max<std::size_t>(t.batch_size, 1);
  t.evolution.update_interval = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(config.update_interval_epochs *
                                               static_cast<double>(steps_per_epoch))));
  return t;
}

void write_epochs_csv(std::ostream& out, const RunRecord& run) {
  const auto old = out.precision(10);
  out << "epoch,train_loss,train_accuracy,test_loss,test_accuracy,density,anp\n";
  for (const EpochRecord& e : run.epochs) {
    out << e.epoch << ',' << e.train_loss << ',' << e.train_accuracy << ',' << e.test_loss << ','
        << e.test_accuracy << ',' << e.density << ',' << e.anp << '\n';
  }
  out.precision(old);
}

void write_metrics_csv(std::ostream& out, const RunRecord& run) {
  write_step_csv_header(out);
  for (const StepReport& r : run.steps) write_step_csv_row(out, r);
}

void write_mask_trace_csv(std::ostream& out, const RunRecord& run) {
  out << "step,layer,hash\n";
  for (const MaskTraceEntry& e : run.mask_trace) {
    std::ostringstream hex;
    hex << std::hex << std::setw(16) << std::setfill('0') << e.hash;
    out << e.step << ',' << e.layer << ',' << hex.str() << '\n';
  }
}

std::vector<SummaryStat> summarize(const std::vector<RunRecord>& runs) {
  struct Column {
    const char* name;
    double (*get)(const RunRecord&);
  };
  static const Column columns[] = {
      {"final_test_accuracy", [](const RunRecord& r) { return r.final_test_accuracy; }},
      {"best_test_accuracy", [](const RunRecord& r) { return r.best_test_accuracy; }},
      {"final_anp", [](const RunRecord& r) { return r.final_anp; }},
      {"final_density", [](const RunRecord& r) { return r.final_density; }},
      {"wall_seconds", [](const RunRecord& r) { return r.wall_seconds; }},
  };
  std::vector<SummaryStat> stats;
  for (const Column& col : columns) {
    std::vector<double> v;
    for (const RunRecord& r : runs) v.push_back(col.get(r));
    SummaryStat s{col.name, mean_of(v), 0.0};
    if (v.size() > 1) {
      double ss = 0.0;
      for (double x : v) ss += (x - s.mean) * (x - s.mean);
      const double sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
      s.stderr_ = sd / std::sqrt(static_cast<double>(v.size()));
    }
    stats.push_back(s);
  }
  return stats;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  const DatasetSplit data = load_dataset(config.dataset);
  std::filesystem::create_directories(config.out);
  open_out(config.out / "resolved_config.json") << resolved_config_json(config);

  ExperimentResult result;
  for (std::uint64_t seed : config.seeds) {
    const TrainConfig tc = resolve_train_config(config, data.train.size(), seed);
    RunRecord run;
    try {
      run = train(tc, data);
    } catch (const Error& e) {
      throw Error("seed " + std::to_string(seed) + ": " + e.what());
    }
    const std::filesystem::path dir = config.out / ("seed_" + std::to_string(seed));
    std::filesystem::create_directories(dir);
    {
      auto out = open_out(dir / "epochs.csv");
      write_epochs_csv(out, run);
    }
    {
      auto out = open_out(dir / "metrics.csv");
      write_metrics_csv(out, run);
    }
    {
      auto out = open_out(dir / "mask_trace.csv");
      write_mask_trace_csv(out, run);
    }
    for (std::size_t k = 0; k < run.final_masks.size(); ++k) {
      save_mask(dir / ("layer" + std::to_string(k) + ".bpmk"), run.final_masks[k]);
    }
    ordered_json j;
    j["preset"] = config.preset;
    j["seed"] = seed;
    j["final_test_accuracy"] = run.final_test_accuracy;
    j["best_test_accuracy"] = run.best_test_accuracy;
    j["final_anp"] = run.final_anp;
    j["final_density"] = run.final_density;
    j["wall_seconds"] = run.wall_seconds;
    j["evolution_steps"] = run.mask_trace.empty() ? 0 : run.mask_trace.back().step + 1;
    ordered_json epochs = ordered_json::array();
    for (const EpochRecord& e : run.epochs) {
      epochs.push_back({{"epoch", e.epoch},
                        {"train_loss", e.train_loss},
                        {"train_accuracy", e.train_accuracy},
                        {"test_loss", e.test_loss},
                        {"test_accuracy", e.test_accuracy},
                        {"density", e.density},
                        {"anp", e.anp}});
    }
    j["epochs"] = epochs;
    open_out(dir / "run.json") << j.dump(2) << '\n';
    result.runs.push_back(std::move(run));
  }

  result.summary = summarize(result.runs);
  {
    auto out = open_out(config.out / "summary.csv");
    out.precision(10);
    out << "metric,mean,stderr,seeds\n";
    for (const SummaryStat& s : result.summary) {
      out << s.metric << ',' << s.mean << ',' << s.stderr_ << ',' << result.runs.size() << '\n';
    }
  }
  ordered_json j;
  j["preset"] = config.preset;
  j["seeds"] = config.seeds;
  for (const SummaryStat& s : result.summary) j[s.metric] = {{"mean", s.mean}, {"stderr", s.stderr_}};
  open_out(config.out / "summary.json") << j.dump(2) << '\n';
  return result;
}

}  // namespace cht
