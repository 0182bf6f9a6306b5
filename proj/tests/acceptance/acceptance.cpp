// Acceptance suite. Prints one PASS/FAIL line per criterion and exits nonzero
// if any criterion fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cht/evolution.hpp"
#include "cht/harness.hpp"
#include "cht/linkpred.hpp"
#include "cht/netgen.hpp"
#include "cht/schedule.hpp"
#include "cht/trainer.hpp"
#include "oracles.hpp"

using namespace cht;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int id, const char* name, bool pass, const std::string& detail, double seconds) {
  std::printf("%s criterion %d (%s): %s [%.2fs]\n", pass ? "PASS" : "FAIL", id, name,
              detail.c_str(), seconds);
  std::fflush(stdout);
  if (!pass) ++failures;
}

template <class... Args>
std::string fmt(const char* f, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double max_abs_diff(const ScoreMatrix& a, const ScoreMatrix& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

BipartiteMask random_mask(std::size_t rows, std::size_t cols, double density, Rng& rng) {
  BipartiteMask m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      if (rng.uniform() < density) m.set(i, j);
    }
  }
  return m;
}

void oracle_equivalence() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(2024);
  double worst_l3p = 0.0;
  double worst_l3n = 0.0;
  double worst_l3n_rel = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t rows = 2 + rng.index(31);
    const std::size_t cols = 2 + rng.index(31);
    const double density = rng.uniform(0.05, 0.30);
    const BipartiteMask m = random_mask(rows, cols, density, rng);
    worst_l3p = std::max(worst_l3p, max_abs_diff(ch3_l3p(m), oracle::ch_scores(m, ChVariant::l3p)));
    const ScoreMatrix fast = ch2_l3n(m);
    const ScoreMatrix loops = oracle::ch2_l3n_loops(m);
    const double diff = max_abs_diff(fast, loops);
    worst_l3n = std::max(worst_l3n, diff);
    worst_l3n_rel = std::max(worst_l3n_rel, diff / std::max(1.0, loops.cwiseAbs().maxCoeff()));
  }
  const double secs = since(t0);
  // Matrix products and the loop restatement sum in different orders, so
  // "exact" is read as agreement to a few ulps of the largest score.
  const bool pass = worst_l3p <= 1e-9 && worst_l3n_rel <= 1e-12 && secs < 120.0;
  report(1, "oracle equivalence", pass,
         fmt("200 masks; ch3_l3p max|diff|=%.3g (tol 1e-9); ch2_l3n max|diff|=%.3g, relative %.3g "
             "(tol 1e-12)",
             worst_l3p, worst_l3n, worst_l3n_rel),
         secs);
}

void runtime_claim() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto fast = bench_predict({1024}, {0.01, 0.05, 0.10, 0.20}, {ChVariant::l3n}, 7, 3);
  const auto slow = bench_predict({1024}, {0.05}, {ChVariant::l3p}, 7, 1);
  double lo = fast[0].seconds, hi = fast[0].seconds, at5 = 0.0;
  for (const BenchRow& r : fast) {
    lo = std::min(lo, r.seconds);
    hi = std::max(hi, r.seconds);
    if (r.density == 0.05) at5 = r.seconds;
  }
  const double ratio = slow[0].seconds / at5;
  const double spread = hi / lo;
  const double secs = since(t0);
  report(2, "runtime claim", ratio >= 5.0 && spread < 3.0 && secs < 600.0,
         fmt("1024x1024 @5%%: ch2_l3n %.3fs, ch3_l3p %.3fs, speedup %.1fx (need >=5); ch2_l3n "
             "max/min over 1-20%% = %.2f (need <3)",
             at5, slow[0].seconds, ratio, spread),
         secs);
}

ExperimentConfig reduced_mnist(const std::string& preset, const fs::path& out) {
  std::ifstream in(fs::path(CHT_CONFIG_DIR) / "reduced_mnist.json");
  nlohmann::json j = nlohmann::json::parse(in);
  j["preset"] = preset;
  j["out"] = out.string();
  j["dataset"]["path"] = CHT_DATA_DIR;
  return parse_config(j.dump());
}

void mlp_ordering(const fs::path& scratch) {
  const auto t0 = std::chrono::steady_clock::now();
  const ExperimentResult chts = run_experiment(reduced_mnist("chts", scratch / "chts"));
  const ExperimentResult set = run_experiment(reduced_mnist("set", scratch / "set"));
  auto mean = [](const ExperimentResult& r, auto field) {
    double s = 0.0;
    for (const RunRecord& run : r.runs) s += field(run);
    return s / static_cast<double>(r.runs.size());
  };
  auto acc = [](const RunRecord& r) { return r.final_test_accuracy; };
  double chts_anp = 0.0, set_anp = 1.0;
  for (const RunRecord& r : chts.runs) chts_anp = std::max(chts_anp, r.final_anp);
  for (const RunRecord& r : set.runs) set_anp = std::min(set_anp, r.final_anp);
  const double a_chts = mean(chts, acc);
  const double a_set = mean(set, acc);
  const double secs = since(t0);
  const bool pass = a_chts >= a_set - 0.001 && chts_anp < 1.0 && set_anp == 1.0 && secs < 1800.0;
  report(3, "desk-scale MLP ordering", pass,
         fmt("3 seeds: accuracy CHTs %.2f%% vs SET %.2f%% (need >= SET-0.1pp); ANP CHTs max "
             "%.1f%% (need <100%%), SET min %.1f%% (need 100%%)",
             100 * a_chts, 100 * a_set, 100 * chts_anp, 100 * set_anp),
         secs);
}

struct ToyOutcome {
  double itop = 0.0;
  double mean_elm = 0.0;
};

ToyOutcome toy_evolution(RegrowthKind regrowth) {
  Rng init(77);
  Eigen::MatrixXd w(64, 64), history(64, 64);
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    w.data()[i] = init.normal();
    history.data()[i] = init.normal();
  }
  const BipartiteMask m = gen_er(64, 64, 0.1, 5);
  LayerState state(apply_mask(w, m), m);
  state.seed_history(history);
  EvolutionConfig cfg;
  cfg.zeta = 0.3;
  cfg.regrowth.kind = regrowth;
  cfg.percolate = false;
  cfg.seed = 11;
  double elm_sum = 0.0;
  std::size_t elm_count = 0;
  StepReport last;
  for (std::uint64_t step = 0; step < 500; ++step) {
    last = evolve_step(state, cfg, {0.1, static_cast<double>(step) / 500.0, step, 0, false, false});
    if (!std::isnan(last.elm_ratio)) {
      elm_sum += last.elm_ratio;
      ++elm_count;
    }
  }
  return {last.itop_rate, elm_count ? elm_sum / static_cast<double>(elm_count) : 0.0};
}

void elm_itop_contrast() {
  const auto t0 = std::chrono::steady_clock::now();
  const ToyOutcome soft = toy_evolution(RegrowthKind::ch2_l3n_soft);
  const ToyOutcome det = toy_evolution(RegrowthKind::ch2_l3n_deterministic);
  const double secs = since(t0);
  report(4, "ELM/ITOP contrast", soft.itop > det.itop && det.mean_elm > soft.mean_elm && secs < 300,
         fmt("500 steps, 64x64 @10%%: ITOP soft %.4f vs deterministic %.4f; mean ELM "
             "deterministic %.4f vs soft %.4f",
             soft.itop, det.itop, det.mean_elm, soft.mean_elm),
         secs);
}

void schedule_exactness() {
  const auto t0 = std::chrono::steady_clock::now();
  double endpoint_err = 0.0;
  double midpoint_err = 0.0;
  double integral_err = 0.0;
  const double cases[][2] = {{0.0, 0.9}, {0.5, 0.95}, {0.2, 0.99}, {0.3, 0.6}};
  for (const auto& c : cases) {
    const double si = c[0], sf = c[1];
    const DensitySchedule sig = DensitySchedule::sigmoid(si, sf, 0.0, 100.0, 1.0, 6.0);
    const DensitySchedule cub = DensitySchedule::cubic(si, sf, 0.0, 100.0, 1.0);
    for (const DensitySchedule& s : {sig, cub}) {
      endpoint_err = std::max(endpoint_err, std::abs(sparsity_at(s, 0.0) - si));
      endpoint_err = std::max(endpoint_err, std::abs(sparsity_at(s, 100.0) - sf));
    }
    midpoint_err = std::max(midpoint_err, std::abs(sparsity_at(sig, 50.0) - 0.5 * (si + sf)));

    const DensitySchedule eq = equalize_flops(sig, cub);
    const double a = oracle::trapezoid([&](double t) { return density_at(eq, t); }, 0.0, 100.0, 100);
    const double b = oracle::trapezoid([&](double t) { return density_at(cub, t); }, 0.0, 100.0, 100);
    integral_err = std::max(integral_err, std::abs(a - b) / b);
  }
  const double secs = since(t0);
  report(5, "schedule exactness",
         endpoint_err <= 1e-12 && midpoint_err <= 1e-12 && integral_err < 0.05 && secs < 1.0,
         fmt("endpoint err %.3g, midpoint err %.3g (tol 1e-12); equalized density integral rel "
             "diff %.2f%% (tol 5%%)",
             endpoint_err, midpoint_err, 100 * integral_err),
         secs);
}

void soft_sampling() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<std::pair<const char*, std::vector<double>>> vectors{
      {"uniform", {1, 1, 1, 1, 1, 1}},
      {"skewed", {1, 2, 4, 8, 16, 32}},
      {"one-dominant", {100, 1, 1, 1, 1, 1}},
  };
  const int draws = 10000;
  const double floor_eps = 1e-4;
  bool pass = true;
  std::string detail;
  for (const auto& [name, w] : vectors) {
    const std::size_t n = w.size();
    ScoreMatrix scores(1, static_cast<Eigen::Index>(n));
    LinkSet candidates;
    for (std::size_t j = 0; j < n; ++j) {
      scores(0, static_cast<Eigen::Index>(j)) = w[j];
      candidates.push_back({0, static_cast<std::uint32_t>(j)});
    }
    double top = *std::max_element(w.begin(), w.end());
    std::vector<double> grown = w;
    for (double& v : grown) v += floor_eps * std::max(top, 1.0);

    double min_p = 1.0;
    double max_z = 0.0;
    for (SelectMode mode : {SelectMode::keep, SelectMode::grow}) {
      const std::vector<double>& weights = mode == SelectMode::keep ? w : grown;
      for (std::size_t count : {std::size_t{1}, std::size_t{3}}) {
        const std::vector<double> p = oracle::successive_inclusion(weights, count);
        std::vector<double> hits(n, 0.0);
        Rng rng = Rng::stream(99, count, mode == SelectMode::keep ? 0 : 1);
        for (int d = 0; d < draws; ++d) {
          for (const Link& l : soft_select(scores, candidates, count, mode, Softness::soft,
                                           floor_eps, rng)) {
            hits[l.col] += 1.0;
          }
        }
        double chi = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          const double expect = draws * p[j];
          const double sd = std::sqrt(draws * p[j] * (1.0 - p[j]));
          if (sd > 0) max_z = std::max(max_z, std::abs(hits[j] - expect) / sd);
          chi += (hits[j] - expect) * (hits[j] - expect) / expect;
        }
        // One draw per trial is multinomial; with several the per-item
        // z-scores carry the check.
        if (count == 1) min_p = std::min(min_p, oracle::chi_square_sf(chi, static_cast<double>(n - 1)));
      }
    }
    pass = pass && min_p > 0.001 && max_z <= 3.0;
    detail += fmt("%s: chi2 p=%.3g max|z|=%.2f; ", name, min_p, max_z);
  }
  const double secs = since(t0);
  report(6, "soft-sampling statistics", pass && secs < 60.0,
         detail + "need p>0.001 and |z|<=3 over 1e4 draws", secs);
}

void brf_contract() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t rows = 96, cols = 64;
  const double density = 0.1;
  bool degrees_ok = true;
  for (DegreeMode mode : {DegreeMode::fixed, DegreeMode::uniform}) {
    for (double r : {0.0, 0.25, 0.5, 1.0}) {
      for (std::uint64_t seed = 0; seed < 5; ++seed) {
        BrfParams p{r, mode, density, seed, false};
        const std::vector<std::size_t> want = brf_output_degrees(rows, cols, p);
        const oracle::Degrees got = oracle::brute_degrees(gen_brf(rows, cols, p));
        degrees_ok = degrees_ok && got.cols == want;
      }
    }
  }
  bool bsw_equal = true;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const BipartiteMask brf = gen_brf(rows, cols, {0.0, DegreeMode::fixed, density, seed, false});
    const BipartiteMask bsw = gen_bsw(rows, cols, {0.0, density, seed});
    bsw_equal = bsw_equal && brf == bsw;
  }
  auto mean_distance = [&](const BipartiteMask& m) {
    double s = 0.0;
    for (const Link& l : m.links()) s += static_cast<double>(diagonal_distance(l.row, l.col, rows, cols));
    return s / static_cast<double>(m.link_count());
  };
  std::vector<double> brf_d, er_d;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    brf_d.push_back(mean_distance(gen_brf(rows, cols, {1.0, DegreeMode::fixed, density, seed, false})));
    er_d.push_back(mean_distance(gen_er(rows, cols, density, 1000 + seed)));
  }
  const double p = oracle::welch_p_value(brf_d, er_d);
  const double secs = since(t0);
  report(7, "BRF contract", degrees_ok && bsw_equal && p > 0.01 && secs < 120.0,
         fmt("out-degree conservation %s; r=0 vs BSW beta=0 %s; r=1 vs ER distance Welch p=%.3f "
             "(need >0.01)",
             degrees_ok ? "exact" : "BROKEN", bsw_equal ? "bit-identical" : "DIFFERENT", p),
         secs);
}

void gradient_check() {
  const auto t0 = std::chrono::steady_clock::now();
  BipartiteMask sparse(2, 2);
  sparse.set(0, 0);
  sparse.set(1, 0);
  sparse.set(1, 1);
  Rng rng(3);
  Eigen::MatrixXd x(4, 2);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  const std::vector<int> y{0, 1, 1, 0};
  double worst = 0.0;
  for (int combo = 0; combo < 4; ++combo) {
    MlpSpec spec{{2, 2, 2}, true};
    std::vector<BipartiteMask> masks{(combo & 1) ? sparse : BipartiteMask::full(2, 2),
                                     (combo & 2) ? sparse : BipartiteMask::full(2, 2)};
    Network net(spec, masks, 10 + combo);
    for (std::size_t k = 0; k < 2; ++k) {
      // Non-trivial biases keep every ReLU away from its kink.
      for (Eigen::Index i = 0; i < 2; ++i) net.bias(k)(i) = 0.3 + 0.2 * static_cast<double>(i);
    }
    const Gradients g = net.gradients(x, y);
    auto rel = [](double a, double b) {
      return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6});
    };
    for (std::size_t k = 0; k < 2; ++k) {
      Eigen::MatrixXd& w = net.layer(k).weights;
      for (Eigen::Index i = 0; i < 2; ++i) {
        for (Eigen::Index j = 0; j < 2; ++j) {
          if (!net.layer(k).mask.test(static_cast<std::size_t>(i), static_cast<std::size_t>(j))) continue;
          const double saved = w(i, j);
          const double fd = oracle::central_difference(
              [&](double v) { w(i, j) = v; return net.loss(x, y); }, saved, 1e-5);
          w(i, j) = saved;
          worst = std::max(worst, rel(g.weights[k](i, j), fd));
        }
        Eigen::VectorXd& b = net.bias(k);
        const double saved = b(i);
        const double fd = oracle::central_difference(
            [&](double v) { b(i) = v; return net.loss(x, y); }, saved, 1e-5);
        b(i) = saved;
        worst = std::max(worst, rel(g.biases[k](i), fd));
      }
    }
  }
  const double secs = since(t0);
  report(8, "gradient correctness", worst <= 1e-3 && secs < 10.0,
         fmt("2-2-2 network, layers dense/sparse in all 4 combinations: max relative error %.3g "
             "(tol 1e-3)",
             worst),
         secs);
}

void determinism(const fs::path& scratch) {
  const auto t0 = std::chrono::steady_clock::now();
  bool pass = true;
  std::string detail;
  for (const std::string& preset : preset_names()) {
    nlohmann::json j{{"preset", preset},
                     {"sparsity", 0.9},
                     {"seeds", {3}},
                     {"mlp", {{"layer_sizes", {784, 64, 64, 10}}}},
                     {"train", {{"epochs", 3}, {"batch_size", 32}, {"lr_start", 0.05}}},
                     {"evolution", {{"update_interval_epochs", 0.5}}},
                     {"dataset",
                      {{"kind", "idx"}, {"path", CHT_DATA_DIR}, {"train_limit", 600}, {"test_limit", 200}}}};
    bool same = true;
    for (const char* run : {"a", "b"}) {
      j["out"] = (scratch / preset / run).string();
      run_experiment(parse_config(j.dump()));
    }
    for (const char* file : {"metrics.csv", "mask_trace.csv", "epochs.csv"}) {
      const std::string a = slurp(scratch / preset / "a" / "seed_3" / file);
      const std::string b = slurp(scratch / preset / "b" / "seed_3" / file);
      same = same && !a.empty() && a == b;
    }
    pass = pass && same;
    detail += preset + (same ? " identical; " : " DIFFERS; ");
  }
  const double secs = since(t0);
  report(9, "determinism", pass && secs < 300.0, detail + "metrics, mask trace, epochs CSVs", secs);
}

template <class F>
void guarded(int id, const char* name, F&& f) {
  try {
    f();
  } catch (const std::exception& e) {
    report(id, name, false, std::string("error: ") + e.what(), 0.0);
  }
}

}  // namespace

int main() {
  const fs::path scratch = fs::temp_directory_path() / "cht_acceptance";
  fs::remove_all(scratch);
  guarded(1, "oracle equivalence", oracle_equivalence);
  guarded(2, "runtime claim", runtime_claim);
  guarded(3, "desk-scale MLP ordering", [&] { mlp_ordering(scratch / "mlp"); });
  guarded(4, "ELM/ITOP contrast", elm_itop_contrast);
  guarded(5, "schedule exactness", schedule_exactness);
  guarded(6, "soft-sampling statistics", soft_sampling);
  guarded(7, "BRF contract", brf_contract);
  guarded(8, "gradient correctness", gradient_check);
  guarded(9, "determinism", [&] { determinism(scratch / "det"); });
  fs::remove_all(scratch);
  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
