// Acceptance suite: prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails. Criterion 8 lives in acceptance_trend.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "nib/nib.hpp"

using namespace nib;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;

  void check(bool ok, const std::string& what) {
    if (!ok && pass) detail = what;
    pass = pass && ok;
  }
};

int failures = 0;

void report(int id, const std::string& title, const std::function<Verdict()>& body) {
  Verdict v;
  try {
    v = body();
  } catch (const std::exception& e) {
    v.pass = false;
    v.detail = std::string("exception: ") + e.what();
  }
  if (!v.pass) ++failures;
  std::printf("criterion %d [%s]: %s%s%s\n", id, title.c_str(), v.pass ? "PASS" : "FAIL",
              v.detail.empty() ? "" : " - ", v.detail.c_str());
  std::fflush(stdout);
}

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

// Every training run made by this suite, for the label-precision recount.
std::deque<RunRecord> g_runs;

const RunRecord& keep(RunRecord r) {
  g_runs.push_back(std::move(r));
  return g_runs.back();
}

RunConfig preset(const std::string& name) {
  return load_config(fs::path(NIB_SOURCE_DIR) / "configs" / name);
}

// ---------------------------------------------------------------------------

Verdict losses() {
  Verdict v;
  const std::vector<Real> onehot = {1.0, 0.0}, half = {0.5, 0.5};
  const std::vector<Real> soft = {0.9, 0.1}, p = {0.6, 0.4};
  const Real ln2 = ic_loss(onehot, half);
  const Real mixed = ic_loss(soft, p);
  v.check(std::abs(ln2 - 0.693147) < 1e-6, "ln 2 case gave " + fmt(ln2, 10));
  v.check(std::abs(mixed - 0.226290) < 1e-6, "0.226290 case gave " + fmt(mixed, 10));
  v.check(std::abs(mixed - (0.9 * std::log(1.5) + 0.1 * std::log(0.25))) < 1e-12,
          "hand formula mismatch");
  v.check(std::abs(ic_loss(half, half)) < 1e-12, "identical distributions not 0");
  v.check(std::abs(cross_entropy(std::vector<Real>(10, 0.1), 3) - 2.302585) < 1e-6, "uniform CE");
  v.check(std::abs(cross_entropy(onehot, 1) - 18.420681) < 1e-6, "clamped CE");
  v.check(std::abs(overall_loss(1.0, 0.5, 0.6).overall - 0.8) < 1e-12, "lambda mix 0.8");
  v.check(overall_loss(1.3, 0.2, 1.0).overall == 1.3, "lambda = 1 is not cls");
  v.check(overall_loss(1.3, 0.2, 0.0).overall == 0.2, "lambda = 0 is not ic");
  if (v.pass) v.detail = "ln2=" + fmt(ln2, 8) + " case2=" + fmt(mixed, 8);
  return v;
}

// ---------------------------------------------------------------------------

Real fd_worst(Classifier net, const std::vector<Real>& x, const std::vector<Label>& y,
              const std::vector<SoftLabel>& soft, Real lambda) {
  auto loss = [&] {
    const auto probs = net.predict_proba(x, y.size());
    Real s = 0;
    for (std::size_t i = 0; i < y.size(); ++i) s += sample_loss(probs.row(i), y[i], soft[i], lambda).overall;
    return s / static_cast<Real>(y.size());
  };
  const auto g = grad_overall(net, x, y, soft, lambda).grad;
  Real worst = 0;
  auto w = net.params();
  for (std::size_t i = 0; i < w.size(); ++i) {
    const Real keep_w = w[i];
    w[i] = keep_w + 1e-5;
    const Real up = loss();
    w[i] = keep_w - 1e-5;
    const Real down = loss();
    w[i] = keep_w;
    const Real n = (up - down) / 2e-5;
    worst = std::max(worst, std::abs(g[i] - n) / std::max({std::abs(g[i]), std::abs(n), 1e-6}));
  }
  return worst;
}

Verdict gradients() {
  Verdict v;
  Real overall = 0;
  struct Case {
    ArchSpec arch;
    std::vector<int> shape;
    int k;
    std::size_t rows;
  };
  const std::vector<Case> cases = {{ArchSpec::mlp({8}), {2}, 3, 6},
                                   {ArchSpec::small_cnn({3, 4}, 6), {3, 6, 6}, 4, 3}};
  for (std::size_t c = 0; c < cases.size(); ++c) {
    const auto& cs = cases[c];
    Rng rng(100 + c);
    const auto net = init_classifier(cs.arch, cs.k, cs.shape, 7 + c);
    std::vector<Real> x(cs.rows * net.input_dim());
    for (Real& e : x) e = rng.normal();
    std::vector<Label> y;
    for (std::size_t i = 0; i < cs.rows; ++i) y.push_back(static_cast<Label>(rng.below(cs.k)));
    std::vector<std::vector<Real>> rows(cs.k);
    for (auto& r : rows) {
      r.resize(cs.k);
      Real s = 0;
      for (Real& e : r) s += (e = rng.uniform() + 0.05);
      for (Real& e : r) e /= s;
    }
    std::vector<SoftLabel> soft;
    for (Label l : y) soft.emplace_back(rows[l]);
    for (Real lambda : {0.0, 0.6, 1.0}) {
      const Real w = fd_worst(net, x, y, soft, lambda);
      overall = std::max(overall, w);
      v.check(w < 1e-4, cs.arch.describe() + " lambda=" + fmt(lambda) + " rel err " + fmt(w));
    }
  }
  if (v.pass) v.detail = "worst relative error " + fmt(overall, 3);
  return v;
}

// ---------------------------------------------------------------------------

RunConfig logged(RunConfig c, int epochs) {
  c.epochs = epochs;
  c.log_batches = true;
  return c;
}

Verdict transition_replay() {
  Verdict v;
  std::size_t rows_checked = 0;
  for (Paradigm p : {Paradigm::coteaching, Paradigm::jocor})
    for (NibMode m : {NibMode::off, NibMode::on, NibMode::ic_only}) {
      RunConfig c = logged(preset("blobs_sym20.cfg"), 3);
      c.paradigm = p;
      c.nib = m;
      const auto& rec = keep(run_training(c));
      const int k = rec.train.classes;
      for (std::size_t e = 0; e < rec.snapshots.size(); ++e)
        for (int n = 0; n < 2; ++n)
          for (int cls = 0; cls < k; ++cls) {
            std::vector<Real> sum(k, 0.0);
            long count = 0;
            for (const auto& b : rec.batches)
              if (b.net == n && b.epoch <= static_cast<int>(e) + 1 && b.rows[cls]) {
                ++count;
                for (int j = 0; j < k; ++j) sum[j] += (*b.rows[cls])[j];
              }
            const auto& snap = rec.snapshots[e][n];
            v.check(snap.seen[cls] == (count > 0), "seen flag mismatch");
            if (!count) continue;
            Real total = 0;
            for (int j = 0; j < k; ++j) {
              v.check(std::abs(snap(cls, j) - sum[j] / count) <= 1e-12,
                      c.method() + " epoch " + std::to_string(e + 1) + " row " + std::to_string(cls));
              total += snap(cls, j);
              v.check(snap(cls, j) >= 0 && snap(cls, j) <= 1, "entry outside [0,1]");
            }
            v.check(std::abs(total - 1) <= 1e-9, "row sum " + fmt(total, 12));
            ++rows_checked;
          }
    }
  if (v.pass) v.detail = std::to_string(rows_checked) + " snapshot rows replayed over 6 runs";
  return v;
}

// ---------------------------------------------------------------------------

Verdict selection_and_precision() {
  Verdict v;
  Rng rng(4242);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 1 + rng.below(64);
    std::vector<Real> losses(n);
    for (Real& e : losses) e = t % 3 == 0 ? static_cast<Real>(rng.below(5)) : rng.uniform() * 10;
    const std::size_t d = rng.below(n + 1);
    std::vector<std::pair<Real, std::size_t>> all;
    for (std::size_t i = 0; i < n; ++i) all.emplace_back(losses[i], i);
    std::sort(all.begin(), all.end());
    std::vector<std::size_t> expect;
    for (std::size_t i = 0; i < d; ++i) expect.push_back(all[i].second);
    std::sort(expect.begin(), expect.end());
    v.check(select_clean(losses, d).kept == expect, "select_clean trial " + std::to_string(t));
  }

  std::size_t epochs_checked = 0;
  for (const auto& rec : g_runs) {
    if (rec.batches.empty()) continue;
    std::map<std::pair<int, int>, std::pair<std::size_t, std::size_t>> tally;
    for (const auto& b : rec.batches) {
      auto& t = tally[{b.epoch, b.net}];
      t.first += b.kept.size();
      for (std::size_t i : b.kept) t.second += rec.train.flip_mask[i];
    }
    for (const auto& r : rec.metrics) {
      const auto& t = tally.at({r.epoch, r.net == 'A' ? 0 : 1});
      const Real recount =
          static_cast<Real>(t.first - t.second) / static_cast<Real>(t.first);
      v.check(r.n_selected == t.first && r.n_selected_flipped == t.second &&
                  r.label_precision == recount,
              rec.config.method() + " epoch " + std::to_string(r.epoch));
      ++epochs_checked;
    }
  }
  if (v.pass)
    v.detail = "1000 oracle vectors; " + std::to_string(epochs_checked) + " epoch rows recounted over " +
               std::to_string(g_runs.size()) + " runs";
  return v;
}

// ---------------------------------------------------------------------------

Verdict bootstrap() {
  Verdict v;
  std::size_t compared = 0;
  for (Paradigm p : {Paradigm::coteaching, Paradigm::jocor})
    for (std::uint64_t seed : {1, 2, 3}) {
      RunConfig base = logged(preset("blobs_sym20.cfg"), 2);
      base.paradigm = p;
      base.set_run_seed(seed);
      base.nib = NibMode::off;
      const auto& off = keep(run_training(base));
      for (NibMode m : {NibMode::on, NibMode::ic_only}) {
        base.nib = m;
        const auto& on = keep(run_training(base));
        for (std::size_t i = 0; i < off.batches.size(); ++i) {
          if (off.batches[i].epoch != 1) continue;
          v.check(off.batches[i].kept == on.batches[i].kept,
                  base.method() + " seed " + std::to_string(seed) + " batch " +
                      std::to_string(off.batches[i].batch));
          ++compared;
        }
      }
    }
  if (v.pass) v.detail = std::to_string(compared) + " epoch-1 batch selections identical";
  return v;
}

// ---------------------------------------------------------------------------

Verdict zero_noise() {
  Verdict v;
  std::string accs;
  for (Paradigm p : {Paradigm::coteaching, Paradigm::jocor})
    for (NibMode m : {NibMode::off, NibMode::on}) {
      RunConfig c = logged(preset("blobs_sym20.cfg"), 30);
      c.noise = NoiseKind::none;
      c.noise_rate = 0;
      c.blob_center_spread = 100;
      c.blob_cluster_std = 1;
      c.paradigm = p;
      c.nib = m;
      const auto& rec = keep(run_training(c));
      for (const auto& r : rec.metrics)
        v.check(r.label_precision == 1.0, c.method() + " precision " + fmt(r.label_precision) +
                                              " at epoch " + std::to_string(r.epoch));
      const auto& last = rec.metrics[rec.metrics.size() - 2];  // network A, final epoch
      const Real acc = p == Paradigm::jocor ? last.test_acc_ensemble : last.test_acc;
      v.check(acc >= 0.99, c.method() + " final test ACC " + fmt(acc));
      accs += (accs.empty() ? "" : ", ") + c.method() + "=" + fmt(acc);
    }
  if (v.pass) v.detail = "precision 1.0 every epoch; final ACC " + accs;
  return v;
}

// ---------------------------------------------------------------------------

Verdict separation() {
  Verdict v;
  std::string parts;
  for (std::uint64_t seed : {1, 2, 3}) {
    RunConfig c = preset("blobs_sym20.cfg");
    c.paradigm = Paradigm::coteaching;
    c.nib = NibMode::on;
    c.epochs = 60;
    c.set_run_seed(seed);
    const auto& rec = keep(run_training(c));
    const auto& a = rec.state->nets[0];
    const auto rep = hard_vs_noisy_report(a.model, rec.train, a.transition.snapshot(), c.lambda);
    const Real ic_f = rep.flipped.mean_ic(), ic_h = rep.hard_clean.mean_ic();
    const Real cls_gap = std::abs(rep.flipped.mean_cls() - rep.hard_clean.mean_cls());
    const std::string tag = "seed " + std::to_string(seed);
    v.check(!rep.flipped_empty, tag + " has no flipped samples");
    v.check(ic_f > ic_h, tag + " IC flipped " + fmt(ic_f) + " <= hard " + fmt(ic_h));
    v.check(rep.ic_flipped_vs_hard.p_greater < 0.01,
            tag + " rank-sum p " + fmt(rep.ic_flipped_vs_hard.p_greater));
    v.check(cls_gap < rep.cls_pooled_std,
            tag + " cls gap " + fmt(cls_gap) + " >= pooled std " + fmt(rep.cls_pooled_std));
    parts += (parts.empty() ? "" : "; ") + tag + ": IC " + fmt(ic_f) + " vs " + fmt(ic_h) + " p=" +
             fmt(rep.ic_flipped_vs_hard.p_greater, 2) + ", cls gap " + fmt(cls_gap) + " < " +
             fmt(rep.cls_pooled_std);
  }
  if (v.pass) v.detail = parts;
  return v;
}

// ---------------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Verdict determinism() {
  Verdict v;
  const fs::path root = fs::temp_directory_path() / "nib_acceptance_determinism";
  fs::remove_all(root);
  std::size_t compared = 0;
  for (Paradigm p : {Paradigm::coteaching, Paradigm::jocor})
    for (NibMode m : {NibMode::off, NibMode::on, NibMode::ic_only}) {
      RunConfig c = preset("blobs_sym20.cfg");
      c.epochs = 15;
      c.paradigm = p;
      c.nib = m;
      c.set_run_seed(11);
      const std::string name = std::string(to_string(p)) + "_" + std::string(to_string(m));
      run_to_directory(c, root / (name + "_1"));
      run_to_directory(c, root / (name + "_2"));
      const std::string a = slurp(root / (name + "_1") / "metrics.csv");
      v.check(!a.empty() && a == slurp(root / (name + "_2") / "metrics.csv"), name + " differs");
      ++compared;
    }
  fs::remove_all(root);
  if (v.pass) v.detail = std::to_string(compared) + " configurations byte-identical";
  return v;
}

}  // namespace

int main() {
  report(1, "loss unit cases", losses);
  report(2, "gradient oracle", gradients);
  report(3, "transition replay", transition_replay);
  report(5, "bootstrap equivalence", bootstrap);
  report(6, "zero-noise sanity", zero_noise);
  report(7, "hard vs noisy separation", separation);
  // Runs after 3, 5, 6 and 7 so the recount covers every run above.
  report(4, "selection and precision oracles", selection_and_precision);
  report(9, "determinism", determinism);
  std::printf("criterion 8 [trend reproduction]: see acceptance_trend\n");
  std::printf("%s: %d failing criteria\n", failures ? "FAILED" : "PASSED", failures);
  return failures ? 1 : 0;
}
