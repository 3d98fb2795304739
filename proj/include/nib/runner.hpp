#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "nib/config.hpp"
#include "nib/dataset.hpp"
#include "nib/metrics.hpp"
#include "nib/paradigms.hpp"

namespace nib {

namespace fs = std::filesystem;
using json = nlohmann::json;

inline constexpr const char* kMetricsHeader =
    "epoch,net,test_acc,test_acc_ensemble,label_precision,mean_cls,mean_ic,remember_rate,"
    "n_selected,n_selected_flipped";

inline std::string format_real(Real v, int digits = 6) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline std::string metrics_row(const EpochRecord& r) {
  std::ostringstream os;
  os << r.epoch << ',' << r.net << ',' << format_real(r.test_acc) << ','
     << format_real(r.test_acc_ensemble) << ',' << format_real(r.label_precision) << ','
     << format_real(r.mean_cls) << ',' << format_real(r.mean_ic) << ','
     << format_real(r.remember_rate) << ',' << r.n_selected << ',' << r.n_selected_flipped;
  return os.str();
}

inline void write_transition_csv(const TransitionMatrix& t, std::ostream& os) {
  for (int i = 0; i < t.classes; ++i) {
    for (int j = 0; j < t.classes; ++j) os << (j ? "," : "") << format_real(t(i, j), 8);
    os << '\n';
  }
}

inline json group_json(const LossGroup& g) {
  return {{"count", g.members.size()},
          {"mean_cls", g.cls.empty() ? json(nullptr) : json(g.mean_cls())},
          {"std_cls", stddev(g.cls)},
          {"mean_ic", g.ic.empty() ? json(nullptr) : json(g.mean_ic())},
          {"std_ic", stddev(g.ic)},
          {"ic_count", g.ic.size()}};
}

inline json report_json(const HardNoisyReport& r) {
  return {{"lambda", r.lambda},
          {"hard_fraction", r.hard_fraction},
          {"hard_rule", "lowest-margin fraction of clean samples, margin = p[true] - max other p"},
          {"easy_clean", group_json(r.easy_clean)},
          {"hard_clean", group_json(r.hard_clean)},
          {"flipped", group_json(r.flipped)},
          {"flipped_empty", r.flipped_empty},
          {"ic_rank_sum", {{"u", r.ic_flipped_vs_hard.u},
                           {"z", r.ic_flipped_vs_hard.z},
                           {"p_flipped_greater", r.ic_flipped_vs_hard.p_greater}}},
          {"cls_rank_sum", {{"u", r.cls_flipped_vs_hard.u},
                            {"z", r.cls_flipped_vs_hard.z},
                            {"p_flipped_greater", r.cls_flipped_vs_hard.p_greater}}},
          {"cls_pooled_std_flipped_hard", r.cls_pooled_std}};
}

/// Reads a config file, or the echoed config inside a run manifest.
inline RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    json m;
    try {
      m = json::parse(text);
    } catch (const json::exception& e) {
      throw FormatError("manifest " + path.string() + ": " + e.what());
    }
    if (!m.contains("config_text")) throw FormatError("manifest has no config_text");
    return parse_config(m["config_text"].get<std::string>());
  }
  return parse_config(text);
}

inline const char* const kArtifacts[] = {"manifest.json", "metrics.csv", "hard_vs_noisy.json",
                                         "config.cfg"};

inline bool has_artifacts(const fs::path& dir) {
  if (!fs::exists(dir)) return false;
  for (const char* a : kArtifacts)
    if (fs::exists(dir / a)) return true;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().filename().string().rfind("transition_epoch_", 0) == 0) return true;
  return false;
}

inline void clear_artifacts(const fs::path& dir) {
  for (const char* a : kArtifacts) fs::remove(dir / a);
  std::vector<fs::path> old;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().filename().string().rfind("transition_epoch_", 0) == 0) old.push_back(e.path());
  for (const auto& p : old) fs::remove(p);
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  out.flush();
  if (!out) throw IoError("failed writing " + path.string());
}

struct RunSummary {
  fs::path dir;
  std::string method;
  Real last_acc = 0;
  Real last_acc_ensemble = 0;
  Real last_precision = 0;
};

/// Trains one configuration and writes manifest.json, metrics.csv,
/// config.cfg, transition_epoch_NNN_{A,B}.csv and hard_vs_noisy.json.
/// Refuses to overwrite an earlier run unless `force` is set.
inline RunSummary run_to_directory(const RunConfig& cfg, const fs::path& dir, bool force = false,
                                   const EpochCallback& progress = {}) {
  cfg.validate();
  fs::create_directories(dir);
  if (has_artifacts(dir)) {
    if (!force) throw IoError("output directory " + dir.string() + " already holds a run (use --force)");
    clear_artifacts(dir);
  }

  const auto started = std::chrono::steady_clock::now();
  json manifest;
  manifest["method"] = cfg.method();
  manifest["label"] = cfg.label.empty() ? cfg.method() : cfg.label;
  manifest["config_text"] = to_text(cfg);
  for (const auto& [k, v] : config_entries(cfg)) manifest["config"][k] = v;
  manifest["seeds"] = {{"data", cfg.seed_data}, {"noise", cfg.seed_noise},
                       {"init", cfg.seed_init}, {"shuffle", cfg.seed_shuffle}};
  manifest["arch"] = {{"description", cfg.arch.describe()},
                      {"conv", "3x3, padding 1, stride 2 on every second convolution, ReLU"},
                      {"init", "He normal (2/fan_in) hidden, 0.01/fan_in output, zero bias"}};
  manifest["schedule"] = {
      {"remember_rate", "R(T) = 1 - tau * min(T / ramp_epochs, 1), T = zero-based epoch"},
      {"tau", cfg.effective_tau()},
      {"ramp_epochs", cfg.ramp_epochs},
      {"keep_count", "ceil(R(T) * batch rows)"},
      {"optimizer", {{"name", "adam"}, {"lr", cfg.lr}, {"beta1", 0.9}, {"beta2", 0.999},
                     {"eps", 1e-8}, {"lr_decay_start", cfg.lr_decay_start}}},
      {"lambda", cfg.lambda},
      {"jocor_lambda", cfg.jocor_lambda},
      {"jocor_loss", "(1-w)(CE_A+CE_B) + w(KL(pA||pB)+KL(pB||pA))"},
      {"probability_floor", kProbFloor},
      {"last_k", cfg.last_k}};
  manifest["status"] = "running";
  manifest["partial"] = true;
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");
  write_text(dir / "config.cfg", to_text(cfg));

  auto finish = [&](const char* status) {
    manifest["status"] = status;
    manifest["partial"] = std::string(status) != "complete";
    manifest["wall_clock_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    write_text(dir / "manifest.json", manifest.dump(2) + "\n");
  };

  RunSummary summary;
  summary.dir = dir;
  summary.method = cfg.method();
  try {
    const PreparedData data = prepare_data(cfg);
    manifest["dataset"] = {
        {"kind", std::string(to_string(cfg.dataset))},
        {"train_fingerprint", hex64(data.train_fingerprint)},
        {"test_fingerprint", hex64(data.test_fingerprint)},
        {"train_size", data.train.size()},
        {"test_size", data.test.size()},
        {"classes", data.train.classes},
        {"realized_noise_rate", data.realized_noise_rate},
        {"standardization", {{"mean", data.train.standardization.mean},
                             {"stddev", data.train.standardization.stddev}}}};

    std::ofstream metrics(dir / "metrics.csv", std::ios::binary);
    metrics << kMetricsHeader << '\n';
    if (!metrics) throw IoError("cannot write " + (dir / "metrics.csv").string());
    const RunRecord rec = run_training(cfg, data, [&](const EpochRecord& r) {
      metrics << metrics_row(r) << '\n';
      metrics.flush();
      if (!metrics) throw IoError("failed writing metrics.csv");
      if (progress) progress(r);
    });
    metrics.close();

    json flags = json::array();
    for (std::size_t e = 0; e < rec.snapshots.size(); ++e) {
      if (cfg.dump_transition) {
        for (int n = 0; n < 2; ++n) {
          char name[64];
          std::snprintf(name, sizeof name, "transition_epoch_%03zu_%c.csv", e + 1, n == 0 ? 'A' : 'B');
          std::ofstream t(dir / name, std::ios::binary);
          write_transition_csv(rec.snapshots[e][n], t);
          if (!t) throw IoError(std::string("failed writing ") + name);
        }
      }
    }
    for (const auto& n : rec.state->nets) flags.push_back(n.transition.per_class_normalized());
    manifest["transition_per_class_normalized"] = flags;

    if (cfg.hard_vs_noisy) {
      const auto& net = rec.state->nets[0];
      const auto report = hard_vs_noisy_report(net.model, rec.train, net.transition.snapshot(), cfg.lambda);
      json j = report_json(report);
      j["network"] = "A";
      j["split"] = "train";
      write_text(dir / "hard_vs_noisy.json", j.dump(2) + "\n");
    }

    const auto k = static_cast<std::size_t>(std::min(cfg.last_k, cfg.epochs));
    summary.last_acc = last_k_mean(rec.stream('A', &EpochRecord::test_acc), k);
    summary.last_acc_ensemble = last_k_mean(rec.stream('A', &EpochRecord::test_acc_ensemble), k);
    summary.last_precision = last_k_mean(rec.stream('A', &EpochRecord::label_precision), k);
    manifest["final"] = {
        {"last_k", k},
        {"test_acc_A", summary.last_acc},
        {"test_acc_B", last_k_mean(rec.stream('B', &EpochRecord::test_acc), k)},
        {"test_acc_ensemble", summary.last_acc_ensemble},
        {"label_precision_A", summary.last_precision},
        {"label_precision_B", last_k_mean(rec.stream('B', &EpochRecord::label_precision), k)}};
  } catch (...) {
    try {
      finish("partial");
    } catch (...) {
    }
    throw;
  }
  finish("complete");
  return summary;
}

/// Runs one configuration per seed into `root/seed_<n>` and writes
/// `root/summary.csv`. Jobs run concurrently up to the hardware thread count.
inline std::vector<RunSummary> sweep(const RunConfig& base, const std::vector<std::uint64_t>& seeds,
                                     const fs::path& root, bool force = false) {
  if (seeds.empty()) throw ParameterError("sweep needs at least one seed");
  std::vector<fs::path> dirs;
  for (auto s : seeds) {
    const fs::path d = root / ("seed_" + std::to_string(s));
    if (std::find(dirs.begin(), dirs.end(), d) != dirs.end())
      throw ParameterError("duplicate seed " + std::to_string(s));
    if (!force && has_artifacts(d)) throw IoError("output directory " + d.string() + " already holds a run (use --force)");
    dirs.push_back(d);
  }
  const std::size_t width = std::max(1u, std::thread::hardware_concurrency());
  std::vector<RunSummary> out(seeds.size());
  for (std::size_t begin = 0; begin < seeds.size(); begin += width) {
    std::vector<std::future<RunSummary>> jobs;
    for (std::size_t i = begin; i < std::min(seeds.size(), begin + width); ++i) {
      RunConfig cfg = base;
      cfg.set_run_seed(seeds[i]);
      jobs.push_back(std::async(std::launch::async, [cfg, dir = dirs[i], force] {
        return run_to_directory(cfg, dir, force);
      }));
    }
    for (std::size_t i = 0; i < jobs.size(); ++i) out[begin + i] = jobs[i].get();
  }

  std::ostringstream csv;
  csv << "seed,dir,method,last_test_acc,last_test_acc_ensemble,last_label_precision\n";
  for (std::size_t i = 0; i < seeds.size(); ++i)
    csv << seeds[i] << ',' << out[i].dir.filename().string() << ',' << out[i].method << ','
        << format_real(out[i].last_acc) << ',' << format_real(out[i].last_acc_ensemble) << ','
        << format_real(out[i].last_precision) << '\n';
  std::vector<Real> acc, prec;
  for (const auto& s : out) {
    acc.push_back(s.last_acc);
    prec.push_back(s.last_precision);
  }
  csv << "mean,,," << format_real(mean(acc)) << ",," << format_real(mean(prec)) << '\n';
  csv << "std,,," << format_real(stddev(acc)) << ",," << format_real(stddev(prec)) << '\n';
  write_text(root / "summary.csv", csv.str());
  return out;
}

// ---------------------------------------------------------------------------
// Reading finished runs

struct MetricsTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const {
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) {
      std::string avail;
      for (const auto& c : columns) avail += (avail.empty() ? "" : ", ") + c;
      throw ParameterError("unknown metric '" + name + "'; available: " + avail);
    }
    return static_cast<std::size_t>(it - columns.begin());
  }

  /// Numeric column restricted to rows of network `net`.
  std::vector<Real> series(const std::string& name, const std::string& net = "A") const {
    const std::size_t c = column(name);
    const std::size_t n = column("net");
    std::vector<Real> out;
    for (const auto& r : rows)
      if (r[n] == net) out.push_back(r[c] == "nan" ? std::nan("") : std::stod(r[c]));
    return out;
  }
};

inline MetricsTable read_metrics(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("missing metrics file " + path.string());
  MetricsTable t;
  std::string line;
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(item);
    return out;
  };
  if (!std::getline(in, line)) throw FormatError("empty metrics file " + path.string());
  t.columns = split(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto r = split(line);
    if (r.size() != t.columns.size()) throw FormatError("ragged row in " + path.string());
    t.rows.push_back(std::move(r));
  }
  return t;
}

inline json read_manifest(const fs::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw IoError("run " + dir.string() + " has no manifest.json");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError("run " + dir.string() + ": bad manifest: " + e.what());
  }
}

struct ComparisonRow {
  std::string method;
  std::size_t runs = 0;
  Real acc_mean = 0, acc_std = 0;
  Real acc_ens_mean = 0, acc_ens_std = 0;
  Real precision_mean = 0, precision_std = 0;
};

struct Comparison {
  std::vector<ComparisonRow> rows;
  std::string text;
  std::string csv;
};

/// Groups runs by method and reports last-k test accuracy and label
/// precision as mean ± std across runs. All runs must share the clean
/// dataset fingerprints.
inline Comparison compare_runs(const std::vector<fs::path>& dirs) {
  if (dirs.size() < 2) throw ParameterError("compare needs at least 2 runs");
  std::string train_fp, test_fp;
  std::vector<std::string> order;
  std::map<std::string, std::array<std::vector<Real>, 3>> groups;
  for (const auto& d : dirs) {
    const json m = read_manifest(d);
    if (!m.contains("dataset")) throw FormatError("run " + d.string() + " did not finish loading data");
    const auto tf = m["dataset"]["train_fingerprint"].get<std::string>();
    const auto sf = m["dataset"]["test_fingerprint"].get<std::string>();
    if (train_fp.empty()) {
      train_fp = tf;
      test_fp = sf;
    } else if (tf != train_fp || sf != test_fp) {
      throw DataError("dataset fingerprint mismatch: " + d.string() + " (" + tf + "/" + sf +
                      ") vs " + dirs.front().string() + " (" + train_fp + "/" + test_fp + ")");
    }
    const MetricsTable t = read_metrics(d / "metrics.csv");
    const std::size_t k = std::min<std::size_t>(
        std::stoul(m["config"].value("metrics.last_k", std::string("10"))),
        t.series("test_acc").size());
    if (k == 0) throw FormatError("run " + d.string() + " has no epochs");
    const std::string method = m["method"].get<std::string>();
    if (!groups.count(method)) order.push_back(method);
    auto& g = groups[method];
    g[0].push_back(last_k_mean(t.series("test_acc"), k));
    g[1].push_back(last_k_mean(t.series("test_acc_ensemble"), k));
    g[2].push_back(last_k_mean(t.series("label_precision"), k));
  }

  Comparison out;
  std::ostringstream text, csv;
  text << std::left << std::setw(28) << "Method" << std::setw(8) << "runs" << std::setw(20)
       << "ACC (%)" << std::setw(20) << "ACC ens. (%)" << "Label precision (%)\n";
  csv << "method,runs,acc_mean,acc_std,acc_ensemble_mean,acc_ensemble_std,label_precision_mean,"
         "label_precision_std\n";
  auto pm = [](Real m, Real s) { return format_real(100 * m, 2) + " ± " + format_real(100 * s, 2); };
  for (const auto& method : order) {
    const auto& g = groups[method];
    ComparisonRow r{method, g[0].size(), mean(g[0]), stddev(g[0]), mean(g[1]),
                    stddev(g[1]), mean(g[2]), stddev(g[2])};
    text << std::left << std::setw(28) << method << std::setw(8) << r.runs << std::setw(20)
         << pm(r.acc_mean, r.acc_std) << std::setw(20) << pm(r.acc_ens_mean, r.acc_ens_std)
         << pm(r.precision_mean, r.precision_std) << '\n';
    csv << method << ',' << r.runs << ',' << format_real(r.acc_mean) << ',' << format_real(r.acc_std)
        << ',' << format_real(r.acc_ens_mean) << ',' << format_real(r.acc_ens_std) << ','
        << format_real(r.precision_mean) << ',' << format_real(r.precision_std) << '\n';
    out.rows.push_back(r);
  }
  out.text = text.str();
  out.csv = csv.str();
  return out;
}

// ---------------------------------------------------------------------------
// SVG line charts

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

/// One polyline per run (network A rows), epoch on x. Fractions in [0,1]
/// are drawn on a fixed [0,1] axis.
inline std::string render_svg(const std::vector<fs::path>& dirs, const std::string& metric) {
  if (dirs.empty()) throw ParameterError("render needs at least one run");
  struct Series {
    std::string label;
    std::vector<Real> y;
  };
  std::vector<Series> series;
  for (const auto& d : dirs) {
    const MetricsTable t = read_metrics(d / "metrics.csv");
    std::string label = d.filename().string();
    if (label.empty()) label = d.parent_path().filename().string();
    if (fs::exists(d / "manifest.json")) {
      const json m = read_manifest(d);
      label = m.value("label", label) + " (" + label + ")";
    }
    series.push_back({label, t.series(metric)});
  }

  Real lo = 0, hi = 1;
  std::size_t max_epochs = 1;
  bool unit = true;
  Real vmin = INFINITY, vmax = -INFINITY;
  for (const auto& s : series) {
    max_epochs = std::max(max_epochs, s.y.size());
    for (Real v : s.y) {
      if (std::isnan(v)) continue;
      vmin = std::min(vmin, v);
      vmax = std::max(vmax, v);
      unit = unit && v >= 0 && v <= 1;
    }
  }
  if (!unit && std::isfinite(vmin)) {
    lo = vmin;
    hi = vmax > vmin ? vmax : vmin + 1;
  }

  const double w = 800, h = 480, ml = 70, mr = 220, mt = 40, mb = 50;
  const double pw = w - ml - mr, ph = h - mt - mb;
  auto px = [&](std::size_t epoch) {
    return max_epochs <= 1 ? ml + pw / 2
                           : ml + pw * static_cast<double>(epoch - 1) / static_cast<double>(max_epochs - 1);
  };
  auto py = [&](Real v) { return mt + ph * (1 - (v - lo) / (hi - lo)); };
  auto num = [](double v) { return format_real(v, 2); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                 "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
     << "\" viewBox=\"0 0 " << w << ' ' << h << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << num(ml + pw / 2) << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">"
     << xml_escape(metric) << " vs. epoch</text>\n"
     << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw << "\" height=\"" << ph
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const Real v = lo + (hi - lo) * i / 5.0;
    os << "<line x1=\"" << ml - 5 << "\" y1=\"" << num(py(v)) << "\" x2=\"" << ml << "\" y2=\"" << num(py(v))
       << "\" stroke=\"black\"/>\n"
       << "<text x=\"" << ml - 8 << "\" y=\"" << num(py(v) + 4) << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
       << format_real(v, 2) << "</text>\n";
  }
  const std::size_t ticks = std::min<std::size_t>(max_epochs, 10);
  for (std::size_t i = 0; i < ticks; ++i) {
    const std::size_t e = ticks == 1 ? 1 : 1 + i * (max_epochs - 1) / (ticks - 1);
    os << "<text x=\"" << num(px(e)) << "\" y=\"" << num(mt + ph + 18)
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << e << "</text>\n";
  }
  os << "<text x=\"" << num(ml + pw / 2) << "\" y=\"" << num(h - 10)
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">epoch</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = colors[s % std::size(colors)];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    bool first = true;
    for (std::size_t e = 0; e < series[s].y.size(); ++e) {
      if (std::isnan(series[s].y[e])) continue;
      os << (first ? "" : " ") << num(px(e + 1)) << ',' << num(py(series[s].y[e]));
      first = false;
    }
    os << "\"/>\n";
    if (series[s].y.size() == 1 && !std::isnan(series[s].y[0]))
      os << "<circle cx=\"" << num(px(1)) << "\" cy=\"" << num(py(series[s].y[0])) << "\" r=\"3\" fill=\""
         << color << "\"/>\n";
    const double ly = mt + 10 + 18.0 * static_cast<double>(s);
    os << "<line x1=\"" << num(ml + pw + 12) << "\" y1=\"" << num(ly) << "\" x2=\"" << num(ml + pw + 32)
       << "\" y2=\"" << num(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n"
       << "<text x=\"" << num(ml + pw + 36) << "\" y=\"" << num(ly + 4)
       << "\" font-family=\"sans-serif\" font-size=\"11\">" << xml_escape(series[s].label) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace nib
