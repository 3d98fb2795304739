#pragma once

#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "nib/classifier.hpp"
#include "nib/common.hpp"
#include "nib/noise.hpp"
#include "nib/selection.hpp"

namespace nib {

enum class Paradigm { coteaching, jocor };
enum class NibMode { off, on, ic_only };
enum class DatasetKind { blobs, cifar10 };

inline std::string_view to_string(Paradigm p) { return p == Paradigm::jocor ? "jocor" : "coteaching"; }
inline std::string_view to_string(NibMode m) {
  return m == NibMode::on ? "on" : m == NibMode::ic_only ? "ic_only" : "off";
}
inline std::string_view to_string(DatasetKind d) { return d == DatasetKind::cifar10 ? "cifar10" : "blobs"; }

/// Selection criterion implied by a NIB mode.
inline Criterion criterion_for(NibMode m) {
  switch (m) {
    case NibMode::off: return Criterion::cls_only;
    case NibMode::on: return Criterion::overall;
    case NibMode::ic_only: return Criterion::ic_only;
  }
  return Criterion::cls_only;
}

/// Environment variable naming the directory that holds dataset files.
inline constexpr const char* kDataRootEnv = "NIB_DATA_ROOT";

struct RunConfig {
  // dataset
  DatasetKind dataset = DatasetKind::blobs;
  std::string dataset_path;            // cifar10 directory; falls back to $NIB_DATA_ROOT
  int subset_per_class = 0;            // 0 keeps the full training split
  int blob_classes = 4;
  int blob_n_per_class = 250;
  int blob_dim = 2;
  Real blob_center_spread = 10.0;
  Real blob_cluster_std = 1.0;

  // noise
  NoiseKind noise = NoiseKind::none;
  Real noise_rate = 0.0;

  // model
  ArchSpec arch = ArchSpec::mlp({32, 32});

  // training
  Paradigm paradigm = Paradigm::coteaching;
  NibMode nib = NibMode::off;
  Real lambda = 0.6;
  Real jocor_lambda = 0.85;
  int epochs = 200;
  int batch_size = 128;
  Real lr = 0.001;
  int lr_decay_start = 0;  // 0: constant rate; otherwise linear decay to 0 from this epoch
  int ramp_epochs = 10;
  std::optional<Real> tau;  // defaults to the injected noise rate
  int last_k = 10;

  // seeds
  std::uint64_t seed_data = 1;
  std::uint64_t seed_noise = 1;
  std::uint64_t seed_init = 1;
  std::uint64_t seed_shuffle = 1;

  // outputs
  std::string label;
  bool dump_transition = true;
  bool hard_vs_noisy = true;
  bool log_batches = false;

  Real effective_tau() const { return tau ? *tau : (noise == NoiseKind::none ? 0.0 : noise_rate); }

  /// "coteaching", "coteaching+NIB", "jocor+IC-only", ...
  std::string method() const {
    std::string m(to_string(paradigm));
    if (nib == NibMode::on) m += "+NIB";
    if (nib == NibMode::ic_only) m += "+IC-only";
    return m;
  }

  /// Sets training seeds (noise, init, shuffle) from one value; the data
  /// seed is left alone so runs share a dataset fingerprint.
  void set_run_seed(std::uint64_t s) { seed_noise = seed_init = seed_shuffle = s; }

  void validate() const {
    check_lambda(lambda);
    if (!(jocor_lambda >= 0 && jocor_lambda <= 1))
      throw ParameterError("jocor.lambda must lie in [0,1]");
    require(epochs >= 1, "train.epochs must be >= 1");
    require(batch_size >= 1, "train.batch_size must be >= 1");
    require(lr > 0, "train.lr must be positive");
    require(lr_decay_start >= 0, "train.lr_decay_start must be >= 0");
    require(ramp_epochs >= 1, "selection.ramp_epochs must be >= 1");
    require(last_k >= 1, "metrics.last_k must be >= 1");
    require(noise_rate >= 0 && noise_rate < 1, "noise.rate must lie in [0,1)");
    if (noise == NoiseKind::pair) require(noise_rate <= 0.5, "pair noise rate must be <= 0.5");
    const Real t = effective_tau();
    require(t >= 0 && t < 1, "selection.tau must lie in [0,1)");
    require(subset_per_class >= 0, "dataset.subset_per_class must be >= 0");
    if (dataset == DatasetKind::blobs) {
      require(blob_classes >= 2, "dataset.classes must be >= 2");
      require(blob_dim >= 2, "dataset.dim must be >= 2");
      require(blob_n_per_class >= 5, "dataset.n_per_class must be >= 5");
      require(blob_cluster_std > 0, "dataset.cluster_std must be positive");
    }
    for (int w : arch.widths) require(w > 0, "arch widths must be positive");
  }
};

namespace config_detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::string fmt_real(Real v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

inline Real parse_real(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const double d = std::strtod(v.c_str(), &end);
  if (v.empty() || *end != '\0') throw ParameterError("config key " + key + ": bad number '" + v + "'");
  return d;
}

inline long long parse_int(const std::string& key, const std::string& v) {
  long long out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw ParameterError("config key " + key + ": bad integer '" + v + "'");
  return out;
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw ParameterError("config key " + key + ": bad seed '" + v + "'");
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ParameterError("config key " + key + ": bad boolean '" + v + "'");
}

inline std::vector<int> parse_widths(const std::string& key, const std::string& v) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(static_cast<int>(parse_int(key, trim(item))));
  if (out.empty()) throw ParameterError("config key " + key + ": empty width list");
  return out;
}

inline std::string join(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

}  // namespace config_detail

/// Applies one `key=value` assignment.
inline void set_config_value(RunConfig& c, const std::string& key, const std::string& value) {
  using namespace config_detail;
  const auto& v = value;
  if (key == "dataset.kind") {
    if (v == "blobs") c.dataset = DatasetKind::blobs;
    else if (v == "cifar10") c.dataset = DatasetKind::cifar10;
    else throw ParameterError("unknown dataset.kind '" + v + "'");
  } else if (key == "dataset.path") c.dataset_path = v;
  else if (key == "dataset.subset_per_class") c.subset_per_class = static_cast<int>(parse_int(key, v));
  else if (key == "dataset.classes") c.blob_classes = static_cast<int>(parse_int(key, v));
  else if (key == "dataset.n_per_class") c.blob_n_per_class = static_cast<int>(parse_int(key, v));
  else if (key == "dataset.dim") c.blob_dim = static_cast<int>(parse_int(key, v));
  else if (key == "dataset.center_spread") c.blob_center_spread = parse_real(key, v);
  else if (key == "dataset.cluster_std") c.blob_cluster_std = parse_real(key, v);
  else if (key == "noise.kind") c.noise = parse_noise_kind(v);
  else if (key == "noise.rate") c.noise_rate = parse_real(key, v);
  else if (key == "arch.kind") {
    if (v == "mlp") c.arch.kind = ArchKind::mlp;
    else if (v == "small_cnn") c.arch.kind = ArchKind::small_cnn;
    else throw ParameterError("unknown arch.kind '" + v + "'");
  } else if (key == "arch.widths") c.arch.widths = parse_widths(key, v);
  else if (key == "arch.fc_width") c.arch.fc_width = static_cast<int>(parse_int(key, v));
  else if (key == "paradigm") {
    if (v == "coteaching") c.paradigm = Paradigm::coteaching;
    else if (v == "jocor") c.paradigm = Paradigm::jocor;
    else throw ParameterError("unknown paradigm '" + v + "'");
  } else if (key == "nib.mode") {
    if (v == "off") c.nib = NibMode::off;
    else if (v == "on") c.nib = NibMode::on;
    else if (v == "ic_only") c.nib = NibMode::ic_only;
    else throw ParameterError("unknown nib.mode '" + v + "'");
  } else if (key == "selection.mode") {
    const Criterion m = parse_criterion(v);
    c.nib = m == Criterion::overall ? NibMode::on : m == Criterion::ic_only ? NibMode::ic_only : NibMode::off;
  } else if (key == "nib.lambda") c.lambda = parse_real(key, v);
  else if (key == "jocor.lambda") c.jocor_lambda = parse_real(key, v);
  else if (key == "train.epochs") c.epochs = static_cast<int>(parse_int(key, v));
  else if (key == "train.batch_size") c.batch_size = static_cast<int>(parse_int(key, v));
  else if (key == "train.lr") c.lr = parse_real(key, v);
  else if (key == "train.lr_decay_start") c.lr_decay_start = static_cast<int>(parse_int(key, v));
  else if (key == "selection.ramp_epochs") c.ramp_epochs = static_cast<int>(parse_int(key, v));
  else if (key == "selection.tau") {
    if (v == "auto") c.tau.reset();
    else c.tau = parse_real(key, v);
  } else if (key == "metrics.last_k") c.last_k = static_cast<int>(parse_int(key, v));
  else if (key == "seed") c.seed_data = c.seed_noise = c.seed_init = c.seed_shuffle = parse_u64(key, v);
  else if (key == "seed.data") c.seed_data = parse_u64(key, v);
  else if (key == "seed.noise") c.seed_noise = parse_u64(key, v);
  else if (key == "seed.init") c.seed_init = parse_u64(key, v);
  else if (key == "seed.shuffle") c.seed_shuffle = parse_u64(key, v);
  else if (key == "output.label") c.label = v;
  else if (key == "output.transition_dump") c.dump_transition = parse_bool(key, v);
  else if (key == "output.hard_vs_noisy") c.hard_vs_noisy = parse_bool(key, v);
  else if (key == "log.batches") c.log_batches = parse_bool(key, v);
  else throw ParameterError("unknown config key '" + key + "'");
}

/// Applies a `key=value` override string.
inline void apply_override(RunConfig& c, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos)
    throw ParameterError("override '" + std::string(assignment) + "' is not key=value");
  set_config_value(c, config_detail::trim(assignment.substr(0, eq)),
                   config_detail::trim(assignment.substr(eq + 1)));
}

/// Parses `key = value` lines; '#' starts a comment.
inline RunConfig parse_config(std::string_view text, RunConfig base = {}) {
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = config_detail::trim(line);
    if (t.empty()) continue;
    if (t.find('=') == std::string::npos)
      throw ParameterError("config line " + std::to_string(lineno) + " is not key=value");
    apply_override(base, t);
  }
  return base;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

/// Every key, in a fixed order; parse_config(to_text(c)) reproduces c.
inline std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& c) {
  using config_detail::fmt_real;
  std::vector<std::pair<std::string, std::string>> e = {
      {"dataset.kind", std::string(to_string(c.dataset))},
      {"dataset.path", c.dataset_path},
      {"dataset.subset_per_class", std::to_string(c.subset_per_class)},
      {"dataset.classes", std::to_string(c.blob_classes)},
      {"dataset.n_per_class", std::to_string(c.blob_n_per_class)},
      {"dataset.dim", std::to_string(c.blob_dim)},
      {"dataset.center_spread", fmt_real(c.blob_center_spread)},
      {"dataset.cluster_std", fmt_real(c.blob_cluster_std)},
      {"noise.kind", std::string(to_string(c.noise))},
      {"noise.rate", fmt_real(c.noise_rate)},
      {"arch.kind", c.arch.kind == ArchKind::mlp ? "mlp" : "small_cnn"},
      {"arch.widths", config_detail::join(c.arch.widths)},
      {"arch.fc_width", std::to_string(c.arch.fc_width)},
      {"paradigm", std::string(to_string(c.paradigm))},
      {"nib.mode", std::string(to_string(c.nib))},
      {"nib.lambda", fmt_real(c.lambda)},
      {"jocor.lambda", fmt_real(c.jocor_lambda)},
      {"train.epochs", std::to_string(c.epochs)},
      {"train.batch_size", std::to_string(c.batch_size)},
      {"train.lr", fmt_real(c.lr)},
      {"train.lr_decay_start", std::to_string(c.lr_decay_start)},
      {"selection.ramp_epochs", std::to_string(c.ramp_epochs)},
      {"selection.tau", c.tau ? fmt_real(*c.tau) : "auto"},
      {"metrics.last_k", std::to_string(c.last_k)},
      {"seed.data", std::to_string(c.seed_data)},
      {"seed.noise", std::to_string(c.seed_noise)},
      {"seed.init", std::to_string(c.seed_init)},
      {"seed.shuffle", std::to_string(c.seed_shuffle)},
      {"output.label", c.label},
      {"output.transition_dump", c.dump_transition ? "true" : "false"},
      {"output.hard_vs_noisy", c.hard_vs_noisy ? "true" : "false"},
      {"log.batches", c.log_batches ? "true" : "false"},
  };
  return e;
}

inline std::string to_text(const RunConfig& c) {
  std::string out;
  for (const auto& [k, v] : config_entries(c)) out += k + "=" + v + "\n";
  return out;
}

/// Directory holding CIFAR-10 batch files: dataset.path, else $NIB_DATA_ROOT.
inline std::filesystem::path resolve_dataset_path(const RunConfig& c) {
  if (!c.dataset_path.empty()) return c.dataset_path;
  if (const char* env = std::getenv(kDataRootEnv); env && *env) return env;
  return {};
}

}  // namespace nib
