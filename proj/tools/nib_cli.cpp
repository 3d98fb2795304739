// Command-line runner: run, sweep, compare, render.

#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "nib/nib.hpp"

namespace {

nib::RunConfig load(const std::string& path, const std::vector<std::string>& overrides) {
  nib::RunConfig cfg = nib::load_run_config(path);
  for (const auto& o : overrides) nib::apply_override(cfg, o);
  return cfg;
}

std::vector<std::uint64_t> parse_seeds(const std::string& list) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t pos = 0;
      out.push_back(std::stoull(item, &pos));
      if (pos != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw nib::ParameterError("bad seed '" + item + "'");
    }
  }
  if (out.empty()) throw nib::ParameterError("no seeds given");
  return out;
}

std::string default_run_dir(const nib::RunConfig& cfg) {
  std::string name = cfg.label.empty() ? cfg.method() : cfg.label;
  for (char& c : name)
    if (c == '+' || c == ' ' || c == '/') c = '_';
  return "runs/" + name + "_seed" + std::to_string(cfg.seed_init);
}

void print_epoch(const nib::EpochRecord& r) {
  if (r.net != 'A') return;
  std::cerr << "epoch " << r.epoch << "  acc " << nib::format_real(r.test_acc, 4) << "  ens "
            << nib::format_real(r.test_acc_ensemble, 4) << "  precision "
            << nib::format_real(r.label_precision, 4) << "  R " << nib::format_real(r.remember_rate, 3)
            << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Noisy-label training with the noise ignoring block"};
  app.require_subcommand(1);

  std::string config_path, out_dir, seeds_list, metric, csv_path;
  std::vector<std::string> overrides, dirs;
  std::uint64_t seed = 0;
  bool force = false;

  auto* run = app.add_subcommand("run", "Train one configuration");
  run->add_option("--config", config_path, "Config file or run manifest")->required();
  auto* seed_opt = run->add_option("--seed", seed, "Seed for noise, initialization and shuffling");
  run->add_option("--out", out_dir, "Output directory");
  run->add_option("--set", overrides, "Override a config key (key=value)");
  run->add_flag("--force", force, "Replace an existing run in the output directory");

  auto* sw = app.add_subcommand("sweep", "Train one configuration for several seeds");
  sw->add_option("--config", config_path, "Config file or run manifest")->required();
  sw->add_option("--seeds", seeds_list, "Comma-separated seeds")->required();
  sw->add_option("--out", out_dir, "Root directory for seed_<n> runs");
  sw->add_option("--set", overrides, "Override a config key (key=value)");
  sw->add_flag("--force", force, "Replace existing runs");

  auto* cmp = app.add_subcommand("compare", "Tabulate last-k metrics across runs");
  cmp->add_option("dirs", dirs, "Run directories")->required();
  cmp->add_option("--csv", csv_path, "Also write the table as CSV");

  auto* rnd = app.add_subcommand("render", "Draw a metric against epochs as SVG");
  rnd->add_option("dirs", dirs, "Run directories")->required();
  rnd->add_option("--metric", metric, "metrics.csv column")->required();
  rnd->add_option("--out", out_dir, "Output SVG file (default <metric>.svg)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      nib::RunConfig cfg = load(config_path, overrides);
      if (*seed_opt) cfg.set_run_seed(seed);
      const std::string dir = out_dir.empty() ? default_run_dir(cfg) : out_dir;
      std::cerr << "run " << cfg.method() << " -> " << dir << '\n';
      const auto s = nib::run_to_directory(cfg, dir, force, print_epoch);
      std::cout << "last-" << cfg.last_k << " test_acc=" << nib::format_real(s.last_acc)
                << " test_acc_ensemble=" << nib::format_real(s.last_acc_ensemble)
                << " label_precision=" << nib::format_real(s.last_precision) << '\n';
    } else if (*sw) {
      const nib::RunConfig cfg = load(config_path, overrides);
      const std::string root = out_dir.empty() ? "runs/sweep" : out_dir;
      const auto runs = nib::sweep(cfg, parse_seeds(seeds_list), root, force);
      for (const auto& s : runs)
        std::cout << s.dir.string() << " test_acc=" << nib::format_real(s.last_acc)
                  << " label_precision=" << nib::format_real(s.last_precision) << '\n';
      std::cout << "summary: " << (std::filesystem::path(root) / "summary.csv").string() << '\n';
    } else if (*cmp) {
      std::vector<std::filesystem::path> paths(dirs.begin(), dirs.end());
      const auto c = nib::compare_runs(paths);
      std::cout << c.text;
      if (!csv_path.empty()) nib::write_text(csv_path, c.csv);
    } else if (*rnd) {
      std::vector<std::filesystem::path> paths(dirs.begin(), dirs.end());
      const std::string svg = nib::render_svg(paths, metric);
      const std::string file = out_dir.empty() ? metric + ".svg" : out_dir;
      nib::write_text(file, svg);
      std::cout << file << '\n';
    }
  } catch (const nib::Error& e) {
    std::cerr << "error kind=" << e.kind() << " message=\"" << e.what() << "\"\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error kind=internal message=\"" << e.what() << "\"\n";
    return 1;
  }
  return 0;
}
