// Command-line harness: signal generation, single-instance recovery, and
// the success-rate / dual-surface experiment drivers.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lse/certificate.hpp"
#include "lse/experiments.hpp"
#include "lse/grid_oracle.hpp"
#include "lse/recovery.hpp"
#include "lse/rng.hpp"
#include "lse/signal.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitSolverFailure = 3;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot read file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Prior file: JSON list of { "f1": [lo,hi], "f2": [lo,hi], "prob": p }
// entries plus at most one { "complement": true, "prob": p } entry that
// expands to the complement rectangles of the single listed band.
std::vector<lse::SubbandPrior> load_priors(const std::string& path) {
  const nlohmann::json doc = nlohmann::json::parse(read_file(path));
  if (!doc.is_array())
    throw std::invalid_argument("prior file: top level must be a list");

  std::vector<lse::SubbandPrior> bands;
  bool want_complement = false;
  double complement_prob = 0.0;
  for (const auto& e : doc) {
    if (e.value("complement", false)) {
      if (want_complement)
        throw std::invalid_argument("prior file: multiple complement entries");
      want_complement = true;
      complement_prob = e.at("prob").get<double>();
      continue;
    }
    lse::SubbandPrior p;
    p.raw.lo1 = e.at("f1").at(0).get<double>();
    p.raw.hi1 = e.at("f1").at(1).get<double>();
    p.raw.lo2 = e.at("f2").at(0).get<double>();
    p.raw.hi2 = e.at("f2").at(1).get<double>();
    p.prob = e.at("prob").get<double>();
    p.validate();
    bands.push_back(p);
  }
  if (want_complement) {
    if (bands.size() != 1)
      throw std::invalid_argument(
          "prior file: complement entry requires exactly one band");
    return lse::prior_complement(bands[0], complement_prob);
  }
  return bands;
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) out.push_back(std::stoi(tok));
  }
  if (out.empty()) throw std::invalid_argument("empty integer list");
  return out;
}

void add_region_options(CLI::App* cmd, lse::ExperimentConfig& cfg,
                        std::vector<std::vector<double>>& region_args) {
  cmd->add_option("--region", region_args,
                  "sampling region lo1 hi1 lo2 hi2 (repeatable)")
      ->expected(-1)
      ->type_size(4);
  cmd->add_option("--region-counts", cfg.region_counts,
                  "fixed per-region component counts (must sum to s)");
}

void apply_regions(lse::ExperimentConfig& cfg,
                   const std::vector<std::vector<double>>& region_args) {
  for (const auto& r : region_args)
    cfg.regions.push_back({r[0], r[1], r[2], r[3]});
}

int cmd_generate(const lse::ExperimentConfig& cfg, const std::string& out_path) {
  const std::uint64_t stream = lse::derive_stream(cfg.seed, 0, 0);
  lse::SplitMix64 g(stream);
  const lse::SpectralSignal sig = lse::draw_signal(cfg, g.next());
  const std::string text = lse::signal_to_json(sig);
  if (out_path.empty()) {
    std::cout << text << '\n';
  } else {
    std::ofstream out(out_path);
    if (!out) throw std::invalid_argument("cannot write: " + out_path);
    out << text << '\n';
  }
  return kExitOk;
}

int cmd_solve(const lse::ExperimentConfig& cfg, const std::string& signal_path,
              int m) {
  lse::SpectralSignal truth;
  if (!signal_path.empty()) {
    truth = lse::signal_from_json(read_file(signal_path));
  } else {
    lse::SplitMix64 g(lse::derive_stream(cfg.seed, 0, 0));
    truth = lse::draw_signal(cfg, g.next());
  }
  const int n = truth.n;
  const int n2 = n * n;
  if (m <= 0) m = n2;
  if (m > n2) throw std::invalid_argument("solve: m exceeds n^2");

  lse::SampleSet set;
  if (m == n2) {
    set = lse::SampleSet::full(n);
  } else {
    lse::SplitMix64 g(lse::derive_stream(cfg.seed, 0, 2));
    set = lse::SampleSet::from_flat(n, g.sample_without_replacement(n2, m));
  }
  const lse::Observations obs = lse::sample(lse::synthesize(truth), set);

  const bool weighted = !cfg.priors.empty();
  const lse::DualCertificate cert =
      weighted
          ? lse::solve_weighted(obs, cfg.priors, {}, cfg.covering_straddle)
          : lse::solve_unweighted(obs);
  if (cert.status != lse::SdpStatus::Optimal) {
    std::cerr << "solver did not reach optimality\n";
    return kExitSolverFailure;
  }

  const int res = cfg.resolution > 0 ? cfg.resolution : std::max(256, 4 * n);
  const lse::DualPolynomialGrid grid = lse::eval_dual_poly(cert, res);
  std::vector<lse::PeakRegion> regions;
  if (weighted) {
    for (const auto& p : cfg.priors) regions.push_back({p.raw, p.weight()});
  } else {
    regions.push_back({{0.0, 1.0, 0.0, 1.0}, 1.0});
  }
  const std::vector<lse::Frequency2D> peaks =
      lse::find_peaks(grid, cert, regions);

  std::cout << "recovered " << peaks.size() << " component(s)\n";
  lse::SpectralSignal est;
  est.n = n;
  for (const auto& f : peaks) est.components.push_back({f, {1.0, 0.0}});
  if (!peaks.empty() && static_cast<int>(peaks.size()) <= set.size()) {
    try {
      const lse::AmplitudeFit fit = lse::recover_amplitudes(peaks, obs);
      for (size_t i = 0; i < peaks.size(); ++i)
        est.components[i].second = fit.amplitudes(static_cast<Eigen::Index>(i));
    } catch (const std::exception& e) {
      std::cerr << "amplitude fit skipped: " << e.what() << '\n';
    }
  }
  for (const auto& [f, d] : est.components)
    std::cout << "  f = (" << f.f1 << ", " << f.f2 << ")  d = " << d.real()
              << (d.imag() >= 0 ? "+" : "") << d.imag() << "j\n";
  const lse::RecoveryResult sc = lse::score(truth, est, cfg.success_radius);
  std::cout << "success: " << (sc.success ? "yes" : "no") << '\n';
  return kExitOk;
}

int cmd_sweep(const lse::ExperimentConfig& cfg) {
  const lse::SweepReport report = lse::run_sweep(cfg);
  const std::string path = cfg.out_dir + "/sweep.csv";
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write: " + path);
  lse::sweep_to_csv(report, out);
  std::cout << "wrote " << path << '\n';
  for (const auto& c : report.cells)
    std::cout << "  m=" << c.m << ' ' << c.method << " rate=" << c.rate
              << " [" << c.ci_lo << ", " << c.ci_hi << "]\n";
  if (report.total_solves > 0 &&
      2 * report.solver_failures > report.total_solves) {
    std::cerr << "systematic solver failure: " << report.solver_failures << '/'
              << report.total_solves << " trials failed numerically\n";
    return kExitSolverFailure;
  }
  return kExitOk;
}

int cmd_dualpoly(const lse::ExperimentConfig& cfg) {
  const lse::DualPolyReport report = lse::run_dualpoly(cfg);
  for (const auto& f : report.surface_files) std::cout << "wrote " << f << '\n';
  std::cout << "wrote " << report.summary_file << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"off-the-grid 2-D line spectral estimation"};
  app.require_subcommand(1);

  lse::ExperimentConfig cfg;
  std::string prior_path;
  std::string out_path;
  std::string signal_path;
  std::string m_list_text;
  int solve_m = 0;
  std::vector<std::vector<double>> region_args;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--n", cfg.n, "index grid side");
    cmd->add_option("--s", cfg.s, "component count");
    cmd->add_option("--seed", cfg.seed, "master seed");
    cmd->add_option("--prior-file", prior_path, "subband prior JSON file");
    cmd->add_option("--resolution", cfg.resolution, "dual polynomial grid");
    cmd->add_option("--success-radius", cfg.success_radius,
                    "per-frequency match radius");
    cmd->add_flag("--covering-straddle", cfg.covering_straddle,
                  "fold straddling bands to a covering interval");
    add_region_options(cmd, cfg, region_args);
  };

  CLI::App* generate = app.add_subcommand("generate", "emit a signal JSON");
  add_common(generate);
  generate->add_option("--out", out_path, "output file (default stdout)");

  CLI::App* solve = app.add_subcommand("solve", "recover one instance");
  add_common(solve);
  solve->add_option("--signal", signal_path, "signal JSON file");
  solve->add_option("--m", solve_m, "measurement count (default n^2)");

  CLI::App* sweep = app.add_subcommand("sweep", "success rate vs m");
  add_common(sweep);
  sweep->add_option("--trials", cfg.trials, "trials per (m, method)");
  sweep->add_option("--m-list", m_list_text, "comma-separated m values");
  sweep->add_option("--out", cfg.out_dir, "output directory");

  CLI::App* dualpoly = app.add_subcommand("dualpoly", "dual surfaces");
  add_common(dualpoly);
  dualpoly->add_option("--out", cfg.out_dir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    apply_regions(cfg, region_args);
    if (!prior_path.empty()) cfg.priors = load_priors(prior_path);

    if (generate->parsed()) {
      cfg.validate();
      return cmd_generate(cfg, out_path);
    }
    if (solve->parsed()) {
      cfg.validate();
      return cmd_solve(cfg, signal_path, solve_m);
    }
    if (sweep->parsed()) {
      if (!m_list_text.empty()) cfg.m_list = parse_int_list(m_list_text);
      if (cfg.m_list.empty())
        cfg.m_list = {10, 15, 20, 25, 30, 35, 40, 45, 49};
      if (cfg.regions.empty()) {
        cfg.regions = {{0.0, 0.2, 0.0, 0.2}, {0.5, 0.7, 0.5, 0.7}};
        if (cfg.s == 4 && cfg.region_counts.empty()) cfg.region_counts = {2, 2};
      }
      cfg.validate();
      return cmd_sweep(cfg);
    }
    if (dualpoly->parsed()) {
      if (cfg.regions.empty()) cfg.regions = {{0.1, 0.4, 0.1, 0.4}};
      cfg.validate();
      return cmd_dualpoly(cfg);
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitSolverFailure;
  }
  return kExitOk;
}
