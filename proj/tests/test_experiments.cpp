#include <doctest.h>

#include <cmath>
#include <sstream>

#include "lse/experiments.hpp"
#include "lse/rng.hpp"

namespace {

lse::ExperimentConfig small_config() {
  lse::ExperimentConfig cfg;
  cfg.n = 3;
  cfg.s = 1;
  cfg.trials = 2;
  cfg.seed = 11;
  cfg.m_list = {9};
  cfg.regions = {{0.1, 0.9, 0.1, 0.9}};
  return cfg;
}

}  // namespace

TEST_CASE("draw_signal is deterministic and obeys the amplitude law and regions") {
  lse::ExperimentConfig cfg;
  cfg.n = 7;
  cfg.s = 4;
  cfg.regions = {{0.0, 0.2, 0.0, 0.2}, {0.5, 0.7, 0.5, 0.7}};
  cfg.region_counts = {2, 2};

  const lse::SpectralSignal a = lse::draw_signal(cfg, 123);
  const lse::SpectralSignal b = lse::draw_signal(cfg, 123);
  REQUIRE(a.r() == 4);
  for (int i = 0; i < 4; ++i) {
    CHECK(a.components[i].first.f1 == b.components[i].first.f1);
    CHECK(std::abs(a.components[i].second - b.components[i].second) == 0.0);
    CHECK(std::abs(a.components[i].second) >= 0.5);
  }
  // fixed 2+2 split across the two regions
  for (int i = 0; i < 2; ++i) {
    CHECK(a.components[i].first.f1 <= 0.2);
    CHECK(a.components[i].first.f2 <= 0.2);
  }
  for (int i = 2; i < 4; ++i) {
    CHECK(a.components[i].first.f1 >= 0.5);
    CHECK(a.components[i].first.f1 <= 0.7);
  }
  CHECK(lse::draw_signal(cfg, 124).components[0].first.f1 !=
        a.components[0].first.f1);
}

TEST_CASE("area-weighted placement stays inside the region union") {
  lse::ExperimentConfig cfg;
  cfg.n = 5;
  cfg.s = 6;
  cfg.regions = {{0.0, 0.1, 0.0, 0.1}, {0.6, 0.9, 0.6, 0.9}};
  const lse::SpectralSignal sig = lse::draw_signal(cfg, 5);
  for (const auto& [f, d] : sig.components) {
    const bool in_a = f.f1 <= 0.1 && f.f2 <= 0.1;
    const bool in_b = f.f1 >= 0.6 && f.f1 <= 0.9 && f.f2 >= 0.6 && f.f2 <= 0.9;
    CHECK((in_a || in_b));
  }
}

TEST_CASE("config validation rejects inconsistent settings") {
  lse::ExperimentConfig cfg = small_config();
  CHECK_NOTHROW(cfg.validate());
  cfg.m_list = {0};
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = small_config();
  cfg.m_list = {10};  // > n^2
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = small_config();
  cfg.resolution = 4;  // below 4n
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = small_config();
  cfg.region_counts = {2};  // does not sum to s
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = small_config();
  cfg.trials = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("wilson interval brackets the empirical rate") {
  const auto [lo, hi] = lse::wilson_interval(8, 10);
  // closed-form Wilson score values for p=0.8, n=10, z=1.96
  CHECK(lo == doctest::Approx(0.4901625).epsilon(1e-4));
  CHECK(hi == doctest::Approx(0.9433178).epsilon(1e-4));
  const auto [lo0, hi0] = lse::wilson_interval(0, 20);
  CHECK(lo0 == 0.0);
  CHECK(hi0 > 0.0);
  const auto [lo1, hi1] = lse::wilson_interval(20, 20);
  CHECK(hi1 == 1.0);
  CHECK(lo1 < 1.0);
}

TEST_CASE("run_trial is reproducible and succeeds on an easy instance") {
  const lse::ExperimentConfig cfg = small_config();
  const lse::TrialRecord a = lse::run_trial(cfg, 0, 9, false);
  const lse::TrialRecord b = lse::run_trial(cfg, 0, 9, false);
  CHECK(a.stream_seed == b.stream_seed);
  CHECK(a.success == b.success);
  REQUIRE(a.frequency_errors.size() == b.frequency_errors.size());
  for (size_t i = 0; i < a.frequency_errors.size(); ++i)
    CHECK(std::abs(a.frequency_errors[i] - b.frequency_errors[i]) <= 1e-9);
  CHECK(a.success);  // single component, full observation
  CHECK(!a.solver_failed);
}

TEST_CASE("run_sweep aggregates cells and the CSV round-trips the header") {
  const lse::ExperimentConfig cfg = small_config();
  const lse::SweepReport rep = lse::run_sweep(cfg);
  REQUIRE(rep.cells.size() == 1);  // one m, unweighted only
  CHECK(rep.cells[0].m == 9);
  CHECK(rep.cells[0].trials == 2);
  CHECK(rep.cells[0].successes == 2);
  CHECK(rep.cells[0].rate == doctest::Approx(1.0));
  CHECK(rep.total_solves == 2);
  CHECK(rep.solver_failures == 0);

  std::ostringstream ss;
  lse::sweep_to_csv(rep, ss);
  std::istringstream in(ss.str());
  std::string header;
  std::getline(in, header);
  CHECK(header == "m,method,trials,successes,rate,ci_lo,ci_hi");
  std::string row;
  std::getline(in, row);
  CHECK(row.rfind("9,unweighted,2,2,1", 0) == 0);
}
