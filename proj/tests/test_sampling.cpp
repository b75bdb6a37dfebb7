#include <doctest.h>

#include <cmath>

#include "ptn/errors.hpp"
#include "ptn/eval.hpp"
#include "ptn/oracle.hpp"
#include "ptn/sampling.hpp"
#include "support.hpp"

using namespace ptn;
using test_support::random_model;
using test_support::rel_err;

namespace {

// One-hot cores: the model puts all mass on a single assignment.
MpsModel one_hot_model(PositivityMode mode, std::span<const int> target) {
  std::vector<Core> cores;
  for (std::size_t n = 0; n < target.size(); ++n) {
    Core c(1, 2, 1);
    c.at(0, static_cast<std::size_t>(target[n]), 0) = 1.0;
    cores.push_back(std::move(c));
  }
  return MpsModel(std::move(cores), mode);
}

}  // namespace

TEST_SUITE("sampling") {
  TEST_CASE("uniform model gives uniform conditionals") {
    const auto model = test_support::constant_model(PositivityMode::sigma_abs, 4, 3, 2, 1.0);
    const std::vector<int> prefix{1, 2};
    const auto p = conditional_dist(model, prefix);
    REQUIRE(p.size() == 3);
    for (double x : p) CHECK(x == doctest::Approx(1.0 / 3.0));
  }

  TEST_CASE("conditionals match the enumeration oracle in every mode") {
    Rng rng(1);
    for (const auto mode : test_support::kAllModes) {
      for (int trial = 0; trial < 4; ++trial) {
        const auto model = random_model(mode, 6, 3, 3, rng);
        const EnumeratedJoint joint = enumerate_joint(model);
        const Sampler sampler(model);
        for (std::size_t len = 0; len < model.length(); ++len) {
          auto y = test_support::random_assignment(model, rng);
          y.resize(len);
          const auto expect = oracle_conditional(joint, y);
          const auto got = sampler.conditional(y);
          REQUIRE(got.size() == expect.size());
          double total = 0.0;
          for (std::size_t i = 0; i < got.size(); ++i) {
            CHECK(got[i] >= 0.0);
            total += got[i];
            CHECK(std::fabs(got[i] - expect[i]) < 1e-9);
          }
          CHECK(std::fabs(total - 1.0) < 1e-10);
        }
      }
    }
  }

  TEST_CASE("one-hot model samples deterministically in both directions") {
    const std::vector<int> target{1, 0, 1, 1};
    for (const auto mode : {PositivityMode::sigma_abs, PositivityMode::born}) {
      const auto model = one_hot_model(mode, target);
      Rng rng(2);
      for (const auto& s : sample(model, rng, 20)) CHECK(s == target);
      for (const auto& s : sample_backward(model, rng, 20)) CHECK(s == target);
      const std::vector<int> full_prefix{1, 0, 1};
      const auto p = conditional_dist(model, full_prefix);
      CHECK(p[0] == doctest::Approx(0.0));
      CHECK(p[1] == doctest::Approx(1.0));
    }
  }

  TEST_CASE("fixed seed reproduces the sample set") {
    Rng model_rng(3);
    const auto model = random_model(PositivityMode::born, 5, 2, 3, model_rng);
    Rng a(77), b(77);
    CHECK(sample(model, a, 50) == sample(model, b, 50));
    Rng c(78), d(78);
    CHECK(sample_backward(model, c, 50) == sample_backward(model, d, 50));
  }

  TEST_CASE("forward sampling hits the exact joint at N = 4") {
    Rng model_rng(4);
    std::vector<int> dims(4, 2);
    const auto model = MpsModel::random(PositivityMode::sigma_exp, dims, 3, model_rng);
    const EnumeratedJoint joint = enumerate_joint(model);
    Rng rng(5);
    const auto draws = sample(model, rng, 100000);
    CHECK(test_support::tv_against_joint(joint, draws) <= 0.01);
  }

  TEST_CASE("backward sampling agrees with the joint at N = 4") {
    Rng model_rng(6);
    std::vector<int> dims(4, 2);
    const auto model = MpsModel::random(PositivityMode::born, dims, 3, model_rng);
    const EnumeratedJoint joint = enumerate_joint(model);
    Rng rng(7);
    const auto draws = sample_backward(model, rng, 100000);
    CHECK(test_support::tv_against_joint(joint, draws) <= 0.015);
  }

  TEST_CASE("single-core backward sampling equals forward sampling") {
    Rng model_rng(8);
    const auto model = random_model(PositivityMode::sigma_softplus, 1, 3, 1, model_rng);
    Rng a(9), b(9);
    CHECK(sample(model, a, 40) == sample_backward(model, b, 40));
  }

  TEST_CASE("log_marginal basics") {
    Rng rng(10);
    for (const auto mode : test_support::kAllModes) {
      const auto model = random_model(mode, 5, 2, 3, rng);
      CHECK(std::fabs(log_marginal(model, {})) < 1e-12);

      const auto y = test_support::random_assignment(model, rng);
      PartialAssignment full;
      for (std::size_t n = 0; n < y.size(); ++n) full[n] = y[n];
      const double lm = log_marginal(model, full);
      const double lp = log_mass(model, y) - log_normalizer(model);
      CHECK(std::fabs(lm - lp) < 1e-12);
    }
  }

  TEST_CASE("subset marginals match enumeration") {
    Rng rng(11);
    for (const auto mode : test_support::kAllModes) {
      const auto model = random_model(mode, 6, 2, 3, rng);
      const EnumeratedJoint joint = enumerate_joint(model);
      for (int trial = 0; trial < 8; ++trial) {
        PartialAssignment given;
        const auto y = test_support::random_assignment(model, rng);
        for (std::size_t n = 0; n < model.length(); ++n)
          if (rng.uniform() < 0.5) given[n] = y[n];
        if (given.empty()) continue;
        CHECK(rel_err(log_marginal(model, given), oracle_log_marginal(joint, given), 1e-9) <
              1e-9);
      }
    }
  }

  TEST_CASE("marginal coherence: summing out one position is a no-op") {
    Rng rng(12);
    const auto model = random_model(PositivityMode::born, 6, 2, 3, rng);
    for (int trial = 0; trial < 5; ++trial) {
      PartialAssignment given;
      const auto y = test_support::random_assignment(model, rng);
      for (std::size_t n = 0; n < model.length(); ++n)
        if (rng.uniform() < 0.4) given[n] = y[n];
      std::size_t extra = rng.uniform_index(model.length());
      while (given.count(extra)) extra = (extra + 1) % model.length();
      double mass = 0.0;
      for (int v = 0; v < model.dim(extra); ++v) {
        PartialAssignment ext = given;
        ext[extra] = v;
        mass += std::exp(log_marginal(model, ext));
      }
      CHECK(rel_err(mass, std::exp(log_marginal(model, given))) < 1e-9);
    }
  }

  TEST_CASE("ancestral conditionals chain up to the joint probability") {
    Rng rng(13);
    for (const auto mode : {PositivityMode::sigma_exp, PositivityMode::born}) {
      const auto model = random_model(mode, 6, 2, 3, rng);
      const Sampler sampler(model);
      const auto y = test_support::random_assignment(model, rng);
      double chained = 0.0;
      for (std::size_t n = 0; n < model.length(); ++n) {
        const std::span<const int> prefix(y.data(), n);
        chained += std::log(sampler.conditional(prefix)[static_cast<std::size_t>(y[n])]);
      }
      const double direct = log_mass(model, y) - log_normalizer(model);
      CHECK(std::fabs(chained - direct) < 1e-9);
    }
  }

  TEST_CASE("zero-probability prefix raises zero_amplitude_error") {
    const std::vector<int> target{1, 1};
    const auto model = one_hot_model(PositivityMode::sigma_abs, target);
    const std::vector<int> dead_prefix{0};
    CHECK_THROWS_AS(conditional_dist(model, dead_prefix), zero_amplitude_error);
  }

  TEST_CASE("query validation") {
    Rng rng(14);
    const auto model = random_model(PositivityMode::sigma_exp, 4, 2, 2, rng);
    QuerySpec overlap;
    overlap.conditioned[1] = 0;
    overlap.targets = {1};
    CHECK_THROWS_AS(overlap.validate(model), argument_error);
    QuerySpec out_of_range;
    out_of_range.targets = {9};
    CHECK_THROWS_AS(out_of_range.validate(model), index_error);
    QuerySpec duplicate;
    duplicate.targets = {2, 2};
    CHECK_THROWS_AS(duplicate.validate(model), argument_error);
  }

  TEST_CASE("conditional queries sample the right marginal") {
    Rng model_rng(15);
    std::vector<int> dims(4, 2);
    const auto model = MpsModel::random(PositivityMode::sigma_exp, dims, 2, model_rng);
    const EnumeratedJoint joint = enumerate_joint(model);

    // p(y_2 | y_0 = 1), marginalizing positions 1 and 3
    QuerySpec query;
    query.conditioned[0] = 1;
    query.targets = {2};

    double expect1 = 0.0, base = 0.0;
    for (std::size_t idx = 0; idx < joint.mass.size(); ++idx) {
      const auto y = joint.assignment(idx);
      if (y[0] != 1) continue;
      base += joint.mass[idx];
      if (y[2] == 1) expect1 += joint.mass[idx];
    }
    const double p1 = expect1 / base;

    Rng rng(16);
    const std::size_t draws = 20000;
    std::size_t hits = 0;
    for (std::size_t k = 0; k < draws; ++k) {
      const auto out = sample_query(model, query, rng);
      REQUIRE(out.size() == 1);
      if (out.at(2) == 1) ++hits;
    }
    CHECK(std::fabs(static_cast<double>(hits) / draws - p1) < 0.02);
  }
}
