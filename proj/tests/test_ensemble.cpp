#include "tlsnoise/ensemble.hpp"
#include "tlsnoise/errors.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

using namespace tlsnoise;

namespace {

// Coarse windows so the properties can be checked in seconds.
EnsembleOptions quick() {
  EnsembleOptions o;
  o.samples_per_rate = 200.0;
  o.relaxation_times = 50.0;
  o.max_samples = std::int64_t{1} << 15;
  o.grid_per_decade = 50;
  return o;
}

}  // namespace

TEST_CASE("default ensemble: seven members, one per decade") {
  const EnsembleSpec spec = default_1f_ensemble();
  REQUIRE(spec.members.size() == 7);
  CHECK(spec.members[3].gamma_total() == doctest::Approx(1e-3));
  CHECK(spec.gamma_mid == doctest::Approx(1e-3));
  for (std::size_t i = 0; i < spec.members.size(); ++i) {
    const TlsParams& m = spec.members[i];
    CHECK(m.gamma_total() == doctest::Approx(std::pow(10.0, static_cast<double>(i) - 6.0)));
    CHECK(m.eta == doctest::Approx(m.gamma_total()));
    CHECK(m.lambda() == 0.0);
    CHECK(m.epsilon == 0.0);
    CHECK(m.delta == 0.0);
  }
}

TEST_CASE("ensemble validation") {
  EnsembleSpec spec;
  CHECK_THROWS_AS(spec.validate(), InvalidParameter);
  spec = default_1f_ensemble();
  spec.per_member_sim = {{1.0, 1.0}};
  CHECK_THROWS_AS(spec.validate(), InvalidParameter);
  CHECK_THROWS_AS(ensemble_mode_from_string("fast"), InvalidParameter);
  CHECK(ensemble_mode_from_string(to_string(EnsembleMode::faithful)) == EnsembleMode::faithful);
}

TEST_CASE("resolved windows scale with the member rate") {
  const EnsembleOptions o;
  const auto slow = choose_sampling(TlsParams::from_total(1e-4, 0.0, 1e-4), {}, 10.0, o);
  const auto fast = choose_sampling(TlsParams::from_total(1.0, 0.0, 1.0), {}, 10.0, o);
  CHECK(slow.t_max * 1e-4 >= o.min_relaxation_times);
  CHECK(fast.t_max >= o.min_relaxation_times);
  CHECK(slow.fs * slow.t_max <= static_cast<double>(o.max_samples));
  CHECK(fast.fs * fast.t_max <= static_cast<double>(o.max_samples));
  const auto driven =
      choose_sampling(TlsParams::from_total(1e-4, 0.0, 1e-4), {1e3, 500.0, 0.1}, 10.0, o);
  CHECK(driven.fs >= 0.4 / std::numbers::pi);
  EnsembleOptions f;
  f.mode = EnsembleMode::faithful;
  const auto same = choose_sampling(TlsParams::from_total(1e-4, 0.0, 1e-4), {}, 10.0, f);
  CHECK(same.t_max * same.fs <= 1e6);
  CHECK(same.fs == 1e3);
}

TEST_CASE("undriven aggregate weight is the member count") {
  EnsembleSpec spec = default_1f_ensemble();
  spec.members.resize(4);
  const EnsembleRun run = simulate_ensemble_members(spec, quick());
  REQUIRE(run.members.size() == 4);
  for (const auto& m : run.members) CHECK(m.norm_total() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(run.aggregate.norm_total() == doctest::Approx(4.0).epsilon(0.05));
  CHECK((run.aggregate.power.array() >= 0.0).all());
}

TEST_CASE("member order does not change the aggregate") {
  EnsembleSpec spec = default_1f_ensemble();
  spec.members.resize(3);
  const Spectrum a = simulate_ensemble(spec, quick());
  std::reverse(spec.members.begin(), spec.members.end());
  const Spectrum b = simulate_ensemble(spec, quick());
  CHECK(a.omega == b.omega);
  CHECK(a.power == b.power);
}

TEST_CASE("parallel and serial members agree bit for bit") {
  EnsembleSpec spec = default_1f_ensemble();
  spec.members.resize(3);
  EnsembleOptions serial = quick();
  serial.threads = 1;
  EnsembleOptions wide = quick();
  wide.threads = 3;
  CHECK(simulate_ensemble(spec, serial).power == simulate_ensemble(spec, wide).power);
}

TEST_CASE("a failing member aborts with its index") {
  EnsembleSpec spec = default_1f_ensemble();
  spec.members.resize(2);
  spec.shared_drive = {1e9, 0.0, 1.0};
  EnsembleOptions o = quick();
  o.direct_step_budget = 1e30;
  try {
    simulate_ensemble(spec, o);
    FAIL("expected a failure");
  } catch (const NumericalFailure& e) {
    CHECK(std::string(e.what()).find("member") != std::string::npos);
  }
}
