#pragma once

#include <random>

#include "bla/datapipe/synthetic.hpp"
#include "bla/model/params.hpp"

namespace bla::testing {

/// Small cohort: T = 12, tau = 4 (C = 3), A = 2, D = 3, S = 4.
inline data::SyntheticCohort small_cohort(std::size_t users = 40, std::uint64_t seed = 7) {
  data::SyntheticSpec spec;
  spec.users = users;
  spec.observation_days = 12;
  spec.window_days = 4;
  spec.metrics = 2;
  spec.burst_days = 2;
  spec.city_levels = 3;
  return data::generate_synthetic_cohort(spec, seed);
}

inline model::BlaConfig small_config(const data::SnapshotFrame& frame) {
  model::BlaConfig c = model::BlaConfig::for_frame(frame);
  c.conv_kernels = 3;
  c.lstm_units = {4, 3};
  c.dynamic_hidden = {3};
  c.static_hidden = {2};
  c.fusion_hidden = {3};
  return c;
}

inline void randomize(model::BlaParams& params, std::mt19937_64& rng, double scale = 0.5) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  params.for_each([&](const std::string&, Param& p) {
    for (double& v : p.value.data()) v = dist(rng);
  });
}

}  // namespace bla::testing
