#pragma once

#include <cstdint>
#include <string>

#include "bla/datapipe/frame.hpp"
#include "bla/datapipe/schema.hpp"

namespace bla::data {

/// Parameters of the planted-signal cohort.
///
/// Every activity snapshot t carries two latent burst factors u_t ~ N(0, I)
/// that shift the metrics during the last `burst_days` days of the window.
/// The status label of snapshot t is
///   score_t = strength * signal_t + sqrt(1 - strength^2) * noise
///   signal_t = normalised mix of
///     activity:  cos(phi) * <beta_t, u_t> + sin(phi) * u_t0 * u_t1,
///                beta_t rotated by pattern_decay * (C - 1 - t) radians;
///                with activity_memory m > 0 the term sums windows s <= t
///                weighted m^(t - s), normalised to unit variance
///     dynamic:   is_cancel raises risk, is_auto_renew lowers it
///     static:    per-city risk offset
///     guidance:  the standardised previous status y^(t-1)
/// and the top `prevalence` fraction of valid users (by score) are labelled 1.
struct SyntheticSpec {
  std::size_t users = 2000;
  std::size_t observation_days = 120;
  std::size_t window_days = 30;
  std::size_t metrics = 4;
  std::string gamma = "2017-03-31";

  double prevalence = 0.3;
  double signal_strength = 0.99;  // 0: labels independent of inputs, 1: deterministic
  double activity_weight = 0.8;
  double dynamic_weight = 0.35;
  double static_weight = 0.25;
  double guidance_weight = 0.45;
  double nonlinearity = 0.5;   // phi = nonlinearity * pi / 2
  double pattern_decay = 0.0;  // rule rotation per snapshot of distance from the target
  double activity_memory = 0.0;

  std::size_t burst_days = 3;
  double burst_amplitude = 2.0;
  double daily_noise = 0.75;
  double late_registration_rate = 0.2;
  std::size_t city_levels = 5;
};

struct SyntheticCohort {
  SnapshotFrame frame;
  Schema schema;
};

/// Deterministic in (spec, seed). Throws ConfigError on invalid geometry.
SyntheticCohort generate_synthetic_cohort(const SyntheticSpec& spec, std::uint64_t seed);

}  // namespace bla::data
