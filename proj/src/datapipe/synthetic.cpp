#include "bla/datapipe/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "bla/error.hpp"

namespace bla::data {
namespace {

constexpr double kCancelRate = 0.15;
constexpr double kRenewRate = 0.6;

struct UserDraw {
  std::size_t first_day = 0;  // first observed day index; 0 for early registrants
  double tenure_offset = 0.0; // days registered before the observation span
  double engagement = 1.0;
  std::vector<double> burst;  // [C x 2]
  std::vector<double> cancel, renew;
  std::size_t city = 0;
  double age = 0.0;
};

std::string user_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "u%06zu", i);
  return buf;
}

}  // namespace

SyntheticCohort generate_synthetic_cohort(const SyntheticSpec& spec, std::uint64_t seed) {
  SnapshotConfig config{parse_date(spec.gamma), spec.observation_days, spec.window_days};
  config.validate();
  if (spec.metrics < 2) throw ConfigError("synthetic cohort needs at least two activity metrics");
  if (spec.users < 2) throw ConfigError("synthetic cohort needs at least two users");
  if (spec.burst_days < 1 || spec.burst_days > spec.window_days) throw ConfigError("burst_days must lie in [1, tau]");
  if (spec.city_levels < 2) throw ConfigError("city needs at least two levels");
  if (!(spec.prevalence > 0.0 && spec.prevalence < 1.0)) throw ConfigError("prevalence must lie in (0, 1)");
  if (spec.activity_memory < 0.0 || spec.activity_memory > 1.0) throw ConfigError("activity memory must lie in [0, 1]");
  if (spec.signal_strength < 0.0 || spec.signal_strength > 1.0) throw ConfigError("signal strength must lie in [0, 1]");

  const std::size_t n = spec.users, t_days = spec.observation_days, tau = spec.window_days;
  const std::size_t c = config.snapshots(), a = spec.metrics, levels = spec.city_levels;

  Schema schema;
  schema.snapshot = config;
  for (std::size_t k = 0; k < a; ++k) schema.activity_metrics.push_back("metric_" + std::to_string(k + 1));
  schema.dynamic_features = {{"membership", false, {}}, {"is_auto_renew", false, {}}, {"is_cancel", false, {}}};
  FeatureSpec city{"city", true, {}};
  for (std::size_t l = 0; l < levels; ++l) city.levels.push_back(std::to_string(l + 1));
  schema.static_features = {{"bd", false, {}}, city};

  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) ids.push_back(user_name(i));
  SnapshotFrame frame = make_frame(config, ids, a, 3, 1 + levels);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  // Burst loading of each metric on the two latent factors.
  std::vector<double> loading(a * 2, 0.0);
  for (std::size_t k = 0; k < a; ++k) loading[k * 2 + k % 2] = (k / 2) % 2 == 0 ? 1.0 : -1.0;

  std::vector<UserDraw> draws(n);
  for (std::size_t i = 0; i < n; ++i) {
    UserDraw& u = draws[i];
    if (unit(rng) < spec.late_registration_rate) {
      u.first_day = tau + static_cast<std::size_t>(unit(rng) * static_cast<double>(t_days - tau));
      u.first_day = std::min(u.first_day, t_days - 1);
    } else {
      u.tenure_offset = 1.0 + std::floor(unit(rng) * 365.0);
    }
    u.engagement = 0.5 + unit(rng);
    u.burst.resize(c * 2);
    for (double& b : u.burst) b = normal(rng);
    u.cancel.resize(c);
    u.renew.resize(c);
    for (std::size_t t = 0; t < c; ++t) {
      u.cancel[t] = unit(rng) < kCancelRate ? 1.0 : 0.0;
      u.renew[t] = unit(rng) < kRenewRate ? 1.0 : 0.0;
    }
    u.city = static_cast<std::size_t>(unit(rng) * static_cast<double>(levels)) % levels;
    u.age = 18.0 + std::floor(unit(rng) * 43.0);

    for (std::size_t t = 0; t < c; ++t) {
      frame.masks.at(i, t) = (t + 1) * tau - 1 < u.first_day ? 0.0 : 1.0;
    }
    for (std::size_t d = u.first_day; d < t_days; ++d) {
      const std::size_t t = d / tau;
      const bool in_burst = d % tau >= tau - spec.burst_days;
      for (std::size_t k = 0; k < a; ++k) {
        double v = u.engagement * static_cast<double>(k + 1) + spec.daily_noise * normal(rng);
        if (in_burst) {
          v += spec.burst_amplitude * (loading[k * 2] * u.burst[t * 2] + loading[k * 2 + 1] * u.burst[t * 2 + 1]);
        }
        frame.activity.at(i, d, k) = v;
      }
    }
    for (std::size_t t = 0; t < c; ++t) {
      if (frame.masks.at(i, t) == 0.0) continue;
      const double end_day = static_cast<double>((t + 1) * tau);
      frame.dynamic.at(i, t, 0) = (end_day - static_cast<double>(u.first_day) + u.tenure_offset) / 365.0;
      frame.dynamic.at(i, t, 1) = u.renew[t];
      frame.dynamic.at(i, t, 2) = u.cancel[t];
    }
    frame.statics.at(i, 0) = u.age / 100.0;
    frame.statics.at(i, 1 + u.city) = 1.0;
  }

  // Standardised city risk, linear from high (level 1) to low (last level).
  std::vector<double> city_risk(levels);
  double mean = 0.0, sq = 0.0;
  for (std::size_t l = 0; l < levels; ++l) {
    city_risk[l] = 1.0 - 2.0 * static_cast<double>(l) / static_cast<double>(levels - 1);
    mean += city_risk[l];
  }
  mean /= static_cast<double>(levels);
  for (double& r : city_risk) sq += (r - mean) * (r - mean);
  const double sd = std::sqrt(sq / static_cast<double>(levels));
  for (double& r : city_risk) r = (r - mean) / sd;

  const double norm = std::sqrt(spec.activity_weight * spec.activity_weight + spec.dynamic_weight * spec.dynamic_weight +
                                spec.static_weight * spec.static_weight + spec.guidance_weight * spec.guidance_weight);
  const double w_act = norm > 0 ? spec.activity_weight / norm : 0.0;
  const double w_dyn = norm > 0 ? spec.dynamic_weight / norm : 0.0;
  const double w_stat = norm > 0 ? spec.static_weight / norm : 0.0;
  const double w_guid = norm > 0 ? spec.guidance_weight / norm : 0.0;
  const double phi = spec.nonlinearity * std::numbers::pi / 2.0;
  const double strength = spec.signal_strength;
  const double noise_scale = std::sqrt(1.0 - strength * strength);
  const double cancel_sd = std::sqrt(kCancelRate * (1 - kCancelRate));
  const double renew_sd = std::sqrt(kRenewRate * (1 - kRenewRate));
  const double status_sd = std::sqrt(spec.prevalence * (1 - spec.prevalence));

  std::vector<double> scores(n);
  std::vector<std::size_t> valid;
  for (std::size_t t = 0; t < c; ++t) {
    const double angle = spec.pattern_decay * static_cast<double>(c - 1 - t);
    const double beta0 = std::cos(angle), beta1 = std::sin(angle);
    valid.clear();
    for (std::size_t i = 0; i < n; ++i) {
      const UserDraw& u = draws[i];
      const double eps = normal(rng);  // drawn for every user to keep the stream aligned
      if (frame.masks.at(i, t) == 0.0) continue;
      double act = 0.0, carry = 1.0, carry_norm = 0.0;
      for (std::size_t s = t + 1; s-- > 0; carry *= spec.activity_memory) {
        const double u0 = u.burst[s * 2], u1 = u.burst[s * 2 + 1];
        act += carry * (std::cos(phi) * (beta0 * u0 + beta1 * u1) + std::sin(phi) * u0 * u1);
        carry_norm += carry * carry;
        if (spec.activity_memory == 0.0) break;
      }
      act /= std::sqrt(carry_norm);
      const double dyn = ((u.cancel[t] - kCancelRate) / cancel_sd - (u.renew[t] - kRenewRate) / renew_sd) /
                         std::numbers::sqrt2;
      const double guid =
          t == 0 ? 0.0 : (frame.labels.at(i, t - 1) - spec.prevalence) / status_sd * frame.masks.at(i, t - 1);
      const double signal = w_act * act + w_dyn * dyn + w_stat * city_risk[u.city] + w_guid * guid;
      scores[i] = strength * signal + noise_scale * eps;
      valid.push_back(i);
    }
    // Top `prevalence` fraction of valid users by score; ties broken by index.
    std::stable_sort(valid.begin(), valid.end(), [&](std::size_t x, std::size_t y) { return scores[x] > scores[y]; });
    const auto positives = static_cast<std::size_t>(std::lround(spec.prevalence * static_cast<double>(valid.size())));
    for (std::size_t r = 0; r < positives; ++r) frame.labels.at(valid[r], t) = 1.0;
  }
  frame.validate();
  return {std::move(frame), std::move(schema)};
}

}  // namespace bla::data
