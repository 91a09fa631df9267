#include "bla/model/config.hpp"

#include "bla/error.hpp"

namespace bla::model {

std::size_t BlaConfig::conv_steps() const {
  if (window() > observation_days || stride() == 0) return 0;
  return (observation_days - window()) / stride() + 1;
}

void BlaConfig::validate() const {
  if (window_days == 0 || observation_days % window_days != 0 || observation_days < window_days) {
    throw ConfigError("observation span must be a positive multiple of the snapshot window");
  }
  if (metrics == 0) throw ConfigError("activity path needs at least one metric");
  if (conv_kernels == 0) throw ConfigError("summarization layer needs at least one kernel");
  if (window() > observation_days) throw ConfigError("summarization window exceeds the observation span");
  if (conv_steps() != snapshots()) {
    throw ConfigError("summarization geometry (window " + std::to_string(window()) + ", stride " +
                      std::to_string(stride()) + ") emits " + std::to_string(conv_steps()) + " steps, expected C = " +
                      std::to_string(snapshots()));
  }
  if (lstm_units.empty()) throw ConfigError("activity path needs at least one LSTM layer");
  for (const auto* widths : {&lstm_units, &dynamic_hidden, &static_hidden, &fusion_hidden}) {
    for (std::size_t w : *widths) {
      if (w == 0) throw ConfigError("layer widths must be at least 1");
    }
  }
}

BlaConfig BlaConfig::for_frame(const data::SnapshotFrame& frame) {
  BlaConfig c;
  c.observation_days = frame.config.observation_days;
  c.window_days = frame.config.window_days;
  c.metrics = frame.metrics();
  c.dynamic_width = frame.dynamic_width();
  c.static_width = frame.static_width();
  return c;
}

}  // namespace bla::model
