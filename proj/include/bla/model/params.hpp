#pragma once

#include <functional>
#include <string>
#include <vector>

#include "bla/diffcore/tape.hpp"
#include "bla/model/config.hpp"

namespace bla::model {

/// y = act(x . weight + bias); weight is [in x out].
struct DenseLayer {
  Param weight;
  Param bias;
};

/// Gate weights act on [h_prev, x_t, y_prev], so each is [(H + in + 1) x H].
struct LstmLayer {
  Param w_forget, w_input, w_output, w_cell;
  Param b_forget, b_input, b_output, b_cell;
};

struct BlaParams {
  Param summarizer;  // [K x M x A]
  std::vector<LstmLayer> lstm;
  std::vector<DenseLayer> dynamic_path;
  std::vector<DenseLayer> static_path;
  std::vector<DenseLayer> fusion;
  DenseLayer output;  // [fusion width x 1], sigmoid head

  /// Visits every parameter with a stable dotted name, in a fixed order.
  void for_each(const std::function<void(const std::string&, Param&)>& fn);
  void for_each(const std::function<void(const std::string&, const Param&)>& fn) const;

  std::size_t count() const;
  void zero_grad();
  bool all_finite() const;
};

/// Zero-valued parameters shaped for `config`.
BlaParams make_params(const BlaConfig& config);

}  // namespace bla::model
