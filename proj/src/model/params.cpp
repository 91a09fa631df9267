#include "bla/model/params.hpp"

namespace bla::model {
namespace {

DenseLayer make_dense(std::size_t in, std::size_t out) {
  return {Param(Tensor({in, out})), Param(Tensor({out}))};
}

std::vector<DenseLayer> make_stack(std::size_t in, const std::vector<std::size_t>& widths) {
  std::vector<DenseLayer> layers;
  for (std::size_t w : widths) {
    layers.push_back(make_dense(in, w));
    in = w;
  }
  return layers;
}

std::size_t stack_width(std::size_t in, const std::vector<std::size_t>& widths) {
  return widths.empty() ? in : widths.back();
}

template <typename Self, typename Fn>
void visit(Self& self, Fn&& fn) {
  fn("summarizer", self.summarizer);
  for (std::size_t l = 0; l < self.lstm.size(); ++l) {
    auto& g = self.lstm[l];
    const std::string p = "lstm." + std::to_string(l) + ".";
    fn(p + "w_forget", g.w_forget);
    fn(p + "w_input", g.w_input);
    fn(p + "w_output", g.w_output);
    fn(p + "w_cell", g.w_cell);
    fn(p + "b_forget", g.b_forget);
    fn(p + "b_input", g.b_input);
    fn(p + "b_output", g.b_output);
    fn(p + "b_cell", g.b_cell);
  }
  auto stack = [&](const char* name, auto& layers) {
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const std::string p = std::string(name) + "." + std::to_string(l) + ".";
      fn(p + "weight", layers[l].weight);
      fn(p + "bias", layers[l].bias);
    }
  };
  stack("dynamic", self.dynamic_path);
  stack("static", self.static_path);
  stack("fusion", self.fusion);
  fn("output.weight", self.output.weight);
  fn("output.bias", self.output.bias);
}

}  // namespace

void BlaParams::for_each(const std::function<void(const std::string&, Param&)>& fn) { visit(*this, fn); }

void BlaParams::for_each(const std::function<void(const std::string&, const Param&)>& fn) const {
  visit(*this, fn);
}

std::size_t BlaParams::count() const {
  std::size_t n = 0;
  for_each([&](const std::string&, const Param& p) { n += p.value.size(); });
  return n;
}

void BlaParams::zero_grad() {
  for_each([](const std::string&, Param& p) { p.zero_grad(); });
}

bool BlaParams::all_finite() const {
  bool ok = true;
  for_each([&](const std::string&, const Param& p) { ok = ok && p.value.all_finite(); });
  return ok;
}

BlaParams make_params(const BlaConfig& config) {
  config.validate();
  BlaParams p;
  p.summarizer = Param(Tensor({config.conv_kernels, config.window(), config.metrics}));
  std::size_t in = config.conv_kernels;
  for (std::size_t h : config.lstm_units) {
    const std::size_t z = h + in + 1;
    p.lstm.push_back({Param(Tensor({z, h})), Param(Tensor({z, h})), Param(Tensor({z, h})), Param(Tensor({z, h})),
                      Param(Tensor({h})), Param(Tensor({h})), Param(Tensor({h})), Param(Tensor({h}))});
    in = h;
  }
  std::size_t fused = config.lstm_units.back();
  if (config.dynamic_width > 0) {
    p.dynamic_path = make_stack(config.dynamic_width, config.dynamic_hidden);
    fused += stack_width(config.dynamic_width, config.dynamic_hidden);
  }
  if (config.static_width > 0) {
    p.static_path = make_stack(config.static_width, config.static_hidden);
    fused += stack_width(config.static_width, config.static_hidden);
  }
  p.fusion = make_stack(fused, config.fusion_hidden);
  p.output = make_dense(stack_width(fused, config.fusion_hidden), 1);
  return p;
}

}  // namespace bla::model
