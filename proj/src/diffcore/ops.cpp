#include "bla/diffcore/ops.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "bla/error.hpp"

namespace bla {
namespace {

void require_same_tape(Var a, Var b) {
  if (&a.tape() != &b.tape()) throw ContractError("operands live on different tapes");
}

void require_same_shape(const char* op, Var a, Var b) {
  require_same_tape(a, b);
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
  }
}

void require_rank(const char* op, Var x, std::size_t rank) {
  if (x.value().rank() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                         shape_string(x.shape()));
  }
}

template <typename Fn>
Var unary(Var x, Fn&& fn, Tape::BackwardFn backward) {
  Tensor out(x.shape());
  const auto in = x.value().data();
  auto dst = out.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = fn(in[i]);
  return x.tape().record(std::move(out), {x.id()}, std::move(backward));
}

double stable_sigmoid(double v) {
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

}  // namespace

Var matmul(Var a, Var b) {
  require_same_tape(a, b);
  require_rank("matmul", a, 2);
  require_rank("matmul", b, 2);
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  if (b.shape()[0] != k) {
    throw DimensionError("matmul: inner dims disagree " + shape_string(a.shape()) + " . " +
                         shape_string(b.shape()));
  }
  Tensor out({m, n});
  const double* pa = a.value().raw();
  const double* pb = b.value().raw();
  double* pc = out.raw();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double av = pa[i * k + p];
      if (av == 0.0) continue;
      const double* brow = pb + p * n;
      double* crow = pc + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record(std::move(out), {ia, ib}, [ia, ib, m, k, n](Tape& t, std::size_t self) {
    const double* dc = t.grad(self).raw();
    if (t.needs_grad(ia)) {
      // dA = dC . B^T
      const double* pb = t.value(ib).raw();
      double* da = t.grad(ia).raw();
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          double acc = 0.0;
          for (std::size_t j = 0; j < n; ++j) acc += dc[i * n + j] * pb[p * n + j];
          da[i * k + p] += acc;
        }
      }
    }
    if (t.needs_grad(ib)) {
      // dB = A^T . dC
      const double* pa = t.value(ia).raw();
      double* db = t.grad(ib).raw();
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          const double av = pa[i * k + p];
          if (av == 0.0) continue;
          for (std::size_t j = 0; j < n; ++j) db[p * n + j] += av * dc[i * n + j];
        }
      }
    }
  });
}

Var add(Var a, Var b) {
  require_same_shape("add", a, b);
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] + b.value()[i];
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record(std::move(out), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    for (std::size_t in : {ia, ib}) {
      if (!t.needs_grad(in)) continue;
      Tensor& gi = t.grad(in);
      for (std::size_t i = 0; i < g.size(); ++i) gi[i] += g[i];
    }
  });
}

Var add_bias(Var x, Var bias) {
  require_same_tape(x, bias);
  require_rank("add_bias", x, 2);
  require_rank("add_bias", bias, 1);
  const std::size_t rows = x.shape()[0], cols = x.shape()[1];
  if (bias.shape()[0] != cols) {
    throw DimensionError("add_bias: bias " + shape_string(bias.shape()) + " vs input " +
                         shape_string(x.shape()));
  }
  Tensor out = x.value();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] += bias.value()[c];
  }
  const std::size_t ix = x.id(), ib = bias.id();
  return x.tape().record(std::move(out), {ix, ib}, [ix, ib, rows, cols](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (t.needs_grad(ix)) {
      Tensor& gx = t.grad(ix);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    }
    if (t.needs_grad(ib)) {
      Tensor& gb = t.grad(ib);
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) gb[c] += g[r * cols + c];
      }
    }
  });
}

Var hadamard(Var a, Var b) {
  require_same_shape("hadamard", a, b);
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * b.value()[i];
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record(std::move(out), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (t.needs_grad(ia)) {
      Tensor& ga = t.grad(ia);
      const Tensor& vb = t.value(ib);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * vb[i];
    }
    if (t.needs_grad(ib)) {
      Tensor& gb = t.grad(ib);
      const Tensor& va = t.value(ia);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * va[i];
    }
  });
}

Var sigmoid(Var x) {
  const std::size_t ix = x.id();
  return unary(x, stable_sigmoid, [ix](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& y = t.value(self);
    Tensor& gx = t.grad(ix);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * y[i] * (1.0 - y[i]);
  });
}

Var tanh(Var x) {
  const std::size_t ix = x.id();
  return unary(x, [](double v) { return std::tanh(v); }, [ix](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& y = t.value(self);
    Tensor& gx = t.grad(ix);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * (1.0 - y[i] * y[i]);
  });
}

Var scale(Var x, double factor) {
  const std::size_t ix = x.id();
  return unary(x, [factor](double v) { return v * factor; }, [ix, factor](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& gx = t.grad(ix);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * factor;
  });
}

Var concat(std::span<const Var> parts, std::size_t axis) {
  if (parts.empty()) throw DimensionError("concat: no operands");
  const Shape& first = parts[0].shape();
  if (axis >= first.size()) throw DimensionError("concat: axis out of range for " + shape_string(first));
  Shape out_shape = first;
  out_shape[axis] = 0;
  for (const Var& p : parts) {
    require_same_tape(parts[0], p);
    const Shape& s = p.shape();
    bool ok = s.size() == first.size();
    for (std::size_t d = 0; ok && d < s.size(); ++d) ok = d == axis || s[d] == first[d];
    if (!ok) {
      throw DimensionError("concat: " + shape_string(s) + " incompatible with " + shape_string(first) +
                           " along axis " + std::to_string(axis));
    }
    out_shape[axis] += s[axis];
  }
  // View every tensor as [outer x (dim_axis * inner)].
  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= first[d];
  for (std::size_t d = axis + 1; d < first.size(); ++d) inner *= first[d];
  const std::size_t out_row = out_shape[axis] * inner;

  Tensor out(out_shape);
  std::vector<std::size_t> ids, offsets, widths;
  std::size_t offset = 0;
  for (const Var& p : parts) {
    const std::size_t width = p.shape()[axis] * inner;
    const double* src = p.value().raw();
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t j = 0; j < width; ++j) out[o * out_row + offset + j] = src[o * width + j];
    }
    ids.push_back(p.id());
    offsets.push_back(offset);
    widths.push_back(width);
    offset += width;
  }
  auto inputs = ids;
  return parts[0].tape().record(
      std::move(out), std::move(inputs),
      [ids, offsets, widths, outer, out_row](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        for (std::size_t p = 0; p < ids.size(); ++p) {
          if (!t.needs_grad(ids[p])) continue;
          Tensor& gp = t.grad(ids[p]);
          for (std::size_t o = 0; o < outer; ++o) {
            for (std::size_t j = 0; j < widths[p]; ++j) {
              gp[o * widths[p] + j] += g[o * out_row + offsets[p] + j];
            }
          }
        }
      });
}

Var concat(std::initializer_list<Var> parts, std::size_t axis) {
  return concat(std::span<const Var>(parts.begin(), parts.size()), axis);
}

Var conv1d(Var x, Var w, std::size_t stride) {
  require_same_tape(x, w);
  if (stride == 0) throw ConfigError("conv1d: stride must be positive");
  const std::size_t xr = x.value().rank(), wr = w.value().rank();
  if ((xr != 2 && xr != 3) || (wr != 2 && wr != 3)) {
    throw DimensionError("conv1d: unsupported ranks x" + shape_string(x.shape()) + " w" +
                         shape_string(w.shape()));
  }
  const std::size_t batch = xr == 3 ? x.shape()[0] : 1;
  const std::size_t steps = x.shape()[xr - 2];
  const std::size_t channels = x.shape()[xr - 1];
  const std::size_t kernels = wr == 3 ? w.shape()[0] : 1;
  const std::size_t window = w.shape()[wr - 2];
  if (w.shape()[wr - 1] != channels) {
    throw DimensionError("conv1d: kernel channels " + shape_string(w.shape()) + " vs input " +
                         shape_string(x.shape()));
  }
  if (window > steps) {
    throw ConfigError("conv1d: window " + std::to_string(window) + " exceeds sequence length " +
                      std::to_string(steps));
  }
  const std::size_t out_steps = (steps - window) / stride + 1;
  Shape out_shape = xr == 3 ? Shape{batch, out_steps, kernels} : Shape{out_steps, kernels};
  Tensor out(out_shape);
  const double* px = x.value().raw();
  const double* pw = w.value().raw();
  const std::size_t kernel_size = window * channels;
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t t = 0; t < out_steps; ++t) {
      // A window of consecutive rows is contiguous in row-major storage.
      const double* xwin = px + (b * steps + t * stride) * channels;
      for (std::size_t k = 0; k < kernels; ++k) {
        const double* wk = pw + k * kernel_size;
        double acc = 0.0;
        for (std::size_t j = 0; j < kernel_size; ++j) acc += wk[j] * xwin[j];
        out[(b * out_steps + t) * kernels + k] = acc;
      }
    }
  }
  const std::size_t ix = x.id(), iw = w.id();
  return x.tape().record(
      std::move(out), {ix, iw},
      [=](Tape& t, std::size_t self) {
        const double* g = t.grad(self).raw();
        const double* px = t.value(ix).raw();
        const double* pw = t.value(iw).raw();
        double* gx = t.needs_grad(ix) ? t.grad(ix).raw() : nullptr;
        double* gw = t.needs_grad(iw) ? t.grad(iw).raw() : nullptr;
        for (std::size_t b = 0; b < batch; ++b) {
          for (std::size_t s = 0; s < out_steps; ++s) {
            const std::size_t base = (b * steps + s * stride) * channels;
            for (std::size_t k = 0; k < kernels; ++k) {
              const double gv = g[(b * out_steps + s) * kernels + k];
              if (gv == 0.0) continue;
              const double* wk = pw + k * kernel_size;
              if (gx != nullptr) {
                for (std::size_t j = 0; j < kernel_size; ++j) gx[base + j] += gv * wk[j];
              }
              if (gw != nullptr) {
                double* gwk = gw + k * kernel_size;
                for (std::size_t j = 0; j < kernel_size; ++j) gwk[j] += gv * px[base + j];
              }
            }
          }
        }
      });
}

Var time_slice(Var x, std::size_t t) {
  require_rank("time_slice", x, 3);
  const std::size_t batch = x.shape()[0], steps = x.shape()[1], width = x.shape()[2];
  if (t >= steps) throw DimensionError("time_slice: step " + std::to_string(t) + " out of " + shape_string(x.shape()));
  Tensor out({batch, width});
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t f = 0; f < width; ++f) out[b * width + f] = x.value().at(b, t, f);
  }
  const std::size_t ix = x.id();
  return x.tape().record(std::move(out), {ix}, [=](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad(self);
    Tensor& gx = tp.grad(ix);
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t f = 0; f < width; ++f) gx[(b * steps + t) * width + f] += g[b * width + f];
    }
  });
}

Var slice_cols(Var x, std::size_t begin, std::size_t end) {
  require_rank("slice_cols", x, 2);
  const std::size_t rows = x.shape()[0], cols = x.shape()[1];
  if (begin >= end || end > cols) {
    throw DimensionError("slice_cols: [" + std::to_string(begin) + ", " + std::to_string(end) +
                         ") out of " + shape_string(x.shape()));
  }
  const std::size_t width = end - begin;
  Tensor out({rows, width});
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < width; ++c) out[r * width + c] = x.value()[r * cols + begin + c];
  }
  const std::size_t ix = x.id();
  return x.tape().record(std::move(out), {ix}, [=](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& gx = t.grad(ix);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < width; ++c) gx[r * cols + begin + c] += g[r * width + c];
    }
  });
}

Var sum(Var x) {
  double acc = 0.0;
  for (double v : x.value().data()) acc += v;
  const std::size_t ix = x.id();
  return x.tape().record(Tensor::scalar(acc), {ix}, [ix](Tape& t, std::size_t self) {
    const double g = t.grad(self)[0];
    Tensor& gx = t.grad(ix);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g;
  });
}

Var weighted_bce(Var probs, const Tensor& targets, const Tensor& weights) {
  const Tensor& p = probs.value();
  if (targets.size() != p.size() || weights.size() != p.size()) {
    throw DimensionError("weighted_bce: probs " + shape_string(p.shape()) + ", targets " +
                         shape_string(targets.shape()) + ", weights " + shape_string(weights.shape()));
  }
  double acc = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (weights[j] == 0.0) continue;
    const double q = std::clamp(p[j], kProbClamp, 1.0 - kProbClamp);
    acc -= weights[j] * (targets[j] * std::log(q) + (1.0 - targets[j]) * std::log(1.0 - q));
  }
  const std::size_t ip = probs.id();
  return probs.tape().record(Tensor::scalar(acc), {ip}, [ip, targets, weights](Tape& t, std::size_t self) {
    const double g = t.grad(self)[0];
    const Tensor& p = t.value(ip);
    Tensor& gp = t.grad(ip);
    for (std::size_t j = 0; j < p.size(); ++j) {
      if (weights[j] == 0.0) continue;
      if (p[j] < kProbClamp || p[j] > 1.0 - kProbClamp) continue;  // clamp is flat there
      gp[j] += g * -weights[j] * (targets[j] / p[j] - (1.0 - targets[j]) / (1.0 - p[j]));
    }
  });
}

}  // namespace bla
