#include "bla/diffcore/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "bla/error.hpp"

namespace bla {
namespace {

double evaluate(const ScalarGraph& f, const Tensor& x) {
  Tape tape;
  const Var out = f(tape, tape.constant(x));
  if (out.value().size() != 1) throw ContractError("gradient check needs a scalar-valued function");
  return out.value()[0];
}

}  // namespace

double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / (std::abs(analytic) + std::abs(numeric) + 1e-12);
}

Tensor numeric_gradient(const ScalarGraph& f, const Tensor& x, double eps) {
  if (!(eps > 0.0)) throw RangeError("finite difference step must be positive");
  Tensor grad(x.shape());
  Tensor probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + eps;
    const double up = evaluate(f, probe);
    probe[i] = x[i] - eps;
    const double down = evaluate(f, probe);
    probe[i] = x[i];
    grad[i] = (up - down) / (2.0 * eps);
  }
  return grad;
}

double finite_diff_check(const ScalarGraph& f, const Tensor& x, double eps) {
  Tape tape;
  const Var leaf = tape.input(x);
  const Var out = f(tape, leaf);
  tape.backward(out);
  const Tensor analytic = leaf.grad();
  const Tensor numeric = numeric_gradient(f, x, eps);
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) worst = std::max(worst, relative_error(analytic[i], numeric[i]));
  return worst;
}

}  // namespace bla
