#pragma once

#include <functional>

#include "bla/diffcore/tape.hpp"

namespace bla {

/// Builds a scalar on `tape` from the leaf `x`.
using ScalarGraph = std::function<Var(Tape& tape, Var x)>;

/// Compares the tape gradient of `f` at `x` against central differences and
/// returns the largest relative error
///   |analytic - numeric| / (|analytic| + |numeric| + 1e-12)
/// over all coordinates of `x`. Requires eps > 0.
double finite_diff_check(const ScalarGraph& f, const Tensor& x, double eps = 1e-5);

/// Central-difference gradient of `f` at `x`, using fresh tapes per probe.
Tensor numeric_gradient(const ScalarGraph& f, const Tensor& x, double eps = 1e-5);

/// Relative error as used by finite_diff_check.
double relative_error(double analytic, double numeric);

}  // namespace bla
