#pragma once

#include <functional>
#include <vector>

#include "ftm/params.hpp"
#include "ftm/tape.hpp"

namespace ftm {

/// A differentiable scalar program: given a tape and one bound leaf per
/// parameter (store order), builds the computation and returns the scalar
/// loss. The same program drives both the analytic and the numeric side of
/// the check, so they can only disagree through the derivatives themselves.
using TapeProgram = std::function<Var(Tape&, const std::vector<Var>&)>;

/// Evaluates the program once; returns the scalar loss.
double evaluate_program(const ParameterStore& params, const TapeProgram& program);

/// Analytic gradients of the program wrt every parameter, in store order.
std::vector<Tensor> analytic_gradients(const ParameterStore& params, const TapeProgram& program,
                                       double* loss_out = nullptr);

/// Central-difference verification. Returns
///   max over parameter entries of |analytic - central| / max(1, |central|).
/// Requires h in (0, 1e-2] and a deterministic program (two base evaluations
/// must agree bit-for-bit).
double finite_diff_check(ParameterStore params, const TapeProgram& program, double h);

} // namespace ftm
