#pragma once

#include <array>
#include <span>
#include <vector>

#include "ini/autodiff/tape.hpp"
#include "ini/autodiff/tensor.hpp"

namespace ini::ad::detail {

/// Forward value of `op` on already shape-checked inputs.
Array evaluate(OpKind op, const OpAttrs& attrs, std::span<const Array* const> inputs);

/// Vector-Jacobian product of `op`. `inputs` and `output` are either attached
/// to the tape (differentiable backward) or detached (values only). Returns one
/// gradient per input; an undefined Tensor means "no contribution".
std::vector<Tensor> vjp(OpKind op, const OpAttrs& attrs, std::span<const Tensor> inputs,
                        const Tensor& output, const Tensor& grad, std::array<bool, 2> needs);

}  // namespace ini::ad::detail
