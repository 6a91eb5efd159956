#pragma once

#include <span>
#include <vector>

#include "ini/autodiff/param_vector.hpp"
#include "ini/autodiff/tensor.hpp"

namespace ini::ad {

/// Reverse-mode gradients of a single-element `output` with respect to each
/// tensor in `wrt`.
///
/// Only nodes lying on a path from some `wrt` leaf to `output` are visited.
/// With `create_graph` the backward pass is itself recorded on the tape
/// (one generation above the output) and the returned gradients are attached,
/// so they can be differentiated again. Without it the results are detached.
/// A `wrt` tensor that `output` does not depend on receives zeros.
///
/// Throws DetachedError when `output` has no record or a `wrt` tensor lives on
/// another record, ShapeError when `output` has more than one element.
std::vector<Tensor> gradients(const Tensor& output, std::span<const Tensor> wrt,
                              bool create_graph);

Tensor gradient(const Tensor& output, const Tensor& wrt, bool create_graph);

/// d(output)/d(wrt) laid out like `wrt`.
ParamVector grad(const Tensor& output, const ParamVector& wrt, bool create_higher_order);

}  // namespace ini::ad
