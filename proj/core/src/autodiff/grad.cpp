#include "ini/autodiff/grad.hpp"

#include <algorithm>
#include <optional>

#include "ini/autodiff/ops.hpp"
#include "ini/autodiff/tape.hpp"
#include "ini/error.hpp"
#include "kernels.hpp"

namespace ini::ad {

std::vector<Tensor> gradients(const Tensor& output, std::span<const Tensor> wrt, bool create_graph) {
  if (!output.defined() || !output.tracked()) {
    throw DetachedError("gradient requested for an output without a computation record");
  }
  if (output.size() != 1) {
    throw ShapeError("gradient requires a single-element output, got shape " +
                     shape_string(output.shape()));
  }
  Tape& tape = *output.tape();
  const std::size_t out = output.node();

  std::size_t lowest = out + 1;
  for (const Tensor& w : wrt) {
    if (!w.tracked() || w.tape() != &tape) {
      throw DetachedError("gradient target is not on the output's computation record");
    }
    lowest = std::min(lowest, w.node());
  }

  std::vector<Tensor> result;
  result.reserve(wrt.size());
  if (lowest > out) {
    for (const Tensor& w : wrt) result.push_back(Tensor::zeros(w.shape()));
    return result;
  }

  // Forward sweep: which nodes depend on some target.
  std::vector<char> needed(out + 1, 0);
  for (const Tensor& w : wrt) {
    if (w.node() <= out) needed[w.node()] = 1;
  }
  for (std::size_t i = lowest; i <= out; ++i) {
    if (needed[i]) continue;
    const RecordNode& node = tape.node(i);
    for (std::size_t k = 0; k < node.arity; ++k) {
      if (node.inputs[k] >= lowest && needed[node.inputs[k]]) {
        needed[i] = 1;
        break;
      }
    }
  }

  std::vector<Tensor> grads(out + 1);
  if (needed[out]) {
    grads[out] = Tensor::full(output.shape(), 1.0);
    std::optional<Tape::GenerationScope> scope;
    if (create_graph) scope.emplace(tape, tape.node(out).generation + 1);

    for (std::size_t i = out + 1; i-- > lowest;) {
      if (!needed[i] || !grads[i].defined()) continue;
      // Copy: recording the backward pass may reallocate the node storage.
      const RecordNode node = tape.node(i);
      if (node.op == OpKind::kVariable || node.op == OpKind::kConstant) continue;

      std::array<Tensor, 2> inputs;
      std::array<bool, 2> needs{false, false};
      for (std::size_t k = 0; k < node.arity; ++k) {
        const std::size_t idx = node.inputs[k];
        inputs[k] = create_graph ? tape.at(idx) : tape.at(idx).detach();
        needs[k] = idx >= lowest && needed[idx];
      }
      const Tensor node_out = create_graph ? tape.at(i) : tape.at(i).detach();
      const Tensor& g = grads[i];
      std::vector<Tensor> contrib = detail::vjp(
          node.op, node.attrs, std::span<const Tensor>(inputs.data(), node.arity), node_out, g, needs);
      for (std::size_t k = 0; k < node.arity; ++k) {
        if (!needs[k] || k >= contrib.size() || !contrib[k].defined()) continue;
        Tensor& slot = grads[node.inputs[k]];
        slot = slot.defined() ? add(slot, contrib[k]) : contrib[k];
      }
      if (!create_graph) grads[i] = Tensor();
    }
  }

  for (const Tensor& w : wrt) {
    const Tensor& g = w.node() <= out ? grads[w.node()] : Tensor();
    result.push_back(g.defined() ? g : Tensor::zeros(w.shape()));
  }
  return result;
}

Tensor gradient(const Tensor& output, const Tensor& wrt, bool create_graph) {
  return gradients(output, std::span<const Tensor>(&wrt, 1), create_graph).front();
}

ParamVector grad(const Tensor& output, const ParamVector& wrt, bool create_higher_order) {
  return ParamVector(wrt.layout_ptr(), gradient(output, wrt.flat(), create_higher_order));
}

}  // namespace ini::ad
