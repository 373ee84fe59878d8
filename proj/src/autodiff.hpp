#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "tensor.hpp"

namespace cdln {

enum class Activation { tanh, sigmoid, relu };
enum class Padding { valid, same };

Activation activation_from_string(const std::string& name);

// A named trainable tensor. Gradient always has the value's shape and is
// accumulated by Tape::backward, consumed and cleared by the optimizer.
struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;

    Parameter() = default;
    Parameter(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)) {
        grad = Tensor::zeros(value.shape());
    }

    void zero_grad() { grad.fill(0.0); }
};

// Per-thread gradient accumulator so batch members can run backward in
// parallel; buffers are reduced into Parameter::grad in a fixed order.
class GradSink {
public:
    explicit GradSink(std::span<Parameter* const> params);

    Tensor& slot(const Parameter* p);
    void flush_into_params();
    void clear();

private:
    std::vector<Parameter*> params_;
    std::vector<Tensor> buffers_;
    std::unordered_map<const Parameter*, std::size_t> index_;
};

// Reverse-mode tape over dense tensors. Every op records the adjoint closure
// needed to replay the chain rule in reverse; the node list is topological by
// construction. One tape serves one forward pass; backward may be invoked
// several times (grads accumulate into parameters each time).
class Tape {
public:
    using NodeId = std::int32_t;

    NodeId constant(Tensor v);
    NodeId param(Parameter& p);

    // W[m,n] · x[n] + b[m]
    NodeId linear(NodeId W, NodeId x, NodeId b);
    NodeId activation(Activation kind, NodeId x);
    NodeId conv1d(NodeId signal, NodeId kernels, std::size_t stride, Padding padding);
    NodeId avgpool1d(NodeId x, std::size_t window, std::size_t stride);
    // zero padding along the length axis of a [C,L] tensor
    NodeId pad1d(NodeId x, std::size_t left, std::size_t right);
    NodeId dropout(NodeId x, double rate, bool training, std::uint64_t seed);

    NodeId add(NodeId a, NodeId b);
    NodeId mul(NodeId a, NodeId b);
    // a * x + b, elementwise with scalars a and b
    NodeId axpb(NodeId x, double a, double b);
    NodeId scale(NodeId x, double a) { return axpb(x, a, 0.0); }
    NodeId dot(NodeId a, NodeId b);
    NodeId sum(NodeId x);
    NodeId concat(std::span<const NodeId> parts);
    NodeId slice(NodeId x, std::size_t offset, std::size_t len);
    // gather rows of a [V,E] matrix; gradients flow back into the rows
    NodeId rows(NodeId matrix, std::vector<std::size_t> indices);
    NodeId mean_rows(NodeId matrix);
    NodeId flatten(NodeId x);
    // reinterpret a flat vector as [channels, n/channels]
    NodeId as_channels(NodeId x, std::size_t channels);

    const Tensor& value(NodeId id) const { return nodes_[static_cast<std::size_t>(id)].value; }
    const Tensor& grad(NodeId id) const { return nodes_[static_cast<std::size_t>(id)].grad; }

    // Seeds d(loss)/d(loss) = 1 and replays adjoints in reverse order. loss
    // must be scalar. Parameter gradients accumulate into Parameter::grad, or
    // into `sink` when given.
    void backward(NodeId loss, GradSink* sink = nullptr);

    std::size_t node_count() const { return nodes_.size(); }

private:
    struct Node {
        Tensor value;
        Tensor grad;
        std::function<void(Tape&)> back;  // empty for leaves
        Parameter* bound = nullptr;
    };

    NodeId push(Tensor value, std::function<void(Tape&)> back = {}, Parameter* bound = nullptr);
    Tensor& grad_mut(NodeId id) { return nodes_[static_cast<std::size_t>(id)].grad; }

    std::vector<Node> nodes_;
};

}  // namespace cdln
