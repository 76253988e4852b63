#pragma once

#include <cstddef>
#include <vector>

#include "muir/array.hpp"

namespace muir {

using NodeId = std::size_t;

// Reverse-mode tape covering exactly the operations the joint models need.
// A tape is built per training step and thrown away; values are immutable
// once recorded.
class Tape {
  public:
    NodeId leaf(Array value, bool requires_grad = true);
    NodeId constant(Array value) { return leaf(std::move(value), false); }

    // out[i][j] = sum_k H[k][i][j] * z[k]  (1-mode tensor-vector product)
    NodeId mode1(NodeId h, NodeId z);
    // out[i] = sum_j X[i][j] * b[j]
    NodeId matvec(NodeId x, NodeId b);
    NodeId softmax(NodeId s);
    // out = sum_i probs[i] * blocks[i], blocks all same shape
    NodeId weighted_sum(NodeId probs, const std::vector<NodeId>& blocks);
    NodeId add(NodeId a, NodeId b);
    NodeId sub(NodeId a, NodeId b);
    NodeId scale(NodeId a, double k);
    NodeId add_n(const std::vector<NodeId>& terms);
    NodeId dot(NodeId a, NodeId b);
    // mean squared error, scalar
    NodeId mse(NodeId pred, NodeId target);

    const Array& value(NodeId id) const { return nodes_[id].value; }
    // Valid after backward; zero array for nodes not requiring grad.
    const Array& grad(NodeId id) const { return nodes_[id].grad; }

    // Seeds d(loss)/d(loss) = 1 and accumulates adjoints in reverse
    // topological (creation) order. Loss must be scalar.
    void backward(NodeId loss);

    std::size_t node_count() const { return nodes_.size(); }

  private:
    enum class Op { Leaf, Mode1, MatVec, Softmax, WeightedSum, Add, Sub, Scale, AddN, Dot, Mse };

    struct Node {
        Op op;
        std::vector<NodeId> inputs;
        Array value;
        Array grad;
        double k = 0.0;
        bool requires_grad = false;
    };

    NodeId push(Node node);
    std::vector<Node> nodes_;
};

}  // namespace muir
