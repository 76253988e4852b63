#include "muir/tape.hpp"

#include <algorithm>
#include <cmath>

#include "muir/errors.hpp"

namespace muir {

NodeId Tape::push(Node node) {
    nodes_.push_back(std::move(node));
    return nodes_.size() - 1;
}

NodeId Tape::leaf(Array value, bool requires_grad) {
    Node n;
    n.op = Op::Leaf;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    return push(std::move(n));
}

NodeId Tape::mode1(NodeId h, NodeId z) {
    const Array& H = nodes_[h].value;
    const Array& Z = nodes_[z].value;
    if (H.ndim() != 3) throw shape_error("mode1: H must be c x m x n");
    if (Z.ndim() != 1 || Z.shape()[0] != H.shape()[0])
        throw shape_error("mode1: z length must equal first dimension of H");
    const std::size_t c = H.shape()[0], m = H.shape()[1], nn = H.shape()[2];
    Array out({m, nn});
    for (std::size_t k = 0; k < c; ++k) {
        const double zk = Z[k];
        const double* hs = H.data() + k * m * nn;
        double* o = out.data();
        for (std::size_t i = 0; i < m * nn; ++i) o[i] += hs[i] * zk;
    }
    Node n;
    n.op = Op::Mode1;
    n.inputs = {h, z};
    n.value = std::move(out);
    n.requires_grad = nodes_[h].requires_grad || nodes_[z].requires_grad;
    return push(std::move(n));
}

NodeId Tape::matvec(NodeId x, NodeId b) {
    const Array& X = nodes_[x].value;
    const Array& B = nodes_[b].value;
    if (X.ndim() != 2 || X.shape()[1] != B.size())
        throw shape_error("matvec: X is N x D, b holds D entries");
    const std::size_t rows = X.shape()[0], cols = X.shape()[1];
    Array out({rows});
    for (std::size_t i = 0; i < rows; ++i) {
        double acc = 0.0;
        const double* xi = X.data() + i * cols;
        for (std::size_t j = 0; j < cols; ++j) acc += xi[j] * B[j];
        out[i] = acc;
    }
    Node n;
    n.op = Op::MatVec;
    n.inputs = {x, b};
    n.value = std::move(out);
    n.requires_grad = nodes_[x].requires_grad || nodes_[b].requires_grad;
    return push(std::move(n));
}

NodeId Tape::softmax(NodeId s) {
    const Array& S = nodes_[s].value;
    if (S.ndim() != 1) throw shape_error("softmax: expects a vector");
    Array out(S.shape());
    double mx = S[0];
    for (std::size_t i = 1; i < S.size(); ++i) mx = std::max(mx, S[i]);
    double z = 0.0;
    for (std::size_t i = 0; i < S.size(); ++i) {
        out[i] = std::exp(S[i] - mx);
        z += out[i];
    }
    for (std::size_t i = 0; i < S.size(); ++i) out[i] /= z;
    Node n;
    n.op = Op::Softmax;
    n.inputs = {s};
    n.value = std::move(out);
    n.requires_grad = nodes_[s].requires_grad;
    return push(std::move(n));
}

NodeId Tape::weighted_sum(NodeId probs, const std::vector<NodeId>& blocks) {
    const Array& P = nodes_[probs].value;
    if (P.ndim() != 1 || P.shape()[0] != blocks.size())
        throw shape_error("weighted_sum: probs length must equal block count");
    if (blocks.empty()) throw contract_error("weighted_sum: no blocks");
    const Array& first = nodes_[blocks[0]].value;
    Array out(first.shape());
    bool rg = nodes_[probs].requires_grad;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        const Array& B = nodes_[blocks[i]].value;
        if (!B.same_shape(first)) throw shape_error("weighted_sum: block shape mismatch");
        const double p = P[i];
        for (std::size_t j = 0; j < out.size(); ++j) out[j] += p * B[j];
        rg = rg || nodes_[blocks[i]].requires_grad;
    }
    Node n;
    n.op = Op::WeightedSum;
    n.inputs.reserve(blocks.size() + 1);
    n.inputs.push_back(probs);
    n.inputs.insert(n.inputs.end(), blocks.begin(), blocks.end());
    n.value = std::move(out);
    n.requires_grad = rg;
    return push(std::move(n));
}

NodeId Tape::add(NodeId a, NodeId b) {
    const Array& A = nodes_[a].value;
    const Array& B = nodes_[b].value;
    if (!A.same_shape(B)) throw shape_error("add: shape mismatch");
    Array out(A.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = A[i] + B[i];
    Node n;
    n.op = Op::Add;
    n.inputs = {a, b};
    n.value = std::move(out);
    n.requires_grad = nodes_[a].requires_grad || nodes_[b].requires_grad;
    return push(std::move(n));
}

NodeId Tape::sub(NodeId a, NodeId b) {
    const Array& A = nodes_[a].value;
    const Array& B = nodes_[b].value;
    if (!A.same_shape(B)) throw shape_error("sub: shape mismatch");
    Array out(A.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = A[i] - B[i];
    Node n;
    n.op = Op::Sub;
    n.inputs = {a, b};
    n.value = std::move(out);
    n.requires_grad = nodes_[a].requires_grad || nodes_[b].requires_grad;
    return push(std::move(n));
}

NodeId Tape::scale(NodeId a, double k) {
    const Array& A = nodes_[a].value;
    Array out(A.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = k * A[i];
    Node n;
    n.op = Op::Scale;
    n.inputs = {a};
    n.value = std::move(out);
    n.k = k;
    n.requires_grad = nodes_[a].requires_grad;
    return push(std::move(n));
}

NodeId Tape::add_n(const std::vector<NodeId>& terms) {
    if (terms.empty()) throw contract_error("add_n: no terms");
    const Array& first = nodes_[terms[0]].value;
    Array out(first.shape());
    bool rg = false;
    for (NodeId t : terms) {
        const Array& A = nodes_[t].value;
        if (!A.same_shape(first)) throw shape_error("add_n: shape mismatch");
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += A[i];
        rg = rg || nodes_[t].requires_grad;
    }
    Node n;
    n.op = Op::AddN;
    n.inputs = terms;
    n.value = std::move(out);
    n.requires_grad = rg;
    return push(std::move(n));
}

NodeId Tape::dot(NodeId a, NodeId b) {
    const Array& A = nodes_[a].value;
    const Array& B = nodes_[b].value;
    if (A.size() != B.size()) throw shape_error("dot: length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < A.size(); ++i) acc += A[i] * B[i];
    Node n;
    n.op = Op::Dot;
    n.inputs = {a, b};
    n.value = Array::scalar(acc);
    n.requires_grad = nodes_[a].requires_grad || nodes_[b].requires_grad;
    return push(std::move(n));
}

NodeId Tape::mse(NodeId pred, NodeId target) {
    const Array& P = nodes_[pred].value;
    const Array& T = nodes_[target].value;
    if (P.size() != T.size() || P.size() == 0) throw shape_error("mse: length mismatch or empty");
    double acc = 0.0;
    for (std::size_t i = 0; i < P.size(); ++i) {
        const double d = P[i] - T[i];
        acc += d * d;
    }
    Node n;
    n.op = Op::Mse;
    n.inputs = {pred, target};
    n.value = Array::scalar(acc / static_cast<double>(P.size()));
    n.requires_grad = nodes_[pred].requires_grad || nodes_[target].requires_grad;
    return push(std::move(n));
}

void Tape::backward(NodeId loss) {
    if (nodes_[loss].value.size() != 1)
        throw contract_error("backward: loss must be scalar");
    for (auto& n : nodes_) {
        n.grad = Array(n.value.shape());
    }
    nodes_[loss].grad[0] = 1.0;
    for (std::size_t idx = loss + 1; idx-- > 0;) {
        Node& n = nodes_[idx];
        if (!n.requires_grad) continue;
        const Array& g = n.grad;
        switch (n.op) {
            case Op::Leaf:
                break;
            case Op::Mode1: {
                Node& h = nodes_[n.inputs[0]];
                Node& z = nodes_[n.inputs[1]];
                const std::size_t c = h.value.shape()[0];
                const std::size_t mn = n.value.size();
                for (std::size_t k = 0; k < c; ++k) {
                    const double zk = z.value[k];
                    const double* hs = h.value.data() + k * mn;
                    double* hg = h.grad.data() + k * mn;
                    double acc = 0.0;
                    for (std::size_t i = 0; i < mn; ++i) {
                        if (h.requires_grad) hg[i] += g[i] * zk;
                        acc += g[i] * hs[i];
                    }
                    if (z.requires_grad) z.grad[k] += acc;
                }
                break;
            }
            case Op::MatVec: {
                Node& x = nodes_[n.inputs[0]];
                Node& b = nodes_[n.inputs[1]];
                const std::size_t rows = x.value.shape()[0], cols = x.value.shape()[1];
                for (std::size_t i = 0; i < rows; ++i) {
                    const double gi = g[i];
                    const double* xi = x.value.data() + i * cols;
                    if (b.requires_grad) {
                        double* bg = b.grad.data();
                        for (std::size_t j = 0; j < cols; ++j) bg[j] += gi * xi[j];
                    }
                    if (x.requires_grad) {
                        double* xg = x.grad.data() + i * cols;
                        for (std::size_t j = 0; j < cols; ++j) xg[j] += gi * b.value[j];
                    }
                }
                break;
            }
            case Op::Softmax: {
                Node& s = nodes_[n.inputs[0]];
                if (!s.requires_grad) break;
                const Array& p = n.value;
                double dotgp = 0.0;
                for (std::size_t i = 0; i < p.size(); ++i) dotgp += g[i] * p[i];
                for (std::size_t i = 0; i < p.size(); ++i)
                    s.grad[i] += p[i] * (g[i] - dotgp);
                break;
            }
            case Op::WeightedSum: {
                Node& probs = nodes_[n.inputs[0]];
                for (std::size_t i = 1; i < n.inputs.size(); ++i) {
                    Node& blk = nodes_[n.inputs[i]];
                    const double p = probs.value[i - 1];
                    if (probs.requires_grad) {
                        double acc = 0.0;
                        for (std::size_t j = 0; j < g.size(); ++j) acc += g[j] * blk.value[j];
                        probs.grad[i - 1] += acc;
                    }
                    if (blk.requires_grad) {
                        for (std::size_t j = 0; j < g.size(); ++j) blk.grad[j] += p * g[j];
                    }
                }
                break;
            }
            case Op::Add: {
                Node& a = nodes_[n.inputs[0]];
                Node& b = nodes_[n.inputs[1]];
                for (std::size_t i = 0; i < g.size(); ++i) {
                    if (a.requires_grad) a.grad[i] += g[i];
                    if (b.requires_grad) b.grad[i] += g[i];
                }
                break;
            }
            case Op::Sub: {
                Node& a = nodes_[n.inputs[0]];
                Node& b = nodes_[n.inputs[1]];
                for (std::size_t i = 0; i < g.size(); ++i) {
                    if (a.requires_grad) a.grad[i] += g[i];
                    if (b.requires_grad) b.grad[i] -= g[i];
                }
                break;
            }
            case Op::Scale: {
                Node& a = nodes_[n.inputs[0]];
                if (!a.requires_grad) break;
                for (std::size_t i = 0; i < g.size(); ++i) a.grad[i] += n.k * g[i];
                break;
            }
            case Op::AddN: {
                for (NodeId t : n.inputs) {
                    Node& a = nodes_[t];
                    if (!a.requires_grad) continue;
                    for (std::size_t i = 0; i < g.size(); ++i) a.grad[i] += g[i];
                }
                break;
            }
            case Op::Dot: {
                Node& a = nodes_[n.inputs[0]];
                Node& b = nodes_[n.inputs[1]];
                const double g0 = g[0];
                for (std::size_t i = 0; i < a.value.size(); ++i) {
                    if (a.requires_grad) a.grad[i] += g0 * b.value[i];
                    if (b.requires_grad) b.grad[i] += g0 * a.value[i];
                }
                break;
            }
            case Op::Mse: {
                Node& p = nodes_[n.inputs[0]];
                Node& t = nodes_[n.inputs[1]];
                const double g0 = g[0];
                const double scale = 2.0 / static_cast<double>(p.value.size());
                for (std::size_t i = 0; i < p.value.size(); ++i) {
                    const double d = scale * (p.value[i] - t.value[i]) * g0;
                    if (p.requires_grad) p.grad[i] += d;
                    if (t.requires_grad) t.grad[i] -= d;
                }
                break;
            }
        }
    }
}

}  // namespace muir
