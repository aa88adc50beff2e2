#pragma once

#include <cstdint>
#include <vector>

#include "grudepth/ops.hpp"
#include "grudepth/tensor.hpp"

namespace grudepth {

enum class OpTag {
    Leaf,
    Conv2d,
    DepthToSpace,
    SpaceToDepth,
    LRelu,
    Sigmoid,
    Tanh,
    Add,
    Sub,
    Mul,
    Affine,
    L1,
    Sum,
};

// Reverse-mode tape. Records values during the forward pass; backward()
// walks the node list in reverse and accumulates gradients, summing over
// fan-out. Single-threaded per tape.
template <typename T>
class Tape {
public:
    struct Node {
        OpTag op = OpTag::Leaf;
        std::vector<int> inputs;
        TensorT<T> value;
        TensorT<T> grad;
        // op-specific payload
        ConvSpec spec;
        LReluVariant variant = LReluVariant::Standard;
        T a = 0, b = 0;  // affine coefficients / lrelu alpha in `a`
        int block = 2;
        bool has_bias = false;
    };

    int leaf(TensorT<T> value) {
        return push(OpTag::Leaf, {}, std::move(value));
    }

    int conv2d(int x, int w, int b, const ConvSpec& spec) {
        check_id(x);
        check_id(w);
        const TensorT<T>& bias = b >= 0 ? (check_id(b), node(b).value) : empty_;
        TensorT<T> out = grudepth::conv2d(node(x).value, node(w).value, bias, spec);
        std::vector<int> in = b >= 0 ? std::vector<int>{x, w, b} : std::vector<int>{x, w};
        int id = push(OpTag::Conv2d, std::move(in), std::move(out));
        nodes_[id].spec = spec;
        nodes_[id].has_bias = b >= 0;
        return id;
    }

    int depth_to_space(int x, int block = 2) {
        check_id(x);
        int id = push(OpTag::DepthToSpace, {x}, grudepth::depth_to_space(node(x).value, block));
        nodes_[id].block = block;
        return id;
    }

    int space_to_depth(int x, int block = 2) {
        check_id(x);
        int id = push(OpTag::SpaceToDepth, {x}, grudepth::space_to_depth(node(x).value, block));
        nodes_[id].block = block;
        return id;
    }

    int lrelu(int x, T alpha, LReluVariant variant) {
        check_id(x);
        int id = push(OpTag::LRelu, {x}, grudepth::lrelu(node(x).value, alpha, variant));
        nodes_[id].a = alpha;
        nodes_[id].variant = variant;
        return id;
    }

    int sigmoid(int x) {
        check_id(x);
        return push(OpTag::Sigmoid, {x}, grudepth::sigmoid(node(x).value));
    }

    int tanh(int x) {
        check_id(x);
        return push(OpTag::Tanh, {x}, grudepth::tanh_t(node(x).value));
    }

    int add(int x, int y) {
        check_id(x);
        check_id(y);
        return push(OpTag::Add, {x, y}, grudepth::add(node(x).value, node(y).value));
    }

    int sub(int x, int y) {
        check_id(x);
        check_id(y);
        return push(OpTag::Sub, {x, y}, grudepth::sub(node(x).value, node(y).value));
    }

    int mul(int x, int y) {
        check_id(x);
        check_id(y);
        return push(OpTag::Mul, {x, y}, grudepth::mul(node(x).value, node(y).value));
    }

    int affine(int x, T a, T b) {
        check_id(x);
        int id = push(OpTag::Affine, {x}, grudepth::affine(node(x).value, a, b));
        nodes_[id].a = a;
        nodes_[id].b = b;
        return id;
    }

    // Scalar node: sum |y - yhat|.
    int l1(int y, int yhat) {
        check_id(y);
        check_id(yhat);
        return push(OpTag::L1, {y, yhat},
                    TensorT<T>::scalar(l1_diff(node(y).value, node(yhat).value)));
    }

    int sum(int x) {
        check_id(x);
        return push(OpTag::Sum, {x}, TensorT<T>::scalar(sum_all(node(x).value)));
    }

    const TensorT<T>& value(int id) const { return node(id).value; }
    const TensorT<T>& grad(int id) const { return node(id).grad; }
    std::size_t size() const { return nodes_.size(); }

    // Reverse traversal from the scalar loss node. Gradients are reset
    // first, so repeated calls give identical results.
    void backward(int loss_id) {
        check_id(loss_id);
        if (node(loss_id).value.numel() != 1)
            throw NumericError("backward: loss node must be scalar, got " +
                               node(loss_id).value.shape_str());
        for (auto& n : nodes_) n.grad = TensorT<T>(n.value.shape);
        nodes_[loss_id].grad.data[0] = T(1);

        for (int id = loss_id; id >= 0; --id) {
            Node& n = nodes_[id];
            bool any = false;
            for (T g : n.grad.data)
                if (g != T(0)) {
                    any = true;
                    break;
                }
            if (!any || n.op == OpTag::Leaf) continue;
            propagate(n);
        }
    }

private:
    void propagate(Node& n) {
        const TensorT<T>& g = n.grad;
        switch (n.op) {
            case OpTag::Conv2d: {
                Node& x = nodes_[n.inputs[0]];
                Node& w = nodes_[n.inputs[1]];
                ConvGrads<T> cg = conv2d_backward(x.value, w.value, n.spec, g, n.has_bias);
                accumulate(x.grad, cg.dinput);
                accumulate(w.grad, cg.dweight);
                if (n.has_bias) accumulate(nodes_[n.inputs[2]].grad, cg.dbias);
                break;
            }
            case OpTag::DepthToSpace:
                // backward = inverse permutation of the upstream gradient
                accumulate(nodes_[n.inputs[0]].grad, grudepth::space_to_depth(g, n.block));
                break;
            case OpTag::SpaceToDepth:
                accumulate(nodes_[n.inputs[0]].grad, grudepth::depth_to_space(g, n.block));
                break;
            case OpTag::LRelu: {
                Node& x = nodes_[n.inputs[0]];
                for (std::size_t i = 0; i < g.data.size(); ++i)
                    x.grad.data[i] += g.data[i] * lrelu_slope(x.value.data[i], n.a, n.variant);
                break;
            }
            case OpTag::Sigmoid: {
                Node& x = nodes_[n.inputs[0]];
                for (std::size_t i = 0; i < g.data.size(); ++i) {
                    const T s = n.value.data[i];
                    x.grad.data[i] += g.data[i] * s * (T(1) - s);
                }
                break;
            }
            case OpTag::Tanh: {
                Node& x = nodes_[n.inputs[0]];
                for (std::size_t i = 0; i < g.data.size(); ++i) {
                    const T t = n.value.data[i];
                    x.grad.data[i] += g.data[i] * (T(1) - t * t);
                }
                break;
            }
            case OpTag::Add:
                accumulate(nodes_[n.inputs[0]].grad, g);
                accumulate(nodes_[n.inputs[1]].grad, g);
                break;
            case OpTag::Sub: {
                accumulate(nodes_[n.inputs[0]].grad, g);
                Node& y = nodes_[n.inputs[1]];
                for (std::size_t i = 0; i < g.data.size(); ++i) y.grad.data[i] -= g.data[i];
                break;
            }
            case OpTag::Mul: {
                Node& x = nodes_[n.inputs[0]];
                Node& y = nodes_[n.inputs[1]];
                for (std::size_t i = 0; i < g.data.size(); ++i) {
                    x.grad.data[i] += g.data[i] * y.value.data[i];
                    y.grad.data[i] += g.data[i] * x.value.data[i];
                }
                break;
            }
            case OpTag::Affine: {
                Node& x = nodes_[n.inputs[0]];
                for (std::size_t i = 0; i < g.data.size(); ++i)
                    x.grad.data[i] += g.data[i] * n.a;
                break;
            }
            case OpTag::L1: {
                // d|y - yhat|: sign convention sign(0) = 0
                Node& y = nodes_[n.inputs[0]];
                Node& yh = nodes_[n.inputs[1]];
                const T g0 = g.data[0];
                for (std::size_t i = 0; i < y.value.data.size(); ++i) {
                    const T d = y.value.data[i] - yh.value.data[i];
                    const T sgn = d > T(0) ? T(1) : (d < T(0) ? T(-1) : T(0));
                    y.grad.data[i] += g0 * sgn;
                    yh.grad.data[i] -= g0 * sgn;
                }
                break;
            }
            case OpTag::Sum: {
                Node& x = nodes_[n.inputs[0]];
                const T g0 = g.data[0];
                for (auto& v : x.grad.data) v += g0;
                break;
            }
            case OpTag::Leaf:
                break;
        }
    }

    static void accumulate(TensorT<T>& dst, const TensorT<T>& src) {
        for (std::size_t i = 0; i < dst.data.size(); ++i) dst.data[i] += src.data[i];
    }

    int push(OpTag op, std::vector<int> inputs, TensorT<T> value) {
        Node n;
        n.op = op;
        n.inputs = std::move(inputs);
        n.value = std::move(value);
        nodes_.push_back(std::move(n));
        return static_cast<int>(nodes_.size()) - 1;
    }

    void check_id(int id) const {
        if (id < 0 || id >= static_cast<int>(nodes_.size()))
            throw NumericError("tape integrity: node id " + std::to_string(id) +
                               " not on this tape");
    }

    Node& node(int id) { return nodes_[id]; }
    const Node& node(int id) const { return nodes_[id]; }

    std::vector<Node> nodes_;
    TensorT<T> empty_;
};

}  // namespace grudepth
