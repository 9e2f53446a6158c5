#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "loglearn/tensor.hpp"

namespace loglearn {

// Primitive op kinds of the computation graph. A handful of convenience
// primitives (relu, abs, clamp, affine, reshape, mean_rows, bss) are included
// alongside the basic arithmetic ones so model code stays readable.
enum class Op {
    Leaf,
    Add,
    Sub,
    Mul,
    MatMul,
    Sigmoid,
    Tanh,
    Exp,
    Log,
    Sum,
    Mean,
    MeanRows,
    Slice,
    Concat,
    Conv1d,
    Softmax,
    Relu,
    Abs,
    Clamp,
    Affine,
    Reshape,
    BssPenalty,
};

struct Node;
using NodePtr = std::shared_ptr<Node>;

// One node of the (acyclic, eagerly evaluated) computation graph. The output
// is computed at construction time and cached for backward.
struct Node {
    Op op = Op::Leaf;
    std::vector<NodePtr> inputs;
    Tensor value;
    Tensor grad;  // same shape as value; filled by backward
    bool requires_grad = false;
    std::string name;  // leaves only

    std::vector<int64_t> iattrs;
    std::vector<double> dattrs;
    std::vector<Tensor> aux;  // op-specific forward byproducts (e.g. SVD factors)
};

// Leaves.
NodePtr constant(Tensor value);
NodePtr leaf(Tensor value, bool trainable, std::string name = "");

// Primitives. Each checks shapes, evaluates eagerly, and raises NumericError
// if the result is non-finite.
NodePtr add(const NodePtr& a, const NodePtr& b);
NodePtr sub(const NodePtr& a, const NodePtr& b);
NodePtr mul(const NodePtr& a, const NodePtr& b);
NodePtr matmul(const NodePtr& a, const NodePtr& b);
NodePtr sigmoid(const NodePtr& x);
NodePtr tanh_op(const NodePtr& x);
NodePtr exp_op(const NodePtr& x);
NodePtr log_op(const NodePtr& x);
NodePtr sum(const NodePtr& x);
NodePtr mean(const NodePtr& x);
NodePtr mean_rows(const NodePtr& x);  // [T,C] -> [C]
NodePtr slice(const NodePtr& x, int64_t start, int64_t stop);  // first dim
NodePtr concat(const std::vector<NodePtr>& xs);                // first dim
// x: [T,Cin], w: [Cout, K*Cin], b: [Cout] -> [(T-K)/stride+1, Cout]
NodePtr conv1d(const NodePtr& x, const NodePtr& w, const NodePtr& b, int64_t kernel,
               int64_t stride);
NodePtr softmax(const NodePtr& x);  // rank-1
NodePtr relu(const NodePtr& x);
NodePtr abs_op(const NodePtr& x);
NodePtr clamp(const NodePtr& x, double lo, double hi);
NodePtr affine(const NodePtr& x, double scale, double shift);
NodePtr reshape(const NodePtr& x, std::vector<int64_t> shape);
// eta * sum of squares of the k smallest singular values of f ([b,d]).
NodePtr bss_penalty_node(const NodePtr& f, int64_t k, double eta);

inline NodePtr neg(const NodePtr& x) { return affine(x, -1.0, 0.0); }
inline NodePtr square(const NodePtr& x) { return mul(x, x); }

// Returns the cached root value (the graph is evaluated eagerly).
const Tensor& forward(const NodePtr& root);

// Reverse pass over the whole graph: fills n->grad for every node reachable
// from root that requires a gradient. Root must be scalar. Accumulation
// follows a fixed topological order, so results are deterministic.
void backward(const NodePtr& root);

// Topological order (inputs before consumers) of the graph under root.
std::vector<Node*> topo_order(const NodePtr& root);

}  // namespace loglearn
