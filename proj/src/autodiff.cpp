#include "loglearn/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "loglearn/linalg.hpp"

namespace loglearn {

namespace {

const char* op_name(Op op) {
    switch (op) {
        case Op::Leaf: return "leaf";
        case Op::Add: return "add";
        case Op::Sub: return "sub";
        case Op::Mul: return "mul";
        case Op::MatMul: return "matmul";
        case Op::Sigmoid: return "sigmoid";
        case Op::Tanh: return "tanh";
        case Op::Exp: return "exp";
        case Op::Log: return "log";
        case Op::Sum: return "sum";
        case Op::Mean: return "mean";
        case Op::MeanRows: return "mean_rows";
        case Op::Slice: return "slice";
        case Op::Concat: return "concat";
        case Op::Conv1d: return "conv1d";
        case Op::Softmax: return "softmax";
        case Op::Relu: return "relu";
        case Op::Abs: return "abs";
        case Op::Clamp: return "clamp";
        case Op::Affine: return "affine";
        case Op::Reshape: return "reshape";
        case Op::BssPenalty: return "bss_penalty";
    }
    return "?";
}

NodePtr make_node(Op op, std::vector<NodePtr> inputs, Tensor value) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->inputs = std::move(inputs);
    n->value = std::move(value);
    for (const auto& in : n->inputs)
        if (in->requires_grad) n->requires_grad = true;
    if (!n->value.all_finite())
        throw NumericError(std::string("non-finite result in op ") + op_name(op));
    return n;
}

void check_same_shape(const NodePtr& a, const NodePtr& b, const char* what) {
    if (!a->value.same_shape(b->value))
        throw ShapeError(std::string(what) + ": shape mismatch " +
                         Tensor::shape_str(a->value.shape()) + " vs " +
                         Tensor::shape_str(b->value.shape()));
}

Tensor elementwise(const Tensor& x, double (*f)(double)) {
    Tensor out(x.shape());
    for (int64_t i = 0; i < x.numel(); ++i) out[i] = f(x[i]);
    return out;
}

}  // namespace

NodePtr constant(Tensor value) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    if (!n->value.all_finite()) throw NumericError("non-finite constant");
    return n;
}

NodePtr leaf(Tensor value, bool trainable, std::string name) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->requires_grad = trainable;
    n->name = std::move(name);
    if (!n->value.all_finite()) throw NumericError("non-finite leaf " + n->name);
    return n;
}

NodePtr add(const NodePtr& a, const NodePtr& b) {
    check_same_shape(a, b, "add");
    Tensor out(a->value.shape());
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = a->value[i] + b->value[i];
    return make_node(Op::Add, {a, b}, std::move(out));
}

NodePtr sub(const NodePtr& a, const NodePtr& b) {
    check_same_shape(a, b, "sub");
    Tensor out(a->value.shape());
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = a->value[i] - b->value[i];
    return make_node(Op::Sub, {a, b}, std::move(out));
}

NodePtr mul(const NodePtr& a, const NodePtr& b) {
    check_same_shape(a, b, "mul");
    Tensor out(a->value.shape());
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = a->value[i] * b->value[i];
    return make_node(Op::Mul, {a, b}, std::move(out));
}

NodePtr matmul(const NodePtr& a, const NodePtr& b) {
    const Tensor& A = a->value;
    const Tensor& B = b->value;
    if (A.rank() != 2) throw ShapeError("matmul: lhs must be rank 2");
    if (B.rank() != 1 && B.rank() != 2) throw ShapeError("matmul: rhs must be rank 1 or 2");
    int64_t m = A.rows(), n = A.cols();
    int64_t p = B.rank() == 2 ? B.cols() : 1;
    int64_t bn = B.rank() == 2 ? B.rows() : B.dim(0);
    if (n != bn)
        throw ShapeError("matmul: inner dimensions differ: " + Tensor::shape_str(A.shape()) +
                         " x " + Tensor::shape_str(B.shape()));
    Tensor out(B.rank() == 2 ? std::vector<int64_t>{m, p} : std::vector<int64_t>{m});
    for (int64_t i = 0; i < m; ++i)
        for (int64_t j = 0; j < p; ++j) {
            double acc = 0.0;
            for (int64_t t = 0; t < n; ++t) acc += A[i * n + t] * B[t * p + j];
            out[i * p + j] = acc;
        }
    return make_node(Op::MatMul, {a, b}, std::move(out));
}

NodePtr sigmoid(const NodePtr& x) {
    return make_node(Op::Sigmoid, {x},
                     elementwise(x->value, +[](double v) { return 1.0 / (1.0 + std::exp(-v)); }));
}

NodePtr tanh_op(const NodePtr& x) {
    return make_node(Op::Tanh, {x}, elementwise(x->value, +[](double v) { return std::tanh(v); }));
}

NodePtr exp_op(const NodePtr& x) {
    return make_node(Op::Exp, {x}, elementwise(x->value, +[](double v) { return std::exp(v); }));
}

NodePtr log_op(const NodePtr& x) {
    return make_node(Op::Log, {x}, elementwise(x->value, +[](double v) { return std::log(v); }));
}

NodePtr sum(const NodePtr& x) {
    double acc = 0.0;
    for (int64_t i = 0; i < x->value.numel(); ++i) acc += x->value[i];
    return make_node(Op::Sum, {x}, Tensor::scalar(acc));
}

NodePtr mean(const NodePtr& x) {
    double acc = 0.0;
    for (int64_t i = 0; i < x->value.numel(); ++i) acc += x->value[i];
    return make_node(Op::Mean, {x}, Tensor::scalar(acc / static_cast<double>(x->value.numel())));
}

NodePtr mean_rows(const NodePtr& x) {
    if (x->value.rank() != 2) throw ShapeError("mean_rows: input must be rank 2");
    int64_t t = x->value.rows(), c = x->value.cols();
    Tensor out({c});
    for (int64_t j = 0; j < c; ++j) {
        double acc = 0.0;
        for (int64_t i = 0; i < t; ++i) acc += x->value.at(i, j);
        out[j] = acc / static_cast<double>(t);
    }
    return make_node(Op::MeanRows, {x}, std::move(out));
}

NodePtr slice(const NodePtr& x, int64_t start, int64_t stop) {
    const Tensor& v = x->value;
    if (v.rank() < 1) throw ShapeError("slice: rank-0 input");
    int64_t d0 = v.dim(0);
    if (start < 0 || stop > d0 || start >= stop)
        throw ShapeError("slice: bad range [" + std::to_string(start) + "," +
                         std::to_string(stop) + ") over dim " + std::to_string(d0));
    int64_t inner = v.numel() / d0;
    std::vector<int64_t> shape = v.shape();
    shape[0] = stop - start;
    Tensor out(shape);
    std::copy(v.data() + start * inner, v.data() + stop * inner, out.data());
    auto n = make_node(Op::Slice, {x}, std::move(out));
    n->iattrs = {start, stop};
    return n;
}

NodePtr concat(const std::vector<NodePtr>& xs) {
    if (xs.empty()) throw ShapeError("concat: no inputs");
    std::vector<int64_t> shape = xs[0]->value.shape();
    int64_t total = 0;
    for (const auto& x : xs) {
        auto s = x->value.shape();
        if (s.size() != shape.size() ||
            !std::equal(s.begin() + 1, s.end(), shape.begin() + 1))
            throw ShapeError("concat: trailing dimensions differ");
        total += s[0];
    }
    shape[0] = total;
    Tensor out(shape);
    double* dst = out.data();
    for (const auto& x : xs) {
        std::copy(x->value.data(), x->value.data() + x->value.numel(), dst);
        dst += x->value.numel();
    }
    return make_node(Op::Concat, xs, std::move(out));
}

NodePtr conv1d(const NodePtr& x, const NodePtr& w, const NodePtr& b, int64_t kernel,
               int64_t stride) {
    const Tensor& X = x->value;
    const Tensor& W = w->value;
    const Tensor& B = b->value;
    if (X.rank() != 2) throw ShapeError("conv1d: input must be [T, Cin]");
    int64_t t_in = X.rows(), cin = X.cols();
    if (W.rank() != 2 || W.cols() != kernel * cin)
        throw ShapeError("conv1d: weight must be [Cout, K*Cin]");
    int64_t cout = W.rows();
    if (B.rank() != 1 || B.dim(0) != cout) throw ShapeError("conv1d: bias must be [Cout]");
    if (t_in < kernel) throw ShapeError("conv1d: input shorter than kernel");
    int64_t t_out = (t_in - kernel) / stride + 1;
    Tensor out({t_out, cout});
    for (int64_t t = 0; t < t_out; ++t)
        for (int64_t o = 0; o < cout; ++o) {
            double acc = B[o];
            for (int64_t k = 0; k < kernel; ++k)
                for (int64_t c = 0; c < cin; ++c)
                    acc += X.at(t * stride + k, c) * W[o * kernel * cin + k * cin + c];
            out.at(t, o) = acc;
        }
    auto n = make_node(Op::Conv1d, {x, w, b}, std::move(out));
    n->iattrs = {kernel, stride};
    return n;
}

NodePtr softmax(const NodePtr& x) {
    if (x->value.rank() != 1) throw ShapeError("softmax: input must be rank 1");
    const Tensor& v = x->value;
    double mx = v[0];
    for (int64_t i = 1; i < v.numel(); ++i) mx = std::max(mx, v[i]);
    Tensor out(v.shape());
    double z = 0.0;
    for (int64_t i = 0; i < v.numel(); ++i) {
        out[i] = std::exp(v[i] - mx);
        z += out[i];
    }
    for (int64_t i = 0; i < v.numel(); ++i) out[i] /= z;
    return make_node(Op::Softmax, {x}, std::move(out));
}

NodePtr relu(const NodePtr& x) {
    return make_node(Op::Relu, {x}, elementwise(x->value, +[](double v) { return v > 0 ? v : 0.0; }));
}

NodePtr abs_op(const NodePtr& x) {
    return make_node(Op::Abs, {x}, elementwise(x->value, +[](double v) { return std::fabs(v); }));
}

NodePtr clamp(const NodePtr& x, double lo, double hi) {
    Tensor out(x->value.shape());
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = std::clamp(x->value[i], lo, hi);
    auto n = make_node(Op::Clamp, {x}, std::move(out));
    n->dattrs = {lo, hi};
    return n;
}

NodePtr affine(const NodePtr& x, double scale, double shift) {
    Tensor out(x->value.shape());
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = scale * x->value[i] + shift;
    auto n = make_node(Op::Affine, {x}, std::move(out));
    n->dattrs = {scale, shift};
    return n;
}

NodePtr reshape(const NodePtr& x, std::vector<int64_t> shape) {
    Tensor out(shape, x->value.values());
    return make_node(Op::Reshape, {x}, std::move(out));
}

NodePtr bss_penalty_node(const NodePtr& f, int64_t k, double eta) {
    const Tensor& F = f->value;
    if (F.rank() != 2) throw ShapeError("bss: feature matrix must be rank 2");
    int64_t r = std::min(F.rows(), F.cols());
    if (k < 1 || k > r)
        throw ConfigError("bss: k=" + std::to_string(k) + " exceeds min(b,d)=" + std::to_string(r));
    SvdResult sv = svd(F);
    double acc = 0.0;
    for (int64_t i = r - k; i < r; ++i) acc += sv.s[i] * sv.s[i];
    auto n = make_node(Op::BssPenalty, {f}, Tensor::scalar(eta * acc));
    n->iattrs = {k};
    n->dattrs = {eta};
    n->aux = {sv.u, sv.s, sv.v};
    return n;
}

const Tensor& forward(const NodePtr& root) { return root->value; }

std::vector<Node*> topo_order(const NodePtr& root) {
    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    // Iterative post-order DFS.
    std::vector<std::pair<Node*, size_t>> stack{{root.get(), 0}};
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next == 0 && seen.count(node)) {
            stack.pop_back();
            continue;
        }
        if (next < node->inputs.size()) {
            Node* child = node->inputs[next++].get();
            if (!seen.count(child)) stack.emplace_back(child, 0);
        } else {
            if (!seen.count(node)) {
                seen.insert(node);
                order.push_back(node);
            }
            stack.pop_back();
        }
    }
    return order;
}

namespace {

void accumulate_input(Node* in, const Tensor& contribution) {
    if (!in->requires_grad) return;
    if (in->grad.numel() == 0) in->grad = Tensor(in->value.shape());
    for (int64_t i = 0; i < contribution.numel(); ++i) in->grad[i] += contribution[i];
}

void backward_node(Node* n) {
    const Tensor& g = n->grad;
    switch (n->op) {
        case Op::Leaf:
            break;
        case Op::Add: {
            accumulate_input(n->inputs[0].get(), g);
            accumulate_input(n->inputs[1].get(), g);
            break;
        }
        case Op::Sub: {
            accumulate_input(n->inputs[0].get(), g);
            Tensor gb(g.shape());
            for (int64_t i = 0; i < g.numel(); ++i) gb[i] = -g[i];
            accumulate_input(n->inputs[1].get(), gb);
            break;
        }
        case Op::Mul: {
            Node* a = n->inputs[0].get();
            Node* b = n->inputs[1].get();
            if (a->requires_grad) {
                Tensor ga(g.shape());
                for (int64_t i = 0; i < g.numel(); ++i) ga[i] = g[i] * b->value[i];
                accumulate_input(a, ga);
            }
            if (b->requires_grad) {
                Tensor gb(g.shape());
                for (int64_t i = 0; i < g.numel(); ++i) gb[i] = g[i] * a->value[i];
                accumulate_input(b, gb);
            }
            break;
        }
        case Op::MatMul: {
            Node* a = n->inputs[0].get();
            Node* b = n->inputs[1].get();
            int64_t m = a->value.rows(), in_dim = a->value.cols();
            int64_t p = b->value.rank() == 2 ? b->value.cols() : 1;
            if (a->requires_grad) {
                Tensor ga(a->value.shape());
                for (int64_t i = 0; i < m; ++i)
                    for (int64_t t = 0; t < in_dim; ++t) {
                        double acc = 0.0;
                        for (int64_t j = 0; j < p; ++j)
                            acc += g[i * p + j] * b->value[t * p + j];
                        ga[i * in_dim + t] = acc;
                    }
                accumulate_input(a, ga);
            }
            if (b->requires_grad) {
                Tensor gb(b->value.shape());
                for (int64_t t = 0; t < in_dim; ++t)
                    for (int64_t j = 0; j < p; ++j) {
                        double acc = 0.0;
                        for (int64_t i = 0; i < m; ++i)
                            acc += a->value[i * in_dim + t] * g[i * p + j];
                        gb[t * p + j] = acc;
                    }
                accumulate_input(b, gb);
            }
            break;
        }
        case Op::Sigmoid: {
            Tensor gx(g.shape());
            for (int64_t i = 0; i < g.numel(); ++i) {
                double s = n->value[i];
                gx[i] = g[i] * s * (1.0 - s);
            }
            accumulate_input(n->inputs[0].get(), gx);
            break;
        }
        case Op::Tanh: {
            Tensor gx(g.shape());
            for (int64_t i = 0; i < g.numel(); ++i) {
                double t = n->value[i];
                gx[i] = g[i] * (1.0 - t * t);
            }
            accumulate_input(n->inputs[0].get(), gx);
            break;
        }
        case Op::Exp: {
            Tensor gx(g.shape());
            for (int64_t i = 0; i < g.numel(); ++i) gx[i] = g[i] * n->value[i];
            accumulate_input(n->inputs[0].get(), gx);
            break;
        }
        case Op::Log: {
            Tensor gx(g.shape());
            for (int64_t i = 0; i < g.numel(); ++i) gx[i] = g[i] / n->inputs[0]->value[i];
            accumulate_input(n->inputs[0].get(), gx);
            break;
        }
        case Op::Sum: {
            Node* x = n->inputs[0].get();
            Tensor gx(x->value.shape());
            for (int64_t i = 0; i < gx.numel(); ++i) gx[i] = g[0];
            accumulate_input(x, gx);
            break;
        }
        case Op::Mean: {
            Node* x = n->inputs[0].get();
            Tensor gx(x->value.shape());
            double s = g[0] / static_cast<double>(x->value.numel());
            for (int64_t i = 0; i < gx.numel(); ++i) gx[i] = s;
            accumulate_input(x, gx);
            break;
        }
        case Op::MeanRows: {
            Node* x = n->inputs[0].get();
            int64_t t = x->value.rows(), c = x->value.cols();
            Tensor gx(x->value.shape());
            for (int64_t i = 0; i < t; ++i)
                for (int64_t j = 0; j < c; ++j) gx.at(i, j) = g[j] / static_cast<double>(t);
            accumulate_input(x, gx);
            break;
        }
        case Op::Slice: {
            Node* x = n->inputs[0].get();
            if (!x->requires_grad) break;
            if (x->grad.numel() == 0) x->grad = Tensor(x->value.shape());
            int64_t inner = x->value.numel() / x->value.dim(0);
            int64_t start = n->iattrs[0];
            for (int64_t i = 0; i < g.numel(); ++i) x->grad[start * inner + i] += g[i];
            break;
        }
        case Op::Concat: {
            int64_t off = 0;
            for (const auto& inp : n->inputs) {
                Node* x = inp.get();
                if (x->requires_grad) {
                    if (x->grad.numel() == 0) x->grad = Tensor(x->value.shape());
                    for (int64_t i = 0; i < x->value.numel(); ++i) x->grad[i] += g[off + i];
                }
                off += x->value.numel();
            }
            break;
        }
        case Op::Conv1d: {
            Node* x = n->inputs[0].get();
            Node* w = n->inputs[1].get();
            Node* b = n->inputs[2].get();
            int64_t kernel = n->iattrs[0], stride = n->iattrs[1];
            int64_t cin = x->value.cols(), cout = w->value.rows();
            int64_t t_out = n->value.rows();
            if (x->requires_grad && x->grad.numel() == 0) x->grad = Tensor(x->value.shape());
            if (w->requires_grad && w->grad.numel() == 0) w->grad = Tensor(w->value.shape());
            if (b->requires_grad && b->grad.numel() == 0) b->grad = Tensor(b->value.shape());
            for (int64_t t = 0; t < t_out; ++t)
                for (int64_t o = 0; o < cout; ++o) {
                    double gv = g[t * cout + o];
                    if (b->requires_grad) b->grad[o] += gv;
                    for (int64_t k = 0; k < kernel; ++k)
                        for (int64_t c = 0; c < cin; ++c) {
                            int64_t xi = (t * stride + k) * cin + c;
                            int64_t wi = o * kernel * cin + k * cin + c;
                            if (w->requires_grad) w->grad[wi] += gv * x->value[xi];
                            if (x->requires_grad) x->grad[xi] += gv * w->value[wi];
                        }
                }
            break;
        }
        case Op::Softmax: {
            const Tensor& y = n->value;
            double dot = 0.0;
            for (int64_t i = 0; i < y.numel(); ++i) dot += g[i] * y[i];
            Tensor gx(y.shape());
            for (int64_t i = 0; i < y.numel(); ++i) gx[i] = y[i] * (g[i] - dot);
            accumulate_input(n->inputs[0].get(), gx);
            break;
        }
        case Op::Relu: {
            Tensor gx(g.shape());
            for (int64_t i = 0; i < g.numel(); ++i)
                gx[i] = n->inputs[0]->value[i] > 0 ? g[i] : 0.0;
            accumulate_input(n->inputs[0].get(), gx);
            break;
        }
        case Op::Abs: {
            Tensor gx(g.shape());
            for (int64_t i = 0; i < g.numel(); ++i) {
                double v = n->inputs[0]->value[i];
                gx[i] = v > 0 ? g[i] : (v < 0 ? -g[i] : 0.0);
            }
            accumulate_input(n->inputs[0].get(), gx);
            break;
        }
        case Op::Clamp: {
            double lo = n->dattrs[0], hi = n->dattrs[1];
            Tensor gx(g.shape());
            for (int64_t i = 0; i < g.numel(); ++i) {
                double v = n->inputs[0]->value[i];
                gx[i] = (v > lo && v < hi) ? g[i] : 0.0;
            }
            accumulate_input(n->inputs[0].get(), gx);
            break;
        }
        case Op::Affine: {
            double scale = n->dattrs[0];
            Tensor gx(g.shape());
            for (int64_t i = 0; i < g.numel(); ++i) gx[i] = scale * g[i];
            accumulate_input(n->inputs[0].get(), gx);
            break;
        }
        case Op::Reshape: {
            Node* x = n->inputs[0].get();
            if (!x->requires_grad) break;
            if (x->grad.numel() == 0) x->grad = Tensor(x->value.shape());
            for (int64_t i = 0; i < g.numel(); ++i) x->grad[i] += g[i];
            break;
        }
        case Op::BssPenalty: {
            // d/dF of sigma_i^2 is 2 sigma_i u_i v_i^T; only the k smallest
            // singular values contribute.
            Node* f = n->inputs[0].get();
            if (!f->requires_grad) break;
            const Tensor& u = n->aux[0];
            const Tensor& s = n->aux[1];
            const Tensor& v = n->aux[2];
            int64_t r = s.numel();
            int64_t k = n->iattrs[0];
            double eta = n->dattrs[0];
            int64_t m = f->value.rows(), d = f->value.cols();
            Tensor gf(f->value.shape());
            for (int64_t idx = r - k; idx < r; ++idx) {
                double c = 2.0 * eta * s[idx] * g[0];
                for (int64_t i = 0; i < m; ++i)
                    for (int64_t j = 0; j < d; ++j)
                        gf[i * d + j] += c * u.at(i, idx) * v.at(j, idx);
            }
            accumulate_input(f, gf);
            break;
        }
    }
}

}  // namespace

void backward(const NodePtr& root) {
    if (!root->value.is_scalar()) throw ShapeError("backward: root must be scalar");
    auto order = topo_order(root);
    for (Node* n : order) n->grad = Tensor();
    root->grad = Tensor::scalar(1.0);
    if (!root->requires_grad) return;
    for (auto it = order.rbegin(); it != order.rend(); ++it)
        if ((*it)->requires_grad && (*it)->grad.numel() > 0) backward_node(*it);
}

}  // namespace loglearn
