#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "helpers.hpp"
#include "loglearn/autodiff.hpp"
#include "loglearn/rng.hpp"

using namespace loglearn;
using testutil::max_grad_error;
using testutil::random_tensor;

namespace {

// Reduces any node to a scalar through fixed random weights, so the whole
// Jacobian is exercised, not just the sum direction.
NodePtr weighted(const NodePtr& x, const Tensor& w) {
    return sum(mul(x, constant(w)));
}

}  // namespace

TEST_CASE("elementwise and matmul gradients match finite differences") {
    auto rng = make_rng(7);
    for (int trial = 0; trial < 10; ++trial) {
        NodePtr a = leaf(random_tensor({3, 4}, rng), true);
        NodePtr b = leaf(random_tensor({3, 4}, rng), true);
        Tensor w = random_tensor({3, 4}, rng);
        std::vector<NodePtr> leaves{a, b};
        CHECK(max_grad_error(leaves, [&] { return weighted(add(a, b), w); }) < 1e-6);
        CHECK(max_grad_error(leaves, [&] { return weighted(sub(a, b), w); }) < 1e-6);
        CHECK(max_grad_error(leaves, [&] { return weighted(mul(a, b), w); }) < 1e-5);

        NodePtr m = leaf(random_tensor({2, 3}, rng), true);
        NodePtr n = leaf(random_tensor({3, 2}, rng), true);
        Tensor wm = random_tensor({2, 2}, rng);
        std::vector<NodePtr> mn{m, n};
        CHECK(max_grad_error(mn, [&] { return weighted(matmul(m, n), wm); }) < 1e-5);

        NodePtr v = leaf(random_tensor({3}, rng), true);
        Tensor wv = random_tensor({2}, rng);
        std::vector<NodePtr> mv{m, v};
        CHECK(max_grad_error(mv, [&] { return weighted(matmul(m, v), wv); }) < 1e-5);
    }
}

TEST_CASE("nonlinearity gradients match finite differences") {
    auto rng = make_rng(11);
    for (int trial = 0; trial < 10; ++trial) {
        NodePtr x = leaf(random_tensor({5}, rng), true);
        Tensor w = random_tensor({5}, rng);
        std::vector<NodePtr> leaves{x};
        CHECK(max_grad_error(leaves, [&] { return weighted(sigmoid(x), w); }) < 1e-5);
        CHECK(max_grad_error(leaves, [&] { return weighted(tanh_op(x), w); }) < 1e-5);
        CHECK(max_grad_error(leaves, [&] { return weighted(exp_op(x), w); }) < 1e-5);
        CHECK(max_grad_error(leaves, [&] { return weighted(softmax(x), w); }) < 1e-5);
        CHECK(max_grad_error(leaves, [&] { return weighted(affine(x, 1.7, -0.3), w); }) < 1e-6);

        // keep strictly positive for log
        NodePtr p = leaf(random_tensor({4}, rng), true);
        for (int64_t i = 0; i < 4; ++i) p->value[i] = 0.5 + std::fabs(p->value[i]);
        Tensor wp = random_tensor({4}, rng);
        std::vector<NodePtr> pl{p};
        CHECK(max_grad_error(pl, [&] { return weighted(log_op(p), wp); }) < 1e-5);

        // keep away from the kinks of relu/abs/clamp
        NodePtr q = leaf(random_tensor({6}, rng), true);
        for (int64_t i = 0; i < 6; ++i)
            if (std::fabs(q->value[i]) < 0.1) q->value[i] = 0.5;
        Tensor wq = random_tensor({6}, rng);
        std::vector<NodePtr> ql{q};
        CHECK(max_grad_error(ql, [&] { return weighted(relu(q), wq); }) < 1e-6);
        CHECK(max_grad_error(ql, [&] { return weighted(abs_op(q), wq); }) < 1e-6);
        CHECK(max_grad_error(ql, [&] { return weighted(clamp(q, -0.8, 0.8), wq); }) < 1e-6);
    }
}

TEST_CASE("reduction, shape and conv gradients match finite differences") {
    auto rng = make_rng(13);
    for (int trial = 0; trial < 10; ++trial) {
        NodePtr x = leaf(random_tensor({4, 3}, rng), true);
        std::vector<NodePtr> leaves{x};
        CHECK(max_grad_error(leaves, [&] { return sum(x); }) < 1e-6);
        CHECK(max_grad_error(leaves, [&] { return mean(x); }) < 1e-6);
        Tensor wr = random_tensor({3}, rng);
        CHECK(max_grad_error(leaves, [&] { return weighted(mean_rows(x), wr); }) < 1e-6);
        Tensor ws = random_tensor({2, 3}, rng);
        CHECK(max_grad_error(leaves, [&] { return weighted(slice(x, 1, 3), ws); }) < 1e-6);
        Tensor wf = random_tensor({12}, rng);
        CHECK(max_grad_error(leaves, [&] { return weighted(reshape(x, {12}), wf); }) < 1e-6);

        NodePtr y = leaf(random_tensor({2, 3}, rng), true);
        Tensor wc = random_tensor({6, 3}, rng);
        std::vector<NodePtr> xy{x, y};
        CHECK(max_grad_error(xy, [&] { return weighted(concat({x, y}), wc); }) < 1e-6);

        NodePtr sig = leaf(random_tensor({10, 2}, rng), true);
        NodePtr kw = leaf(random_tensor({3, 3 * 2}, rng, 0.5), true);
        NodePtr kb = leaf(random_tensor({3}, rng, 0.5), true);
        Tensor wconv = random_tensor({4, 3}, rng);
        std::vector<NodePtr> cl{sig, kw, kb};
        CHECK(max_grad_error(cl, [&] {
                  return weighted(conv1d(sig, kw, kb, 3, 2), wconv);
              }) < 1e-5);
    }
}

TEST_CASE("bss penalty gradient matches finite differences") {
    auto rng = make_rng(17);
    for (int trial = 0; trial < 10; ++trial) {
        NodePtr f = leaf(random_tensor({5, 3}, rng), true);
        std::vector<NodePtr> leaves{f};
        CHECK(max_grad_error(leaves, [&] { return bss_penalty_node(f, 2, 0.3); }, 1e-6) < 1e-4);
    }
}

TEST_CASE("backward is deterministic over repeated calls") {
    auto rng = make_rng(23);
    NodePtr a = leaf(random_tensor({4}, rng), true);
    auto build = [&] { return sum(mul(sigmoid(a), tanh_op(a))); };
    NodePtr r1 = build();
    backward(r1);
    Tensor g1 = a->grad;
    NodePtr r2 = build();
    backward(r2);
    for (int64_t i = 0; i < 4; ++i) CHECK(a->grad[i] == g1[i]);
}

TEST_CASE("shape and domain violations throw") {
    NodePtr a = leaf(Tensor({2}, {1.0, 2.0}), true);
    NodePtr b = leaf(Tensor({3}, {1.0, 2.0, 3.0}), true);
    CHECK_THROWS_AS(add(a, b), ShapeError);
    CHECK_THROWS_AS(log_op(leaf(Tensor({1}, {-1.0}), false)), NumericError);
    CHECK_THROWS_AS(backward(concat({a, b})), ShapeError);  // non-scalar root
}

TEST_CASE("topological order puts inputs before consumers") {
    NodePtr a = leaf(Tensor::scalar(1.0), true);
    NodePtr b = sigmoid(a);
    NodePtr c = add(b, a);
    auto order = topo_order(c);
    auto pos = [&](const Node* n) {
        for (size_t i = 0; i < order.size(); ++i)
            if (order[i] == n) return i;
        return order.size();
    };
    CHECK(pos(a.get()) < pos(b.get()));
    CHECK(pos(b.get()) < pos(c.get()));
}
