#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "ganlab/tensor.hpp"

namespace ganlab {

class Tape;

// Handle to a node on a tape. Cheap to copy; valid for the tape's lifetime.
struct Var {
    Tape* tape = nullptr;
    std::size_t id = 0;
};

// Append-only reverse-mode autodiff tape. Nodes are recorded in evaluation
// order; backward() visits them in strict reverse insertion order, so the
// topological invariant holds by construction.
class Tape {
  public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var leaf(Tensor value, bool requires_grad = false);
    Var constant(Tensor value) { return leaf(std::move(value), false); }

    const Tensor& value(Var v) const { return nodes_[v.id].value; }
    const Tensor& grad(Var v) const { return nodes_[v.id].grad; }
    std::size_t size() const { return nodes_.size(); }

    // Gradient of a scalar root with respect to every recorded node.
    void backward(Var root);

    // ---- differentiable operations -------------------------------------
    // add/sub/mul accept equal shapes, a full-scalar b, a (d,) bias b
    // against an (N,d) a, or a (B,1,1,1) b against a (B,C,H,W) a.
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);
    Var scalar_mul(Var a, double c);
    Var scalar_add(Var a, double c);
    Var matmul(Var a, Var b, bool trans_b = false);
    Var leaky_relu(Var a, double slope);
    Var relu(Var a) { return leaky_relu(a, 0.0); }
    Var tanh_op(Var a);
    Var exp_op(Var a);
    Var log_op(Var a);
    Var mean(Var a);
    Var sum(Var a);
    Var reduce_image_mean(Var a);  // (B,C,H,W) -> (B,1,1,1)
    Var l2_normalize(Var a);       // rows of an (N,d) matrix
    Var concat(const std::vector<Var>& parts);  // along axis 0
    Var reshape(Var a, Shape s);
    Var clip01(Var a);
    // grid (B,H,W,2) holds fractional (row, col) source coordinates in
    // pixel units; coordinates are folded across borders by reflection.
    Var bilinear_sample(Var x, Tensor grid);
    Var channel_mix(Var x, Tensor m);  // m (C,C) shared or (B,C,C) per image
    Var permute_batch(Var x, std::vector<std::size_t> perm);

    struct Node {
        Tensor value;
        Tensor grad;
        std::vector<std::size_t> parents;
        std::function<void(Tape&, std::size_t)> backprop;  // null for leaves
        bool requires_grad = false;
        const char* op = "leaf";
    };

    // Used by backprop closures; not part of the public op surface.
    void accum(std::size_t id, std::size_t idx, double g) { nodes_[id].grad.v[idx] += g; }
    Node& node(std::size_t id) { return nodes_[id]; }

  private:
    Var record(const char* op, Tensor value, std::vector<std::size_t> parents,
               std::function<void(Tape&, std::size_t)> backprop);

    std::vector<Node> nodes_;
};

// Max relative error between the tape gradient of f at x and a central
// finite difference with the given step.
double finite_diff_check(const std::function<Var(Tape&, Var)>& f, const Tensor& x, double step);

// Raw matrix kernels (also used outside the tape, e.g. feature extraction).
void mm(const double* a, const double* b, double* c, std::size_t n, std::size_t k, std::size_t m);
void mm_abt(const double* a, const double* b, double* c, std::size_t n, std::size_t k,
            std::size_t m);  // C = A * B^T, B is (m,k)
void mm_atb(const double* a, const double* b, double* c, std::size_t n, std::size_t k,
            std::size_t m);  // C = A^T * B, A is (k,n), B is (k,m)

}  // namespace ganlab
