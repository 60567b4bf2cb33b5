#pragma once

#include <functional>
#include <string>
#include <vector>

#include "param_store.hpp"
#include "tensor.hpp"

namespace modrel {

// Eager reverse-mode tape. Each primitive computes its value immediately and
// records a backward closure; backward() replays the tape in reverse.
//
// Supported primitives: affine, tanh, relu, sigmoid, softmax (row-wise), log,
// exp, elementwise add/sub/mul/div, scalar variants, clamp, sum, mean,
// row-sum, concatenation and slicing along rows or columns.
//
// Every forward result is checked for NaN/Inf; a violation raises
// NumericError naming the primitive.
class Graph {
 public:
  struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
  };

  // Leaves.
  Var input(Tensor t);  // constant, no gradient reported
  Var param(ParamStore& store, const std::string& name);

  // Primitives.
  Var affine(Var x, Var w, Var b);  // x:(n,i) w:(i,k) b:(k) -> (n,k)
  Var tanh_(Var x);
  Var relu(Var x);
  Var sigmoid(Var x);
  Var softmax_rows(Var x);
  Var log_(Var x);
  Var exp_(Var x);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var div_(Var a, Var b);
  Var add_scalar(Var x, double c);
  Var mul_scalar(Var x, double c);
  Var sub_from_scalar(double c, Var x);  // c - x
  Var clamp_(Var x, double lo, double hi);
  Var square(Var x) { return mul(x, x); }
  Var sum(Var x);        // -> scalar
  Var mean(Var x);       // -> scalar
  Var sum_rows(Var x);   // (n,m) -> (n)
  Var concat_cols(Var a, Var b);
  Var slice_cols(Var x, int c0, int len);
  Var slice_rows(Var x, int r0, int len);

  // Runs reverse mode from a scalar loss. Returns the loss value. May be
  // called once per graph.
  double backward(Var loss);

  const Tensor& value(Var v) const;
  // Gradient of the last backward() loss wrt node v; zeros if v was not on
  // any path to the loss.
  Tensor grad(Var v) const;

  // Gradients for every entry of `store`, zero-filled for parameters the
  // loss never touched.
  GradMap collect_grads(const ParamStore& store) const;

  size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;  // empty until touched during backward
    std::vector<int> parents;
    std::function<void(Graph&, int)> back;  // back(graph, self_id)
    const char* op = "";
    const ParamStore* store = nullptr;
    std::string pname;
  };

  int push(Tensor value, std::vector<int> parents, const char* op,
           std::function<void(Graph&, int)> back);
  Tensor& grad_buf(int id);
  bool has_grad(int id) const { return !nodes_[static_cast<size_t>(id)].grad.data.empty(); }
  const Node& node(Var v) const;

  std::vector<Node> nodes_;
  bool ran_backward_ = false;

  friend struct GraphOps;
};

// Result of differentiating a scalar expression over one parameter store.
struct ValueAndGrad {
  double loss = 0.0;
  GradMap grads;
};

// Builds the expression with a fresh graph, runs backward, and reports exact
// gradients for every parameter in the store (zeros for unreachable ones).
ValueAndGrad value_and_grad(ParamStore& store, const std::function<Graph::Var(Graph&)>& build);

}  // namespace modrel
