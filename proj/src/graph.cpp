#include "graph.hpp"

#include <cmath>
#include <cstring>

#include "errors.hpp"

namespace modrel {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw InvalidArgument(msg);
}

void check_finite(const Tensor& t, const char* op) {
  if (!t.all_finite()) throw NumericError(op);
}

}  // namespace

int Graph::push(Tensor value, std::vector<int> parents, const char* op,
                std::function<void(Graph&, int)> back) {
  check_finite(value, op);
  Node n;
  n.value = std::move(value);
  n.parents = std::move(parents);
  n.back = std::move(back);
  n.op = op;
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

Tensor& Graph::grad_buf(int id) {
  Node& n = nodes_[static_cast<size_t>(id)];
  if (n.grad.data.empty()) n.grad = Tensor::zeros(n.value.shape);
  return n.grad;
}

const Graph::Node& Graph::node(Var v) const {
  require(v.valid() && v.id < static_cast<int>(nodes_.size()), "invalid graph node");
  return nodes_[static_cast<size_t>(v.id)];
}

const Tensor& Graph::value(Var v) const { return node(v).value; }

Tensor Graph::grad(Var v) const {
  const Node& n = node(v);
  if (n.grad.data.empty()) return Tensor::zeros(n.value.shape);
  return n.grad;
}

Graph::Var Graph::input(Tensor t) { return {push(std::move(t), {}, "input", nullptr)}; }

Graph::Var Graph::param(ParamStore& store, const std::string& name) {
  int id = push(store.value(name), {}, "param", nullptr);
  nodes_.back().store = &store;
  nodes_.back().pname = name;
  return {id};
}

Graph::Var Graph::affine(Var xv, Var wv, Var bv) {
  const Tensor& x = value(xv);
  const Tensor& w = value(wv);
  const Tensor& b = value(bv);
  require(x.shape.size() == 2 && w.shape.size() == 2, "affine expects matrices");
  const int n = x.shape[0], in = x.shape[1], out = w.shape[1];
  require(w.shape[0] == in, "affine width mismatch: input has " + std::to_string(in) +
                                " columns, weight expects " + std::to_string(w.shape[0]));
  require(b.size() == out, "affine bias length mismatch");
  Tensor y({n, out});
  const double* xd = x.data.data();
  const double* wd = w.data.data();
  const double* bd = b.data.data();
  double* yd = y.data.data();
  for (int r = 0; r < n; ++r) {
    double* yr = yd + static_cast<size_t>(r) * out;
    std::memcpy(yr, bd, sizeof(double) * static_cast<size_t>(out));
    const double* xr = xd + static_cast<size_t>(r) * in;
    for (int i = 0; i < in; ++i) {
      const double a = xr[i];
      const double* wi = wd + static_cast<size_t>(i) * out;
      for (int k = 0; k < out; ++k) yr[k] += a * wi[k];
    }
  }
  int xi = xv.id, wi_ = wv.id, bi = bv.id;
  return {push(std::move(y), {xi, wi_, bi}, "affine", [xi, wi_, bi, n, in, out](Graph& g, int self) {
    const double* dy = g.nodes_[self].grad.data.data();
    const double* xd2 = g.nodes_[xi].value.data.data();
    const double* wd2 = g.nodes_[wi_].value.data.data();
    double* dx = g.grad_buf(xi).data.data();
    double* dw = g.grad_buf(wi_).data.data();
    double* db = g.grad_buf(bi).data.data();
    for (int r = 0; r < n; ++r) {
      const double* dyr = dy + static_cast<size_t>(r) * out;
      const double* xr = xd2 + static_cast<size_t>(r) * in;
      double* dxr = dx + static_cast<size_t>(r) * in;
      for (int i = 0; i < in; ++i) {
        const double* wrow = wd2 + static_cast<size_t>(i) * out;
        double* dwrow = dw + static_cast<size_t>(i) * out;
        const double a = xr[i];
        double acc = 0.0;
        for (int k = 0; k < out; ++k) {
          acc += dyr[k] * wrow[k];
          dwrow[k] += a * dyr[k];
        }
        dxr[i] += acc;
      }
      for (int k = 0; k < out; ++k) db[k] += dyr[k];
    }
  })};
}

Graph::Var Graph::tanh_(Var xv) {
  Tensor y = value(xv);
  for (double& v : y.data) v = std::tanh(v);
  int xi = xv.id;
  return {push(std::move(y), {xi}, "tanh", [xi](Graph& g, int self) {
    const Node& s = g.nodes_[self];
    double* dx = g.grad_buf(xi).data.data();
    for (size_t i = 0; i < s.value.data.size(); ++i) {
      const double t = s.value.data[i];
      dx[i] += s.grad.data[i] * (1.0 - t * t);
    }
  })};
}

Graph::Var Graph::relu(Var xv) {
  Tensor y = value(xv);
  for (double& v : y.data) v = v > 0.0 ? v : 0.0;
  int xi = xv.id;
  return {push(std::move(y), {xi}, "relu", [xi](Graph& g, int self) {
    const Node& s = g.nodes_[self];
    const double* x = g.nodes_[xi].value.data.data();
    double* dx = g.grad_buf(xi).data.data();
    for (size_t i = 0; i < s.value.data.size(); ++i) {
      if (x[i] > 0.0) dx[i] += s.grad.data[i];
    }
  })};
}

Graph::Var Graph::sigmoid(Var xv) {
  Tensor y = value(xv);
  for (double& v : y.data) v = 1.0 / (1.0 + std::exp(-v));
  int xi = xv.id;
  return {push(std::move(y), {xi}, "sigmoid", [xi](Graph& g, int self) {
    const Node& s = g.nodes_[self];
    double* dx = g.grad_buf(xi).data.data();
    for (size_t i = 0; i < s.value.data.size(); ++i) {
      const double t = s.value.data[i];
      dx[i] += s.grad.data[i] * t * (1.0 - t);
    }
  })};
}

Graph::Var Graph::softmax_rows(Var xv) {
  const Tensor& x = value(xv);
  require(x.shape.size() == 2, "softmax expects a matrix");
  const int n = x.shape[0], m = x.shape[1];
  Tensor y({n, m});
  for (int r = 0; r < n; ++r) {
    const double* xr = x.data.data() + static_cast<size_t>(r) * m;
    double* yr = y.data.data() + static_cast<size_t>(r) * m;
    double mx = xr[0];
    for (int c = 1; c < m; ++c) mx = std::max(mx, xr[c]);
    double z = 0.0;
    for (int c = 0; c < m; ++c) {
      yr[c] = std::exp(xr[c] - mx);
      z += yr[c];
    }
    for (int c = 0; c < m; ++c) yr[c] /= z;
  }
  int xi = xv.id;
  return {push(std::move(y), {xi}, "softmax", [xi, n, m](Graph& g, int self) {
    const Node& s = g.nodes_[self];
    double* dx = g.grad_buf(xi).data.data();
    for (int r = 0; r < n; ++r) {
      const double* yr = s.value.data.data() + static_cast<size_t>(r) * m;
      const double* dyr = s.grad.data.data() + static_cast<size_t>(r) * m;
      double dot = 0.0;
      for (int c = 0; c < m; ++c) dot += yr[c] * dyr[c];
      double* dxr = dx + static_cast<size_t>(r) * m;
      for (int c = 0; c < m; ++c) dxr[c] += yr[c] * (dyr[c] - dot);
    }
  })};
}

Graph::Var Graph::log_(Var xv) {
  Tensor y = value(xv);
  for (double& v : y.data) v = std::log(v);
  int xi = xv.id;
  return {push(std::move(y), {xi}, "log", [xi](Graph& g, int self) {
    const Node& s = g.nodes_[self];
    const double* x = g.nodes_[xi].value.data.data();
    double* dx = g.grad_buf(xi).data.data();
    for (size_t i = 0; i < s.value.data.size(); ++i) dx[i] += s.grad.data[i] / x[i];
  })};
}

Graph::Var Graph::exp_(Var xv) {
  Tensor y = value(xv);
  for (double& v : y.data) v = std::exp(v);
  int xi = xv.id;
  return {push(std::move(y), {xi}, "exp", [xi](Graph& g, int self) {
    const Node& s = g.nodes_[self];
    double* dx = g.grad_buf(xi).data.data();
    for (size_t i = 0; i < s.value.data.size(); ++i) dx[i] += s.grad.data[i] * s.value.data[i];
  })};
}

Graph::Var Graph::add(Var av, Var bv) {
  const Tensor& a = value(av);
  const Tensor& b = value(bv);
  require(a.same_shape(b), "add shape mismatch " + shape_str(a.shape) + " vs " + shape_str(b.shape));
  Tensor y = a;
  for (size_t i = 0; i < y.data.size(); ++i) y.data[i] += b.data[i];
  int ai = av.id, bi = bv.id;
  return {push(std::move(y), {ai, bi}, "add", [ai, bi](Graph& g, int self) {
    const Tensor& dy = g.nodes_[self].grad;
    double* da = g.grad_buf(ai).data.data();
    double* db = g.grad_buf(bi).data.data();
    for (size_t i = 0; i < dy.data.size(); ++i) {
      da[i] += dy.data[i];
      db[i] += dy.data[i];
    }
  })};
}

Graph::Var Graph::sub(Var av, Var bv) {
  const Tensor& a = value(av);
  const Tensor& b = value(bv);
  require(a.same_shape(b), "sub shape mismatch " + shape_str(a.shape) + " vs " + shape_str(b.shape));
  Tensor y = a;
  for (size_t i = 0; i < y.data.size(); ++i) y.data[i] -= b.data[i];
  int ai = av.id, bi = bv.id;
  return {push(std::move(y), {ai, bi}, "sub", [ai, bi](Graph& g, int self) {
    const Tensor& dy = g.nodes_[self].grad;
    double* da = g.grad_buf(ai).data.data();
    double* db = g.grad_buf(bi).data.data();
    for (size_t i = 0; i < dy.data.size(); ++i) {
      da[i] += dy.data[i];
      db[i] -= dy.data[i];
    }
  })};
}

Graph::Var Graph::mul(Var av, Var bv) {
  const Tensor& a = value(av);
  const Tensor& b = value(bv);
  require(a.same_shape(b), "mul shape mismatch " + shape_str(a.shape) + " vs " + shape_str(b.shape));
  Tensor y = a;
  for (size_t i = 0; i < y.data.size(); ++i) y.data[i] *= b.data[i];
  int ai = av.id, bi = bv.id;
  return {push(std::move(y), {ai, bi}, "mul", [ai, bi](Graph& g, int self) {
    const Tensor& dy = g.nodes_[self].grad;
    const double* a2 = g.nodes_[ai].value.data.data();
    const double* b2 = g.nodes_[bi].value.data.data();
    double* da = g.grad_buf(ai).data.data();
    double* db = g.grad_buf(bi).data.data();
    for (size_t i = 0; i < dy.data.size(); ++i) {
      da[i] += dy.data[i] * b2[i];
      db[i] += dy.data[i] * a2[i];
    }
  })};
}

Graph::Var Graph::div_(Var av, Var bv) {
  const Tensor& a = value(av);
  const Tensor& b = value(bv);
  require(a.same_shape(b), "div shape mismatch " + shape_str(a.shape) + " vs " + shape_str(b.shape));
  Tensor y = a;
  for (size_t i = 0; i < y.data.size(); ++i) y.data[i] /= b.data[i];
  int ai = av.id, bi = bv.id;
  return {push(std::move(y), {ai, bi}, "div", [ai, bi](Graph& g, int self) {
    const Node& s = g.nodes_[self];
    const double* b2 = g.nodes_[bi].value.data.data();
    double* da = g.grad_buf(ai).data.data();
    double* db = g.grad_buf(bi).data.data();
    for (size_t i = 0; i < s.grad.data.size(); ++i) {
      const double inv = 1.0 / b2[i];
      da[i] += s.grad.data[i] * inv;
      db[i] -= s.grad.data[i] * s.value.data[i] * inv;
    }
  })};
}

Graph::Var Graph::add_scalar(Var xv, double c) {
  Tensor y = value(xv);
  for (double& v : y.data) v += c;
  int xi = xv.id;
  return {push(std::move(y), {xi}, "add_scalar", [xi](Graph& g, int self) {
    const Tensor& dy = g.nodes_[self].grad;
    double* dx = g.grad_buf(xi).data.data();
    for (size_t i = 0; i < dy.data.size(); ++i) dx[i] += dy.data[i];
  })};
}

Graph::Var Graph::mul_scalar(Var xv, double c) {
  Tensor y = value(xv);
  for (double& v : y.data) v *= c;
  int xi = xv.id;
  return {push(std::move(y), {xi}, "mul_scalar", [xi, c](Graph& g, int self) {
    const Tensor& dy = g.nodes_[self].grad;
    double* dx = g.grad_buf(xi).data.data();
    for (size_t i = 0; i < dy.data.size(); ++i) dx[i] += c * dy.data[i];
  })};
}

Graph::Var Graph::sub_from_scalar(double c, Var xv) {
  Tensor y = value(xv);
  for (double& v : y.data) v = c - v;
  int xi = xv.id;
  return {push(std::move(y), {xi}, "sub_from_scalar", [xi](Graph& g, int self) {
    const Tensor& dy = g.nodes_[self].grad;
    double* dx = g.grad_buf(xi).data.data();
    for (size_t i = 0; i < dy.data.size(); ++i) dx[i] -= dy.data[i];
  })};
}

Graph::Var Graph::clamp_(Var xv, double lo, double hi) {
  require(lo < hi, "clamp bounds out of order");
  Tensor y = value(xv);
  for (double& v : y.data) v = v < lo ? lo : (v > hi ? hi : v);
  int xi = xv.id;
  return {push(std::move(y), {xi}, "clamp", [xi, lo, hi](Graph& g, int self) {
    const Tensor& dy = g.nodes_[self].grad;
    const double* x = g.nodes_[xi].value.data.data();
    double* dx = g.grad_buf(xi).data.data();
    for (size_t i = 0; i < dy.data.size(); ++i) {
      if (x[i] > lo && x[i] < hi) dx[i] += dy.data[i];
    }
  })};
}

Graph::Var Graph::sum(Var xv) {
  const Tensor& x = value(xv);
  double s = 0.0;
  for (double v : x.data) s += v;
  int xi = xv.id;
  return {push(Tensor::scalar(s), {xi}, "sum", [xi](Graph& g, int self) {
    const double gy = g.nodes_[self].grad.data[0];
    double* dx = g.grad_buf(xi).data.data();
    const size_t n = g.nodes_[xi].value.data.size();
    for (size_t i = 0; i < n; ++i) dx[i] += gy;
  })};
}

Graph::Var Graph::mean(Var xv) {
  const Tensor& x = value(xv);
  double s = 0.0;
  for (double v : x.data) s += v;
  const double inv = 1.0 / static_cast<double>(x.data.size());
  int xi = xv.id;
  return {push(Tensor::scalar(s * inv), {xi}, "mean", [xi, inv](Graph& g, int self) {
    const double gy = g.nodes_[self].grad.data[0] * inv;
    double* dx = g.grad_buf(xi).data.data();
    const size_t n = g.nodes_[xi].value.data.size();
    for (size_t i = 0; i < n; ++i) dx[i] += gy;
  })};
}

Graph::Var Graph::sum_rows(Var xv) {
  const Tensor& x = value(xv);
  require(x.shape.size() == 2, "sum_rows expects a matrix");
  const int n = x.shape[0], m = x.shape[1];
  Tensor y({n});
  for (int r = 0; r < n; ++r) {
    const double* xr = x.data.data() + static_cast<size_t>(r) * m;
    double s = 0.0;
    for (int c = 0; c < m; ++c) s += xr[c];
    y.data[static_cast<size_t>(r)] = s;
  }
  int xi = xv.id;
  return {push(std::move(y), {xi}, "sum_rows", [xi, n, m](Graph& g, int self) {
    const Tensor& dy = g.nodes_[self].grad;
    double* dx = g.grad_buf(xi).data.data();
    for (int r = 0; r < n; ++r) {
      const double gr = dy.data[static_cast<size_t>(r)];
      double* dxr = dx + static_cast<size_t>(r) * m;
      for (int c = 0; c < m; ++c) dxr[c] += gr;
    }
  })};
}

Graph::Var Graph::concat_cols(Var av, Var bv) {
  const Tensor& a = value(av);
  const Tensor& b = value(bv);
  require(a.shape.size() == 2 && b.shape.size() == 2 && a.shape[0] == b.shape[0],
          "concat_cols expects matrices with equal row counts");
  const int n = a.shape[0], ma = a.shape[1], mb = b.shape[1];
  Tensor y({n, ma + mb});
  for (int r = 0; r < n; ++r) {
    double* yr = y.data.data() + static_cast<size_t>(r) * (ma + mb);
    std::memcpy(yr, a.data.data() + static_cast<size_t>(r) * ma, sizeof(double) * static_cast<size_t>(ma));
    std::memcpy(yr + ma, b.data.data() + static_cast<size_t>(r) * mb, sizeof(double) * static_cast<size_t>(mb));
  }
  int ai = av.id, bi = bv.id;
  return {push(std::move(y), {ai, bi}, "concat", [ai, bi, n, ma, mb](Graph& g, int self) {
    const Tensor& dy = g.nodes_[self].grad;
    double* da = g.grad_buf(ai).data.data();
    double* db = g.grad_buf(bi).data.data();
    for (int r = 0; r < n; ++r) {
      const double* dyr = dy.data.data() + static_cast<size_t>(r) * (ma + mb);
      double* dar = da + static_cast<size_t>(r) * ma;
      double* dbr = db + static_cast<size_t>(r) * mb;
      for (int c = 0; c < ma; ++c) dar[c] += dyr[c];
      for (int c = 0; c < mb; ++c) dbr[c] += dyr[ma + c];
    }
  })};
}

Graph::Var Graph::slice_cols(Var xv, int c0, int len) {
  const Tensor& x = value(xv);
  require(x.shape.size() == 2, "slice_cols expects a matrix");
  const int n = x.shape[0], m = x.shape[1];
  require(c0 >= 0 && len > 0 && c0 + len <= m, "slice_cols range out of bounds");
  Tensor y({n, len});
  for (int r = 0; r < n; ++r) {
    std::memcpy(y.data.data() + static_cast<size_t>(r) * len,
                x.data.data() + static_cast<size_t>(r) * m + c0, sizeof(double) * static_cast<size_t>(len));
  }
  int xi = xv.id;
  return {push(std::move(y), {xi}, "slice_cols", [xi, c0, len, m](Graph& g, int self) {
    const Tensor& dy = g.nodes_[self].grad;
    const int n2 = dy.shape[0];
    double* dx = g.grad_buf(xi).data.data();
    for (int r = 0; r < n2; ++r) {
      const double* dyr = dy.data.data() + static_cast<size_t>(r) * len;
      double* dxr = dx + static_cast<size_t>(r) * m + c0;
      for (int c = 0; c < len; ++c) dxr[c] += dyr[c];
    }
  })};
}

Graph::Var Graph::slice_rows(Var xv, int r0, int len) {
  const Tensor& x = value(xv);
  require(x.shape.size() == 2, "slice_rows expects a matrix");
  const int n = x.shape[0], m = x.shape[1];
  require(r0 >= 0 && len > 0 && r0 + len <= n, "slice_rows range out of bounds");
  Tensor y({len, m});
  std::memcpy(y.data.data(), x.data.data() + static_cast<size_t>(r0) * m,
              sizeof(double) * static_cast<size_t>(len) * m);
  int xi = xv.id;
  return {push(std::move(y), {xi}, "slice_rows", [xi, r0, len, m](Graph& g, int self) {
    const Tensor& dy = g.nodes_[self].grad;
    double* dx = g.grad_buf(xi).data.data() + static_cast<size_t>(r0) * m;
    for (size_t i = 0; i < static_cast<size_t>(len) * m; ++i) dx[i] += dy.data[i];
  })};
}

double Graph::backward(Var loss) {
  require(!ran_backward_, "backward may run once per graph");
  ran_backward_ = true;
  const Node& ln = node(loss);
  require(ln.value.is_scalar(), "backward expects a scalar loss");
  grad_buf(loss.id).data[0] = 1.0;
  for (int i = loss.id; i >= 0; --i) {
    Node& n = nodes_[static_cast<size_t>(i)];
    if (n.back && has_grad(i)) n.back(*this, i);
  }
  return ln.value.data[0];
}

GradMap Graph::collect_grads(const ParamStore& store) const {
  GradMap out;
  for (const auto& [name, e] : store.entries()) out.emplace(name, Tensor::zeros(e.value.shape));
  for (const Node& n : nodes_) {
    if (n.store != &store || n.grad.data.empty()) continue;
    if (!n.grad.all_finite()) throw NumericError("backward", "gradient of '" + n.pname + "'");
    Tensor& g = out.at(n.pname);
    for (size_t i = 0; i < g.data.size(); ++i) g.data[i] += n.grad.data[i];
  }
  return out;
}

ValueAndGrad value_and_grad(ParamStore& store, const std::function<Graph::Var(Graph&)>& build) {
  Graph g;
  Graph::Var loss = build(g);
  ValueAndGrad out;
  out.loss = g.backward(loss);
  out.grads = g.collect_grads(store);
  return out;
}

}  // namespace modrel
