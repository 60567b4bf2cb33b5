#include "tensor.hpp"

#include <cmath>
#include <cstdlib>

#include "errors.hpp"

namespace modrel {

int64_t shape_product(const std::vector<int>& shape) {
  int64_t p = 1;
  for (int s : shape) p *= s;
  return p;
}

std::string shape_str(const std::vector<int>& shape) {
  std::string out = "(";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(shape[i]);
  }
  out += ")";
  return out;
}

Tensor::Tensor(std::vector<int> s) : shape(std::move(s)) {
  for (int d : shape) {
    if (d <= 0) throw InvalidArgument("tensor dimensions must be positive, got " + shape_str(shape));
  }
  data.assign(static_cast<size_t>(shape_product(shape)), 0.0);
}

Tensor::Tensor(std::vector<int> s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
  if (shape_product(shape) != static_cast<int64_t>(data.size())) {
    throw InvalidArgument("tensor data length " + std::to_string(data.size()) +
                          " does not match shape " + shape_str(shape));
  }
}

Tensor Tensor::scalar(double v) { return Tensor({1}, {v}); }

Tensor Tensor::full(std::vector<int> s, double v) {
  Tensor t(std::move(s));
  t.fill(v);
  return t;
}

void Tensor::fill(double v) {
  for (double& x : data) x = v;
}

bool Tensor::all_finite() const {
  for (double x : data) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace modrel
