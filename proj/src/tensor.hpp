#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace modrel {

// Dense row-major tensor of doubles. Rank is 1 or 2 everywhere in this
// project; scalars are shape {1}.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s);
  Tensor(std::vector<int> s, std::vector<double> d);

  static Tensor scalar(double v);
  static Tensor zeros(std::vector<int> s) { return Tensor(std::move(s)); }
  static Tensor full(std::vector<int> s, double v);

  int64_t size() const { return static_cast<int64_t>(data.size()); }
  int rows() const { return shape.empty() ? 0 : shape[0]; }
  int cols() const { return shape.size() < 2 ? 1 : shape[1]; }
  bool same_shape(const Tensor& o) const { return shape == o.shape; }
  bool is_scalar() const { return data.size() == 1; }

  double& at(int64_t i) { return data[static_cast<size_t>(i)]; }
  double at(int64_t i) const { return data[static_cast<size_t>(i)]; }

  void fill(double v);
  bool all_finite() const;
};

int64_t shape_product(const std::vector<int>& shape);
std::string shape_str(const std::vector<int>& shape);

}  // namespace modrel
