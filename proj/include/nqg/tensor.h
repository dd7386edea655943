#ifndef NQG_TENSOR_H
#define NQG_TENSOR_H

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace nqg {

// Dense row-major tensor of doubles; 1-D or 2-D is all the model needs.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  static Tensor zeros(std::vector<std::size_t> shape);

  std::size_t numel() const { return data.size(); }
  std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
  std::size_t cols() const { return shape.size() < 2 ? 1 : shape[1]; }

  double& at(std::size_t i) { return data[i]; }
  double at(std::size_t i) const { return data[i]; }
  double& at(std::size_t i, std::size_t j) { return data[i * cols() + j]; }
  double at(std::size_t i, std::size_t j) const { return data[i * cols() + j]; }
  double* row(std::size_t i) { return data.data() + i * cols(); }
  const double* row(std::size_t i) const { return data.data() + i * cols(); }

  void fill(double v) { std::fill(data.begin(), data.end(), v); }
};

}  // namespace nqg

#endif
