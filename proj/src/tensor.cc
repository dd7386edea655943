#include "nqg/tensor.h"

#include <numeric>

namespace nqg {

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
  Tensor t;
  t.shape = std::move(shape);
  std::size_t n = 1;
  for (std::size_t d : t.shape) n *= d;
  if (t.shape.empty()) n = 0;
  t.data.assign(n, 0.0);
  return t;
}

}  // namespace nqg
