#include "diswot/tensor.hpp"

#include <cmath>
#include <sstream>

#include "diswot/error.hpp"

namespace diswot {

std::int64_t shape_numel(const Shape& shape) {
  std::int64_t n = 1;
  for (auto e : shape) n *= e;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

namespace {
void check_shape(const Shape& shape) {
  if (shape.empty() || shape.size() > 4) {
    throw Error("tensor rank must be 1..4, got shape " + shape_string(shape));
  }
  for (auto e : shape) {
    if (e < 1) throw Error("tensor extents must be >= 1, got shape " + shape_string(shape));
  }
}
}  // namespace

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
  check_shape(shape_);
  data_.assign(static_cast<std::size_t>(shape_numel(shape_)), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  check_shape(shape_);
  if (static_cast<std::int64_t>(data_.size()) != shape_numel(shape_)) {
    throw Error("tensor data length " + std::to_string(data_.size()) + " does not match shape " +
                shape_string(shape_));
  }
}

Tensor Tensor::reshaped(Shape shape) const { return Tensor(std::move(shape), data_); }

bool Tensor::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace diswot
