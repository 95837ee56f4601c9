// Dense float64 tensors with reverse-mode automatic differentiation.
//
// Every op returns a new Tensor whose node remembers its inputs and a
// backward closure. backward(loss) walks the graph in reverse topological
// order. Graph memory is owned by the result tensors: dropping the loss
// drops the tape. Leaf tensors created with requires_grad (parameters) keep
// their gradient across backward calls until zeroed.
#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pshield::nn {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_str(const Shape& shape);

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until first needed
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  std::span<double> ensure_grad();
};

}  // namespace detail

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t i) const { return node_->shape.at(i); }
  std::size_t size() const { return node_->value.size(); }
  bool requires_grad() const { return node_->requires_grad; }

  std::span<const double> values() const { return node_->value; }
  std::span<double> mutable_values() { return node_->value; }
  // Empty span when no gradient has been accumulated yet.
  std::span<const double> grad() const { return node_->grad; }
  std::span<double> mutable_grad() { return node_->ensure_grad(); }
  void zero_grad();

  double item() const;

  const std::shared_ptr<detail::Node>& node() const { return node_; }

  // Builds an op result. Throws NumericError if `value` holds NaN/Inf.
  // The backward closure and parents are dropped when no input needs grad.
  static Tensor make_result(const char* op, Shape shape, std::vector<double> value,
                            std::vector<Tensor> inputs, std::function<void(detail::Node&)> fn);

 private:
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  std::shared_ptr<detail::Node> node_;
};

// A named trainable leaf.
class Parameter {
 public:
  Parameter(std::string name, Shape shape, std::vector<double> values);

  const std::string& name() const { return name_; }
  const Tensor& tensor() const { return tensor_; }
  Tensor& tensor() { return tensor_; }
  operator const Tensor&() const { return tensor_; }  // NOLINT: ops take Tensors

 private:
  std::string name_;
  Tensor tensor_;
};

// Populates gradients of every reachable tensor that requires grad. Interior
// gradients are reset first; leaf gradients accumulate across calls.
void backward(const Tensor& loss);

}  // namespace pshield::nn
