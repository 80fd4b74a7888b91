#pragma once

#include <memory>
#include <vector>

#include "lpforge/tensor.hpp"

namespace lpforge::ad {

/// Reverse-mode program over a fixed primitive set: affine maps, ReLU,
/// tanh-approximated GELU, elementwise add/mul, scalar scaling, full-sum
/// reduction and softmax cross-entropy. The DAG has one designated input and
/// one scalar output. Anything outside this set cannot be constructed; shape
/// or arity violations throw at construction time.
///
/// Evaluation is pure: per-call buffers, fixed reduction order, no shared
/// mutable state, so a Program can be shared across threads.
class Program {
 public:
  /// Designated differentiable input. Exactly one per program.
  int input(std::vector<std::size_t> shape);

  int constant(Tensor value);

  /// y = W x + b with W (m x n) and b (m); x 1-D of length n.
  int affine(int x, int weight, int bias);

  int relu(int x);
  int gelu(int x);
  int add(int a, int b);
  int mul(int a, int b);
  int scale(int a, double c);
  int sum(int a);

  /// Scalar -log softmax(logits) . onehot, computed stably.
  int softmax_xent(int logits, int onehot);

  /// Output must be scalar (a single element).
  void mark_output(int node);

  ValueGrad value_and_input_grad(const Tensor& x) const;
  double value_at(const Tensor& x) const;

  std::size_t node_count() const { return nodes_.size(); }

 private:
  enum class Op { Input, Constant, Affine, Relu, Gelu, Add, Mul, Scale, Sum, SoftmaxXent };

  struct Node {
    Op op;
    int a = -1, b = -1, c = -1;
    double attr = 0.0;
    std::vector<std::size_t> shape;
    Tensor value;  // constants only
  };

  int push(Node n);
  const Node& checked(int id, const char* what) const;

  std::vector<Node> nodes_;
  int input_ = -1;
  int output_ = -1;
};

/// Spec operation: evaluate f and its input gradient by reverse accumulation.
ValueGrad value_and_input_grad(const Program& f, const Tensor& x);

/// Wrap a program as a ScalarFn; the program is kept alive by the closure.
ScalarFn as_scalar_fn(std::shared_ptr<const Program> program);

}  // namespace lpforge::ad
