#include "lpforge/autodiff.hpp"

#include <cmath>
#include <stdexcept>

namespace lpforge::ad {

namespace {

constexpr double kGeluCoef = 0.044715;
const double kGeluScale = std::sqrt(2.0 / M_PI);

double gelu_value(double x) {
  double u = kGeluScale * (x + kGeluCoef * x * x * x);
  return 0.5 * x * (1.0 + std::tanh(u));
}

double gelu_grad(double x) {
  double u = kGeluScale * (x + kGeluCoef * x * x * x);
  double t = std::tanh(u);
  double du = kGeluScale * (1.0 + 3.0 * kGeluCoef * x * x);
  return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du;
}

}  // namespace

int Program::push(Node n) {
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

const Program::Node& Program::checked(int id, const char* what) const {
  if (id < 0 || id >= static_cast<int>(nodes_.size()))
    throw std::invalid_argument(std::string(what) + ": invalid node id");
  return nodes_[static_cast<std::size_t>(id)];
}

int Program::input(std::vector<std::size_t> shape) {
  if (input_ >= 0) throw std::invalid_argument("Program: a second input is not supported");
  Node n;
  n.op = Op::Input;
  n.shape = std::move(shape);
  input_ = push(std::move(n));
  return input_;
}

int Program::constant(Tensor value) {
  Node n;
  n.op = Op::Constant;
  n.shape = value.shape;
  n.value = std::move(value);
  return push(std::move(n));
}

int Program::affine(int x, int weight, int bias) {
  const Node& xn = checked(x, "affine");
  const Node& wn = checked(weight, "affine");
  const Node& bn = checked(bias, "affine");
  if (xn.shape.size() != 1 || wn.shape.size() != 2 || bn.shape.size() != 1)
    throw std::invalid_argument("affine: expects 1-D input, 2-D weight, 1-D bias");
  if (wn.shape[1] != xn.shape[0] || wn.shape[0] != bn.shape[0])
    throw std::invalid_argument("affine: shape chain mismatch");
  Node n;
  n.op = Op::Affine;
  n.a = x;
  n.b = weight;
  n.c = bias;
  n.shape = {wn.shape[0]};
  return push(std::move(n));
}

int Program::relu(int x) {
  Node n;
  n.op = Op::Relu;
  n.a = x;
  n.shape = checked(x, "relu").shape;
  return push(std::move(n));
}

int Program::gelu(int x) {
  Node n;
  n.op = Op::Gelu;
  n.a = x;
  n.shape = checked(x, "gelu").shape;
  return push(std::move(n));
}

int Program::add(int a, int b) {
  const Node& an = checked(a, "add");
  const Node& bn = checked(b, "add");
  if (an.shape != bn.shape) throw std::invalid_argument("add: shape mismatch");
  Node n;
  n.op = Op::Add;
  n.a = a;
  n.b = b;
  n.shape = an.shape;
  return push(std::move(n));
}

int Program::mul(int a, int b) {
  const Node& an = checked(a, "mul");
  const Node& bn = checked(b, "mul");
  if (an.shape != bn.shape) throw std::invalid_argument("mul: shape mismatch");
  Node n;
  n.op = Op::Mul;
  n.a = a;
  n.b = b;
  n.shape = an.shape;
  return push(std::move(n));
}

int Program::scale(int a, double c) {
  Node n;
  n.op = Op::Scale;
  n.a = a;
  n.attr = c;
  n.shape = checked(a, "scale").shape;
  return push(std::move(n));
}

int Program::sum(int a) {
  Node n;
  n.op = Op::Sum;
  n.a = a;
  checked(a, "sum");
  n.shape = {1};
  return push(std::move(n));
}

int Program::softmax_xent(int logits, int onehot) {
  const Node& zn = checked(logits, "softmax_xent");
  const Node& yn = checked(onehot, "softmax_xent");
  if (zn.shape.size() != 1 || yn.shape != zn.shape)
    throw std::invalid_argument("softmax_xent: logits and onehot must be matching 1-D vectors");
  Node n;
  n.op = Op::SoftmaxXent;
  n.a = logits;
  n.b = onehot;
  n.shape = {1};
  return push(std::move(n));
}

void Program::mark_output(int node) {
  const Node& n = checked(node, "mark_output");
  std::size_t numel = 1;
  for (std::size_t d : n.shape) numel *= d;
  if (numel != 1) throw std::invalid_argument("mark_output: output must be scalar");
  output_ = node;
}

ValueGrad Program::value_and_input_grad(const Tensor& x) const {
  if (input_ < 0 || output_ < 0)
    throw std::invalid_argument("Program: needs an input and a marked output");
  if (x.shape != nodes_[static_cast<std::size_t>(input_)].shape)
    throw std::invalid_argument("Program: input shape mismatch");

  std::size_t n = nodes_.size();
  std::vector<std::vector<double>> val(n);
  // forward, construction order is topological
  for (std::size_t i = 0; i < n; ++i) {
    const Node& nd = nodes_[i];
    switch (nd.op) {
      case Op::Input:
        val[i] = x.data;
        break;
      case Op::Constant:
        val[i] = nd.value.data;
        break;
      case Op::Affine: {
        const auto& xv = val[static_cast<std::size_t>(nd.a)];
        const auto& w = val[static_cast<std::size_t>(nd.b)];
        const auto& b = val[static_cast<std::size_t>(nd.c)];
        std::size_t m = b.size(), in = xv.size();
        val[i].assign(m, 0.0);
        for (std::size_t r = 0; r < m; ++r) {
          double acc = b[r];
          const double* wr = w.data() + r * in;
          for (std::size_t k = 0; k < in; ++k) acc += wr[k] * xv[k];
          val[i][r] = acc;
        }
        break;
      }
      case Op::Relu: {
        const auto& a = val[static_cast<std::size_t>(nd.a)];
        val[i].resize(a.size());
        for (std::size_t k = 0; k < a.size(); ++k) val[i][k] = a[k] > 0.0 ? a[k] : 0.0;
        break;
      }
      case Op::Gelu: {
        const auto& a = val[static_cast<std::size_t>(nd.a)];
        val[i].resize(a.size());
        for (std::size_t k = 0; k < a.size(); ++k) val[i][k] = gelu_value(a[k]);
        break;
      }
      case Op::Add: {
        const auto& a = val[static_cast<std::size_t>(nd.a)];
        const auto& b = val[static_cast<std::size_t>(nd.b)];
        val[i].resize(a.size());
        for (std::size_t k = 0; k < a.size(); ++k) val[i][k] = a[k] + b[k];
        break;
      }
      case Op::Mul: {
        const auto& a = val[static_cast<std::size_t>(nd.a)];
        const auto& b = val[static_cast<std::size_t>(nd.b)];
        val[i].resize(a.size());
        for (std::size_t k = 0; k < a.size(); ++k) val[i][k] = a[k] * b[k];
        break;
      }
      case Op::Scale: {
        const auto& a = val[static_cast<std::size_t>(nd.a)];
        val[i].resize(a.size());
        for (std::size_t k = 0; k < a.size(); ++k) val[i][k] = nd.attr * a[k];
        break;
      }
      case Op::Sum: {
        const auto& a = val[static_cast<std::size_t>(nd.a)];
        double acc = 0.0;
        for (double v : a) acc += v;
        val[i] = {acc};
        break;
      }
      case Op::SoftmaxXent: {
        const auto& z = val[static_cast<std::size_t>(nd.a)];
        const auto& y = val[static_cast<std::size_t>(nd.b)];
        double m = z[0];
        for (double v : z) m = std::max(m, v);
        double lse = 0.0;
        for (double v : z) lse += std::exp(v - m);
        lse = m + std::log(lse);
        double zy = 0.0;
        for (std::size_t k = 0; k < z.size(); ++k) zy += y[k] * z[k];
        val[i] = {lse - zy};
        break;
      }
    }
  }

  // backward
  std::vector<std::vector<double>> grad(n);
  for (std::size_t i = 0; i < n; ++i) grad[i].assign(val[i].size(), 0.0);
  grad[static_cast<std::size_t>(output_)][0] = 1.0;

  for (std::size_t ii = n; ii-- > 0;) {
    const Node& nd = nodes_[ii];
    const auto& g = grad[ii];
    switch (nd.op) {
      case Op::Input:
      case Op::Constant:
        break;
      case Op::Affine: {
        auto& gx = grad[static_cast<std::size_t>(nd.a)];
        auto& gw = grad[static_cast<std::size_t>(nd.b)];
        auto& gb = grad[static_cast<std::size_t>(nd.c)];
        const auto& xv = val[static_cast<std::size_t>(nd.a)];
        const auto& w = val[static_cast<std::size_t>(nd.b)];
        std::size_t m = g.size(), in = xv.size();
        for (std::size_t r = 0; r < m; ++r) {
          const double* wr = w.data() + r * in;
          double gr = g[r];
          gb[r] += gr;
          for (std::size_t k = 0; k < in; ++k) {
            gx[k] += gr * wr[k];
            gw[r * in + k] += gr * xv[k];
          }
        }
        break;
      }
      case Op::Relu: {
        auto& ga = grad[static_cast<std::size_t>(nd.a)];
        const auto& a = val[static_cast<std::size_t>(nd.a)];
        for (std::size_t k = 0; k < g.size(); ++k)
          if (a[k] > 0.0) ga[k] += g[k];
        break;
      }
      case Op::Gelu: {
        auto& ga = grad[static_cast<std::size_t>(nd.a)];
        const auto& a = val[static_cast<std::size_t>(nd.a)];
        for (std::size_t k = 0; k < g.size(); ++k) ga[k] += g[k] * gelu_grad(a[k]);
        break;
      }
      case Op::Add: {
        auto& ga = grad[static_cast<std::size_t>(nd.a)];
        auto& gb = grad[static_cast<std::size_t>(nd.b)];
        for (std::size_t k = 0; k < g.size(); ++k) {
          ga[k] += g[k];
          gb[k] += g[k];
        }
        break;
      }
      case Op::Mul: {
        auto& ga = grad[static_cast<std::size_t>(nd.a)];
        auto& gb = grad[static_cast<std::size_t>(nd.b)];
        const auto& a = val[static_cast<std::size_t>(nd.a)];
        const auto& b = val[static_cast<std::size_t>(nd.b)];
        for (std::size_t k = 0; k < g.size(); ++k) {
          ga[k] += g[k] * b[k];
          gb[k] += g[k] * a[k];
        }
        break;
      }
      case Op::Scale: {
        auto& ga = grad[static_cast<std::size_t>(nd.a)];
        for (std::size_t k = 0; k < g.size(); ++k) ga[k] += nd.attr * g[k];
        break;
      }
      case Op::Sum: {
        auto& ga = grad[static_cast<std::size_t>(nd.a)];
        for (std::size_t k = 0; k < ga.size(); ++k) ga[k] += g[0];
        break;
      }
      case Op::SoftmaxXent: {
        auto& gz = grad[static_cast<std::size_t>(nd.a)];
        const auto& z = val[static_cast<std::size_t>(nd.a)];
        const auto& y = val[static_cast<std::size_t>(nd.b)];
        double m = z[0];
        for (double v : z) m = std::max(m, v);
        double denom = 0.0;
        for (double v : z) denom += std::exp(v - m);
        for (std::size_t k = 0; k < z.size(); ++k)
          gz[k] += g[0] * (std::exp(z[k] - m) / denom - y[k]);
        break;
      }
    }
  }

  ValueGrad out;
  out.value = val[static_cast<std::size_t>(output_)][0];
  out.grad = GradVector(grad[static_cast<std::size_t>(input_)]);
  return out;
}

double Program::value_at(const Tensor& x) const { return value_and_input_grad(x).value; }

ValueGrad value_and_input_grad(const Program& f, const Tensor& x) {
  return f.value_and_input_grad(x);
}

ScalarFn as_scalar_fn(std::shared_ptr<const Program> program) {
  return [program](const Tensor& x) { return program->value_and_input_grad(x); };
}

}  // namespace lpforge::ad
