#include "lpforge/model.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

static_assert(std::endian::native == std::endian::little,
              "checkpoint and dataset formats assume a little-endian host");

namespace lpforge::model {

namespace {

constexpr double kGeluCoef = 0.044715;
const double kGeluScale = std::sqrt(2.0 / M_PI);

inline double act_value(Activation a, double x) {
  if (a == Activation::Relu) return x > 0.0 ? x : 0.0;
  double u = kGeluScale * (x + kGeluCoef * x * x * x);
  return 0.5 * x * (1.0 + std::tanh(u));
}

inline double act_grad(Activation a, double x) {
  if (a == Activation::Relu) return x > 0.0 ? 1.0 : 0.0;
  double u = kGeluScale * (x + kGeluCoef * x * x * x);
  double t = std::tanh(u);
  double du = kGeluScale * (1.0 + 3.0 * kGeluCoef * x * x);
  return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du;
}

Tensor as_batch(const Tensor& x) {
  if (x.ndim() == 2) return x;
  if (x.ndim() == 1) return Tensor({1, x.shape[0]}, x.data);
  throw std::invalid_argument("model: input must be 1-D or 2-D");
}

// out (B x m) = X (B x n) . W^T (n x m) + b
void affine_forward(const Tensor& x, const Tensor& w, const Tensor& b, Tensor& out) {
  std::size_t batch = x.rows(), in = x.cols(), m = w.rows();
  out = Tensor({batch, m});
  for (std::size_t s = 0; s < batch; ++s) {
    const double* xr = x.data.data() + s * in;
    double* outr = out.data.data() + s * m;
    for (std::size_t r = 0; r < m; ++r) {
      const double* wr = w.data.data() + r * in;
      double acc = b.data[r];
      for (std::size_t k = 0; k < in; ++k) acc += wr[k] * xr[k];
      outr[r] = acc;
    }
  }
}

}  // namespace

std::size_t ModelParams::input_dim() const {
  if (weights.empty()) throw std::logic_error("ModelParams: empty");
  return weights.front().cols();
}

std::size_t ModelParams::output_dim() const {
  if (weights.empty()) throw std::logic_error("ModelParams: empty");
  return weights.back().rows();
}

std::size_t ModelParams::param_count() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) n += weights[i].numel() + biases[i].numel();
  return n;
}

void ModelParams::check_chain() const {
  if (weights.size() != biases.size())
    throw std::invalid_argument("ModelParams: weight/bias count mismatch");
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i].rows() != biases[i].numel())
      throw std::invalid_argument("ModelParams: bias length mismatch");
    if (i + 1 < weights.size() && weights[i].rows() != weights[i + 1].cols())
      throw std::invalid_argument("ModelParams: layer shapes do not chain");
  }
}

ModelParams make_mlp(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                     std::size_t classes, Activation activation, std::uint64_t seed) {
  ModelParams p;
  p.activation = activation;
  std::vector<std::size_t> dims;
  dims.push_back(input_dim);
  for (std::size_t h : hidden) dims.push_back(h);
  dims.push_back(classes);

  RngStream rng(seed, "model-init");
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    std::size_t fan_in = dims[i], out = dims[i + 1];
    double wb = std::sqrt(6.0 / static_cast<double>(fan_in));
    double bb = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Tensor w({out, fan_in});
    for (auto& v : w.data) v = rng.uniform(-wb, wb);
    Tensor b({out});
    for (auto& v : b.data) v = rng.uniform(-bb, bb);
    p.weights.push_back(std::move(w));
    p.biases.push_back(std::move(b));
  }
  p.check_chain();
  return p;
}

DropoutMasks make_dropout_masks(const ModelParams& params, std::size_t batch, double rate,
                                RngStream& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) throw std::invalid_argument("dropout rate must be in [0,1)");
  DropoutMasks d;
  d.rate = rate;
  if (rate == 0.0) return d;
  double keep = 1.0 - rate;
  for (std::size_t l = 0; l + 1 < params.layer_count(); ++l) {
    Tensor m({batch, params.weights[l].rows()});
    for (auto& v : m.data) v = rng.uniform01() < keep ? 1.0 / keep : 0.0;
    d.masks.push_back(std::move(m));
  }
  return d;
}

Tensor forward_logits(const ModelParams& params, const Tensor& x, const DropoutMasks* dropout) {
  params.check_chain();
  Tensor h = as_batch(x);
  if (h.cols() != params.input_dim())
    throw std::invalid_argument("forward_logits: feature dimension mismatch");
  Tensor z;
  for (std::size_t l = 0; l < params.layer_count(); ++l) {
    affine_forward(h, params.weights[l], params.biases[l], z);
    if (l + 1 < params.layer_count()) {
      h = Tensor({z.rows(), z.cols()});
      for (std::size_t i = 0; i < z.numel(); ++i)
        h.data[i] = act_value(params.activation, z.data[i]);
      if (dropout && dropout->rate > 0.0) {
        const Tensor& m = dropout->masks[l];
        m.check_shape_matches(h, "dropout mask");
        for (std::size_t i = 0; i < h.numel(); ++i) h.data[i] *= m.data[i];
      }
    } else {
      h = z;
    }
  }
  return h;
}

std::vector<int> predict(const ModelParams& params, const Tensor& x) {
  Tensor logits = forward_logits(params, x);
  std::size_t batch = logits.rows(), classes = logits.cols();
  std::vector<int> out(batch);
  for (std::size_t s = 0; s < batch; ++s) {
    const double* row = logits.data.data() + s * classes;
    int best = 0;
    for (std::size_t c = 1; c < classes; ++c)
      if (row[c] > row[best]) best = static_cast<int>(c);
    out[s] = best;
  }
  return out;
}

LossGrads xent_loss_and_grads(const ModelParams& params, const Tensor& x,
                              const std::vector<int>& labels, const DropoutMasks* dropout) {
  params.check_chain();
  Tensor input = as_batch(x);
  std::size_t batch = input.rows();
  if (batch == 0) throw std::invalid_argument("xent_loss_and_grads: empty batch");
  if (labels.size() != batch)
    throw std::invalid_argument("xent_loss_and_grads: label count mismatch");
  std::size_t classes = params.output_dim();
  for (int y : labels)
    if (y < 0 || static_cast<std::size_t>(y) >= classes)
      throw std::invalid_argument("xent_loss_and_grads: label out of range");

  std::size_t layers = params.layer_count();
  // forward with cached pre-activations
  std::vector<Tensor> acts;  // activations entering each layer
  std::vector<Tensor> pre;   // pre-activation z per layer
  acts.reserve(layers + 1);
  pre.resize(layers);
  acts.push_back(input);
  for (std::size_t l = 0; l < layers; ++l) {
    affine_forward(acts[l], params.weights[l], params.biases[l], pre[l]);
    if (l + 1 < layers) {
      Tensor h({pre[l].rows(), pre[l].cols()});
      for (std::size_t i = 0; i < h.numel(); ++i)
        h.data[i] = act_value(params.activation, pre[l].data[i]);
      if (dropout && dropout->rate > 0.0) {
        const Tensor& m = dropout->masks[l];
        m.check_shape_matches(h, "dropout mask");
        for (std::size_t i = 0; i < h.numel(); ++i) h.data[i] *= m.data[i];
      }
      acts.push_back(std::move(h));
    }
  }
  const Tensor& logits = pre[layers - 1];

  LossGrads out;
  out.per_sample_loss.resize(batch);
  out.weight_grads.reserve(layers);
  out.bias_grads.reserve(layers);
  for (std::size_t l = 0; l < layers; ++l) {
    out.weight_grads.emplace_back(Tensor::zeros_like(params.weights[l]));
    out.bias_grads.emplace_back(Tensor::zeros_like(params.biases[l]));
  }

  // dZ holds per-sample (un-averaged) logit gradients: softmax(z) - onehot(y)
  Tensor dz({batch, classes});
  double total = 0.0;
  for (std::size_t s = 0; s < batch; ++s) {
    const double* z = logits.data.data() + s * classes;
    double m = z[0];
    for (std::size_t c = 1; c < classes; ++c) m = std::max(m, z[c]);
    double denom = 0.0;
    for (std::size_t c = 0; c < classes; ++c) denom += std::exp(z[c] - m);
    double lse = m + std::log(denom);
    double loss_s = lse - z[static_cast<std::size_t>(labels[s])];
    out.per_sample_loss[s] = loss_s;
    total += loss_s;
    double* dzr = dz.data.data() + s * classes;
    for (std::size_t c = 0; c < classes; ++c) dzr[c] = std::exp(z[c] - m) / denom;
    dzr[static_cast<std::size_t>(labels[s])] -= 1.0;
  }
  out.loss = total / static_cast<double>(batch);

  // backward; per-sample gradients stay unscaled, parameter grads get the
  // 1/batch factor at the end
  Tensor cur = dz;
  double inv_batch = 1.0 / static_cast<double>(batch);
  for (std::size_t li = layers; li-- > 0;) {
    const Tensor& w = params.weights[li];
    const Tensor& a = acts[li];
    std::size_t m = w.rows(), in = w.cols();
    Tensor& gw = out.weight_grads[li];
    Tensor& gb = out.bias_grads[li];
    Tensor prev({batch, in});
    for (std::size_t s = 0; s < batch; ++s) {
      const double* dzr = cur.data.data() + s * m;
      const double* ar = a.data.data() + s * in;
      double* pr = prev.data.data() + s * in;
      for (std::size_t r = 0; r < m; ++r) {
        double g = dzr[r];
        if (g == 0.0) continue;
        const double* wr = w.data.data() + r * in;
        double* gwr = gw.data.data() + r * in;
        gb.data[r] += g;
        for (std::size_t k = 0; k < in; ++k) {
          pr[k] += g * wr[k];
          gwr[k] += g * ar[k];
        }
      }
    }
    if (li > 0) {
      // through dropout then activation derivative at the cached pre-activation
      const Tensor& zprev = pre[li - 1];
      if (dropout && dropout->rate > 0.0) {
        const Tensor& mask = dropout->masks[li - 1];
        for (std::size_t i = 0; i < prev.numel(); ++i) prev.data[i] *= mask.data[i];
      }
      for (std::size_t i = 0; i < prev.numel(); ++i)
        prev.data[i] *= act_grad(params.activation, zprev.data[i]);
    }
    cur = std::move(prev);
  }

  for (std::size_t l = 0; l < layers; ++l) {
    for (auto& v : out.weight_grads[l].data) v *= inv_batch;
    for (auto& v : out.bias_grads[l].data) v *= inv_batch;
  }

  std::size_t d = input.cols();
  out.input_grads.reserve(batch);
  for (std::size_t s = 0; s < batch; ++s) {
    GradVector g(d);
    const double* row = cur.data.data() + s * d;
    for (std::size_t k = 0; k < d; ++k) g[k] = row[k];
    out.input_grads.push_back(std::move(g));
  }
  return out;
}

std::pair<double, std::vector<double>> xent_loss(const ModelParams& params, const Tensor& x,
                                                 const std::vector<int>& labels) {
  Tensor logits = forward_logits(params, x);
  std::size_t batch = logits.rows(), classes = logits.cols();
  if (labels.size() != batch) throw std::invalid_argument("xent_loss: label count mismatch");
  std::vector<double> per(batch);
  double total = 0.0;
  for (std::size_t s = 0; s < batch; ++s) {
    const double* z = logits.data.data() + s * classes;
    double m = z[0];
    for (std::size_t c = 1; c < classes; ++c) m = std::max(m, z[c]);
    double denom = 0.0;
    for (std::size_t c = 0; c < classes; ++c) denom += std::exp(z[c] - m);
    per[s] = m + std::log(denom) - z[static_cast<std::size_t>(labels[s])];
    total += per[s];
  }
  return {total / static_cast<double>(batch), std::move(per)};
}

double cosine_lr(const OptimizerConfig& cfg, double t) {
  double T = static_cast<double>(cfg.total_epochs);
  if (T <= 0.0) return cfg.lr_max;
  double clamped = std::min(std::max(t, 0.0), T);
  return cfg.lr_min + 0.5 * (cfg.lr_max - cfg.lr_min) * (1.0 + std::cos(M_PI * clamped / T));
}

OptimizerState::OptimizerState(OptimizerConfig cfg, const ModelParams& params) : cfg_(cfg) {
  for (std::size_t l = 0; l < params.layer_count(); ++l) {
    w_m1_.push_back(Tensor::zeros_like(params.weights[l]));
    b_m1_.push_back(Tensor::zeros_like(params.biases[l]));
    if (cfg_.kind == OptimizerKind::Adam) {
      w_m2_.push_back(Tensor::zeros_like(params.weights[l]));
      b_m2_.push_back(Tensor::zeros_like(params.biases[l]));
    }
  }
}

void OptimizerState::set_schedule_time(double t) { schedule_time_ = t; }

double OptimizerState::current_lr() const {
  return cfg_.kind == OptimizerKind::SgdMomentumCosine ? cosine_lr(cfg_, schedule_time_)
                                                       : cfg_.lr_max;
}

void OptimizerState::step(ModelParams& params, const std::vector<Tensor>& weight_grads,
                          const std::vector<Tensor>& bias_grads) {
  if (weight_grads.size() != params.layer_count() || bias_grads.size() != params.layer_count())
    throw std::invalid_argument("optimizer step: gradient count mismatch");
  ++step_count_;
  double lr = current_lr();

  auto update = [&](Tensor& theta, const Tensor& grad, Tensor& m1, Tensor* m2) {
    theta.check_shape_matches(grad, "optimizer step");
    if (cfg_.kind == OptimizerKind::SgdMomentumCosine) {
      for (std::size_t i = 0; i < theta.numel(); ++i) {
        double g = grad.data[i] + cfg_.weight_decay * theta.data[i];
        m1.data[i] = cfg_.momentum * m1.data[i] + g;
        theta.data[i] -= lr * m1.data[i];
      }
    } else {
      double bc1 = 1.0 - std::pow(cfg_.beta1, step_count_);
      double bc2 = 1.0 - std::pow(cfg_.beta2, step_count_);
      for (std::size_t i = 0; i < theta.numel(); ++i) {
        double g = grad.data[i] + cfg_.weight_decay * theta.data[i];
        m1.data[i] = cfg_.beta1 * m1.data[i] + (1.0 - cfg_.beta1) * g;
        m2->data[i] = cfg_.beta2 * m2->data[i] + (1.0 - cfg_.beta2) * g * g;
        double mhat = m1.data[i] / bc1;
        double vhat = m2->data[i] / bc2;
        theta.data[i] -= lr * mhat / (std::sqrt(vhat) + cfg_.adam_eps);
      }
    }
  };

  for (std::size_t l = 0; l < params.layer_count(); ++l) {
    update(params.weights[l], weight_grads[l], w_m1_[l],
           cfg_.kind == OptimizerKind::Adam ? &w_m2_[l] : nullptr);
    update(params.biases[l], bias_grads[l], b_m1_[l],
           cfg_.kind == OptimizerKind::Adam ? &b_m2_[l] : nullptr);
  }
}

namespace {

constexpr char kCheckpointMagic[] = "LPFORGE01";
constexpr std::size_t kMagicLen = 9;

void write_u32(std::ofstream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t read_u32(std::ifstream& is) {
  std::uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!is) throw std::runtime_error("checkpoint: truncated header");
  return v;
}

}  // namespace

void save_checkpoint(const ModelParams& params, const std::string& path) {
  params.check_chain();
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("checkpoint: cannot open for write: " + path);
  os.write(kCheckpointMagic, kMagicLen);
  std::uint8_t act = params.activation == Activation::Relu ? 0 : 1;
  os.write(reinterpret_cast<const char*>(&act), 1);
  write_u32(os, static_cast<std::uint32_t>(params.layer_count()));
  for (std::size_t l = 0; l < params.layer_count(); ++l) {
    write_u32(os, static_cast<std::uint32_t>(params.weights[l].rows()));
    write_u32(os, static_cast<std::uint32_t>(params.weights[l].cols()));
  }
  for (std::size_t l = 0; l < params.layer_count(); ++l) {
    const auto& w = params.weights[l].data;
    const auto& b = params.biases[l].data;
    os.write(reinterpret_cast<const char*>(w.data()),
             static_cast<std::streamsize>(w.size() * sizeof(double)));
    os.write(reinterpret_cast<const char*>(b.data()),
             static_cast<std::streamsize>(b.size() * sizeof(double)));
  }
  if (!os) throw std::runtime_error("checkpoint: write failed: " + path);
}

ModelParams load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open: " + path);
  char magic[kMagicLen];
  is.read(magic, kMagicLen);
  if (!is || std::memcmp(magic, kCheckpointMagic, kMagicLen) != 0)
    throw std::runtime_error("checkpoint: bad magic");
  std::uint8_t act = 0;
  is.read(reinterpret_cast<char*>(&act), 1);
  if (!is || act > 1) throw std::runtime_error("checkpoint: bad activation tag");
  std::uint32_t layers = read_u32(is);
  ModelParams p;
  p.activation = act == 0 ? Activation::Relu : Activation::GeluApprox;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> dims;
  for (std::uint32_t l = 0; l < layers; ++l) {
    std::uint32_t out = read_u32(is);
    std::uint32_t in = read_u32(is);
    dims.emplace_back(out, in);
  }
  for (auto [out, in] : dims) {
    Tensor w({out, in});
    Tensor b({out});
    is.read(reinterpret_cast<char*>(w.data.data()),
            static_cast<std::streamsize>(w.data.size() * sizeof(double)));
    is.read(reinterpret_cast<char*>(b.data.data()),
            static_cast<std::streamsize>(b.data.size() * sizeof(double)));
    if (!is) throw std::runtime_error("checkpoint: truncated payload");
    p.weights.push_back(std::move(w));
    p.biases.push_back(std::move(b));
  }
  p.check_chain();
  return p;
}

}  // namespace lpforge::model
