#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lpforge/rng.hpp"
#include "lpforge/tensor.hpp"

namespace lpforge::model {

enum class Activation { Relu, GeluApprox };

/// Feed-forward classifier parameters. Layer i maps in_i -> out_i with
/// out_i == in_{i+1}; the last layer emits logits.
struct ModelParams {
  std::vector<Tensor> weights;  // (out x in), row-major
  std::vector<Tensor> biases;   // (out)
  Activation activation = Activation::Relu;

  std::size_t layer_count() const { return weights.size(); }
  std::size_t input_dim() const;
  std::size_t output_dim() const;
  std::size_t param_count() const;
  void check_chain() const;
};

/// Kaiming-uniform fan-in initialisation, deterministic per seed.
ModelParams make_mlp(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                     std::size_t classes, Activation activation, std::uint64_t seed);

/// Optional inverted-dropout masks on hidden activations, one mask per hidden
/// layer per sample. Generated by the training loop; absent means identity.
struct DropoutMasks {
  double rate = 0.0;
  // masks[layer] is (batch x out_dim) of {0, 1/(1-rate)} factors
  std::vector<Tensor> masks;
};

DropoutMasks make_dropout_masks(const ModelParams& params, std::size_t batch, double rate,
                                RngStream& rng);

/// Logits for a (batch x d) input; a 1-D input is treated as batch 1.
/// Deterministic: fixed reduction order, no hidden state.
Tensor forward_logits(const ModelParams& params, const Tensor& x,
                      const DropoutMasks* dropout = nullptr);

std::vector<int> predict(const ModelParams& params, const Tensor& x);

struct LossGrads {
  double loss = 0.0;                    // batch mean
  std::vector<double> per_sample_loss;  // individual cross-entropies
  std::vector<GradVector> input_grads;  // per sample, NOT batch-averaged
  std::vector<Tensor> weight_grads;     // gradients of the batch-mean loss
  std::vector<Tensor> bias_grads;
};

/// Cross-entropy of integer labels with one reverse pass producing per-sample
/// input gradients and batch-mean parameter gradients.
LossGrads xent_loss_and_grads(const ModelParams& params, const Tensor& x,
                              const std::vector<int>& labels,
                              const DropoutMasks* dropout = nullptr);

/// Forward-only convenience: batch-mean loss and per-sample losses.
std::pair<double, std::vector<double>> xent_loss(const ModelParams& params, const Tensor& x,
                                                 const std::vector<int>& labels);

enum class OptimizerKind { SgdMomentumCosine, Adam };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::Adam;
  double lr_max = 1e-3;
  double lr_min = 0.0;      // cosine floor (SGD schedule)
  int total_epochs = 30;    // cosine horizon
  double momentum = 0.9;    // SGD
  double beta1 = 0.9;       // Adam
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double weight_decay = 0.0;
};

/// lr(t) = lr_min + (lr_max - lr_min) (1 + cos(pi t / T)) / 2, t in [0, T].
double cosine_lr(const OptimizerConfig& cfg, double t);

class OptimizerState {
 public:
  OptimizerState(OptimizerConfig cfg, const ModelParams& params);

  /// Schedule position in epochs (fractional allowed). SGD only; Adam runs at
  /// the constant lr_max.
  void set_schedule_time(double t);

  double current_lr() const;
  int step_count() const { return step_count_; }
  const OptimizerConfig& config() const { return cfg_; }

  void step(ModelParams& params, const std::vector<Tensor>& weight_grads,
            const std::vector<Tensor>& bias_grads);

 private:
  OptimizerConfig cfg_;
  double schedule_time_ = 0.0;
  int step_count_ = 0;
  std::vector<Tensor> w_m1_, b_m1_;  // momentum / first moment
  std::vector<Tensor> w_m2_, b_m2_;  // Adam second moment
};

/// Checkpoint: "LPFORGE01" magic, activation byte, shape table, little-endian
/// float64 payload. Round-trips bit-exactly.
void save_checkpoint(const ModelParams& params, const std::string& path);
ModelParams load_checkpoint(const std::string& path);

}  // namespace lpforge::model
