#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lpforge/concentration.hpp"
#include "lpforge/dataset.hpp"
#include "lpforge/model.hpp"
#include "lpforge/perturb.hpp"

namespace lpforge::train {

enum class Method { Clean, Fgsm, RsFgsm, LpFixed, LpAdaptive };

Method method_from_name(const std::string& name);
std::string method_name(Method m);

/// Cadence of the adaptive-norm update: every minibatch (default) or once per
/// epoch using the previous epoch's median.
enum class AdaptCadence { PerBatch, PerEpoch };

struct TrainConfig {
  Method method = Method::LpAdaptive;
  int epochs = 30;
  int batch_size = 128;
  int eval_every = 1;
  std::uint64_t seed = 1;

  std::vector<std::size_t> hidden{256, 256};
  model::Activation activation = model::Activation::Relu;
  double dropout = 0.0;
  bool attack_grad_uses_dropout = false;

  model::OptimizerConfig optimizer;
  perturb::PerturbSpec perturb;
  std::optional<concentration::AdaptPolicy> adapt;
  AdaptCadence cadence = AdaptCadence::PerBatch;

  std::vector<perturb::AttackSpec> eval_attacks;

  void validate() const;
};

/// Evaluation attacks used by the CSV columns: exact FGSM plus PGD under
/// l-inf and l2. The l2 radius defaults to 4x the l-inf radius.
std::vector<perturb::AttackSpec> standard_eval_attacks(double eps_linf, int steps = 20,
                                                       int restarts = 2, double eps_l2 = 0.0);

/// One CSV row: accuracies on the held-out split plus epoch-mean gradient
/// concentration telemetry. p_used is +infinity for the l-inf sentinel.
struct TrainRecord {
  int epoch = 0;
  double clean_acc = 0.0;
  double fgsm_acc = 0.0;
  double pgd_linf_acc = 0.0;
  double pgd_l2_acc = 0.0;
  double mean_grad_l2 = 0.0;
  double mean_pr = 0.0;
  double mean_pr1 = 0.0;
  double mean_delta_h = 0.0;
  double mean_cos2inf = 0.0;
  double median_q_star = 0.0;
  double p_used = 0.0;
  double lr = 0.0;
};

struct CoEvent {
  int epoch_detected = 0;
  double pgd_drop = 0.0;        // peak-to-current PGD accuracy fall
  double fgsm_level = 0.0;      // FGSM accuracy at detection
  double pr1_drop_ratio = 0.0;  // mean_pr1 now / mean_pr1 at the peak record
};

struct TrainResult {
  model::ModelParams params;
  std::vector<TrainRecord> records;
  std::vector<double> epoch_losses;  // mean training loss per epoch
  bool aborted_nan = false;
};

/// Adversarial training per the one-step recipe: per-sample input gradients
/// at the (optionally noise-placed) clean batch drive both the crafted
/// perturbation and the concentration telemetry; the optimizer consumes the
/// gradient at the perturbed batch. Bit-deterministic for a fixed config.
TrainResult train(const TrainConfig& config, const data::Dataset& dataset);

/// Clean accuracy plus one robust accuracy per attack. A sample counts as
/// robust only if its clean prediction is correct and no attack candidate
/// (PGD restarts and the one-step point at the same radius) changes the
/// argmax.
std::map<std::string, double> evaluate(const model::ModelParams& params, const data::Split& split,
                                       const std::vector<perturb::AttackSpec>& attacks,
                                       std::uint64_t seed);

/// Fires when PGD accuracy falls from its running peak by >= drop_threshold
/// within `window` epochs while FGSM accuracy holds near its running mean.
std::optional<CoEvent> detect_co(const std::vector<TrainRecord>& records,
                                 double drop_threshold = 0.30, int window = 10);

}  // namespace lpforge::train
