#include "lpforge/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "lpforge/norms.hpp"
#include "lpforge/rng.hpp"

namespace lpforge::train {

Method method_from_name(const std::string& name) {
  if (name == "clean") return Method::Clean;
  if (name == "fgsm") return Method::Fgsm;
  if (name == "rs_fgsm") return Method::RsFgsm;
  if (name == "lp_fixed") return Method::LpFixed;
  if (name == "lp_adaptive") return Method::LpAdaptive;
  throw std::invalid_argument("unknown training method: " + name);
}

std::string method_name(Method m) {
  switch (m) {
    case Method::Clean: return "clean";
    case Method::Fgsm: return "fgsm";
    case Method::RsFgsm: return "rs_fgsm";
    case Method::LpFixed: return "lp_fixed";
    case Method::LpAdaptive: return "lp_adaptive";
  }
  return "?";
}

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
  if (eval_every < 1) throw std::invalid_argument("TrainConfig: eval_every must be >= 1");
  if ((method == Method::LpAdaptive) != adapt.has_value())
    throw std::invalid_argument(
        "TrainConfig: adaptive policy must be present exactly for method lp_adaptive");
  if (method == Method::Fgsm || method == Method::RsFgsm) {
    if (!perturb.norm.is_inf())
      throw std::invalid_argument("TrainConfig: fgsm/rs_fgsm require the l-inf norm");
  }
  perturb.validate();
  if (adapt) adapt->validate();
  for (const auto& a : eval_attacks) a.validate();
}

std::vector<perturb::AttackSpec> standard_eval_attacks(double eps_linf, int steps, int restarts,
                                                       double eps_l2) {
  if (eps_l2 <= 0.0) eps_l2 = 4.0 * eps_linf;
  perturb::AttackSpec fgsm_spec;
  fgsm_spec.name = "fgsm";
  fgsm_spec.steps = 1;
  fgsm_spec.restarts = 1;
  fgsm_spec.step_size = eps_linf;
  fgsm_spec.norm = NormParam::inf();
  fgsm_spec.epsilon = eps_linf;

  perturb::AttackSpec pgd_linf;
  pgd_linf.name = "pgd_linf";
  pgd_linf.steps = steps;
  pgd_linf.restarts = restarts;
  pgd_linf.norm = NormParam::inf();
  pgd_linf.epsilon = eps_linf;

  perturb::AttackSpec pgd_l2;
  pgd_l2.name = "pgd_l2";
  pgd_l2.steps = steps;
  pgd_l2.restarts = restarts;
  pgd_l2.norm = NormParam::finite(2.0);
  pgd_l2.epsilon = eps_l2;

  return {fgsm_spec, pgd_linf, pgd_l2};
}

namespace {

Tensor gather_rows(const Tensor& x, const std::vector<std::size_t>& idx, std::size_t from,
                   std::size_t count) {
  std::size_t d = x.cols();
  Tensor out({count, d});
  for (std::size_t i = 0; i < count; ++i) {
    const double* src = x.data.data() + idx[from + i] * d;
    std::copy(src, src + d, out.data.data() + i * d);
  }
  return out;
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void clip_rows_into_domain(Tensor& x, const std::optional<std::array<double, 2>>& domain) {
  if (!domain) return;
  for (double& v : x.data) v = std::clamp(v, (*domain)[0], (*domain)[1]);
}

// Batched PGD identical per sample to perturb::pgd_attack driven by the
// streams RngStream(seed, stream_name, sample_index).
std::vector<GradVector> batched_pgd(const model::ModelParams& params, const Tensor& x,
                                    const std::vector<int>& y, const perturb::AttackSpec& atk,
                                    std::uint64_t seed, const std::string& stream_name) {
  std::size_t n = x.rows(), d = x.cols();
  double eps = atk.epsilon;
  double mu = atk.effective_step();

  std::vector<RngStream> streams;
  streams.reserve(n);
  for (std::size_t i = 0; i < n; ++i) streams.emplace_back(seed, stream_name, i);

  std::vector<GradVector> best(n, GradVector(d));
  std::vector<double> best_loss(n, -std::numeric_limits<double>::infinity());

  Tensor delta({n, d});
  Tensor xadv({n, d});
  GradVector row(d);

  for (int r = 0; r < atk.restarts; ++r) {
    if (r == 0 && atk.zero_init_first_restart) {
      std::fill(delta.data.begin(), delta.data.end(), 0.0);
    } else {
      for (std::size_t i = 0; i < n; ++i) {
        double* dr = delta.data.data() + i * d;
        if (atk.norm.is_inf()) {
          for (std::size_t k = 0; k < d; ++k) dr[k] = streams[i].uniform(-eps, eps);
        } else {
          for (std::size_t k = 0; k < d; ++k) {
            row[k] = streams[i].uniform(-1.0, 1.0);
            dr[k] = row[k];
          }
          double nn = lp_norm(GradVector(std::vector<double>(dr, dr + d)), atk.norm);
          double radius = eps * std::pow(streams[i].uniform01(), 1.0 / static_cast<double>(d));
          if (nn > 0.0)
            for (std::size_t k = 0; k < d; ++k) dr[k] *= radius / nn;
        }
        if (atk.clip_domain) {
          auto [lo, hi] = *atk.clip_domain;
          const double* xr = x.data.data() + i * d;
          for (std::size_t k = 0; k < d; ++k) dr[k] = std::clamp(xr[k] + dr[k], lo, hi) - xr[k];
        }
      }
    }

    for (int k = 0; k < atk.steps; ++k) {
      for (std::size_t i = 0; i < x.numel(); ++i) xadv.data[i] = x.data[i] + delta.data[i];
      model::LossGrads lg = model::xent_loss_and_grads(params, xadv, y);
      for (std::size_t i = 0; i < n; ++i) {
        GradVector dir = perturb::pgd_step_direction(lg.input_grads[i], atk.norm);
        double* dr = delta.data.data() + i * d;
        for (std::size_t j = 0; j < d; ++j) dr[j] += mu * dir[j];
        GradVector drow(std::vector<double>(dr, dr + d));
        perturb::project_to_ball(drow, atk.norm, eps);
        if (atk.clip_domain) {
          auto [lo, hi] = *atk.clip_domain;
          const double* xr = x.data.data() + i * d;
          for (std::size_t j = 0; j < d; ++j)
            drow[j] = std::clamp(xr[j] + drow[j], lo, hi) - xr[j];
        }
        std::copy(drow.values.begin(), drow.values.end(), dr);
      }
    }

    for (std::size_t i = 0; i < x.numel(); ++i) xadv.data[i] = x.data[i] + delta.data[i];
    auto [mean_loss, per_sample] = model::xent_loss(params, xadv, y);
    (void)mean_loss;
    for (std::size_t i = 0; i < n; ++i) {
      if (per_sample[i] > best_loss[i]) {
        best_loss[i] = per_sample[i];
        const double* dr = delta.data.data() + i * d;
        std::copy(dr, dr + d, best[i].values.begin());
      }
    }
  }
  return best;
}

}  // namespace

std::map<std::string, double> evaluate(const model::ModelParams& params, const data::Split& split,
                                       const std::vector<perturb::AttackSpec>& attacks,
                                       std::uint64_t seed) {
  std::size_t n = split.size(), d = split.dim();
  if (n == 0) throw std::invalid_argument("evaluate: empty split");
  std::vector<int> clean_pred = model::predict(params, split.x);

  std::map<std::string, double> acc;
  std::size_t clean_correct = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (clean_pred[i] == split.y[i]) ++clean_correct;
  acc["clean"] = static_cast<double>(clean_correct) / static_cast<double>(n);

  // one-step candidates need per-sample clean-input gradients
  model::LossGrads clean_lg = model::xent_loss_and_grads(params, split.x, split.y);

  Tensor xadv({n, d});
  for (const auto& atk : attacks) {
    atk.validate();
    std::vector<char> robust(n, 0);
    for (std::size_t i = 0; i < n; ++i) robust[i] = clean_pred[i] == split.y[i];

    // candidate 1: the one-step point at the attack's own radius and norm
    {
      perturb::PerturbSpec one;
      one.epsilon = atk.epsilon;
      one.norm = atk.norm;
      one.soften = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        GradVector delta = perturb::lp_step(clean_lg.input_grads[i], one).delta;
        const double* xr = split.x.data.data() + i * d;
        double* ar = xadv.data.data() + i * d;
        for (std::size_t k = 0; k < d; ++k) ar[k] = xr[k] + delta[k];
      }
      if (atk.clip_domain) clip_rows_into_domain(xadv, atk.clip_domain);
      std::vector<int> pred = model::predict(params, xadv);
      for (std::size_t i = 0; i < n; ++i)
        if (pred[i] != clean_pred[i]) robust[i] = 0;
    }

    // candidate 2: the strongest PGD restart
    {
      std::vector<GradVector> deltas =
          batched_pgd(params, split.x, split.y, atk, seed, "pgd-eval-" + atk.name);
      for (std::size_t i = 0; i < n; ++i) {
        const double* xr = split.x.data.data() + i * d;
        double* ar = xadv.data.data() + i * d;
        for (std::size_t k = 0; k < d; ++k) ar[k] = xr[k] + deltas[i][k];
      }
      std::vector<int> pred = model::predict(params, xadv);
      for (std::size_t i = 0; i < n; ++i)
        if (pred[i] != clean_pred[i]) robust[i] = 0;
    }

    std::size_t count = 0;
    for (char r : robust) count += r;
    acc[atk.name] = static_cast<double>(count) / static_cast<double>(n);
  }
  return acc;
}

TrainResult train(const TrainConfig& config, const data::Dataset& dataset) {
  config.validate();
  dataset.validate();

  std::size_t n = dataset.train.size();
  std::size_t d = dataset.dim();
  std::size_t batch = static_cast<std::size_t>(config.batch_size);

  RngStream init_rng(config.seed, "init");
  model::ModelParams params = model::make_mlp(d, config.hidden, dataset.classes,
                                              config.activation, init_rng.next_u64());
  model::OptimizerState opt(config.optimizer, params);

  // telemetry policy: the configured one for adaptive runs, the default
  // beta = 0.01 barrier otherwise (statistics only, no effect on crafting)
  concentration::AdaptPolicy telem_policy =
      config.adapt ? *config.adapt : concentration::AdaptPolicy::with_beta(0.01);

  TrainResult result;
  double prev_epoch_median_q = telem_policy.q_max;  // PerEpoch cadence start

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  std::size_t num_batches = (n + batch - 1) / batch;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    // deterministic shuffle
    RngStream shuffle_rng(config.seed, "shuffle", static_cast<std::uint64_t>(epoch));
    for (std::size_t i = n; i > 1; --i) {
      std::size_t j = shuffle_rng.next_below(i);
      std::swap(order[i - 1], order[j]);
    }

    double sum_grad_l2 = 0.0, sum_pr = 0.0, sum_pr1 = 0.0, sum_dh = 0.0, sum_cos = 0.0;
    std::vector<double> epoch_qstars;
    epoch_qstars.reserve(n);
    double epoch_loss_sum = 0.0;
    std::size_t samples_seen = 0;

    for (std::size_t b = 0; b < num_batches; ++b) {
      std::size_t from = b * batch;
      std::size_t count = std::min(batch, n - from);
      Tensor x0 = gather_rows(dataset.train.x, order, from, count);
      std::vector<int> y(count);
      for (std::size_t i = 0; i < count; ++i) y[i] = dataset.train.y[order[from + i]];

      // noise placement (per-sample streams keyed by dataset index and epoch)
      Tensor x_grad_point = x0;  // where the crafting gradient is evaluated
      Tensor x_base = x0;        // what the perturbation is added to
      std::vector<GradVector> etas;
      bool lp_method = config.method == Method::LpFixed || config.method == Method::LpAdaptive;
      if (lp_method && config.perturb.noise_mode != perturb::NoiseMode::None) {
        for (std::size_t i = 0; i < count; ++i) {
          RngStream noise_rng(config.seed, "noise",
                              static_cast<std::uint64_t>(epoch) * n + order[from + i]);
          Tensor xi({d}, std::vector<double>(x0.data.begin() + static_cast<long>(i * d),
                                             x0.data.begin() + static_cast<long>((i + 1) * d)));
          perturb::NoisePlacement np = perturb::noise_placement(xi, config.perturb, noise_rng);
          for (std::size_t k = 0; k < d; ++k) {
            x_base.data[i * d + k] = np.x_used.data[k];
            x_grad_point.data[i * d + k] = np.x_used.data[k] + np.delta0[k];
          }
        }
      }
      if (config.method == Method::RsFgsm) {
        etas.resize(count, GradVector(d));
        for (std::size_t i = 0; i < count; ++i) {
          RngStream noise_rng(config.seed, "noise",
                              static_cast<std::uint64_t>(epoch) * n + order[from + i]);
          for (std::size_t k = 0; k < d; ++k) {
            etas[i][k] = noise_rng.uniform(-config.perturb.epsilon, config.perturb.epsilon);
            x_grad_point.data[i * d + k] = x0.data[i * d + k] + etas[i][k];
          }
        }
      }

      // crafting gradients; dropout stays off here unless explicitly enabled
      model::DropoutMasks craft_masks;
      const model::DropoutMasks* craft_mask_ptr = nullptr;
      RngStream dropout_rng(config.seed, "dropout",
                            static_cast<std::uint64_t>(epoch) * num_batches + b);
      if (config.dropout > 0.0 && config.attack_grad_uses_dropout) {
        craft_masks = model::make_dropout_masks(params, count, config.dropout, dropout_rng);
        craft_mask_ptr = &craft_masks;
      }
      model::LossGrads craft =
          model::xent_loss_and_grads(params, x_grad_point, y, craft_mask_ptr);

      // telemetry + adaptive statistics from the crafting gradients
      std::vector<double> batch_qstars;
      batch_qstars.reserve(count);
      for (std::size_t i = 0; i < count; ++i) {
        const GradVector& g = craft.input_grads[i];
        sum_grad_l2 += l2_norm(g);
        if (!g.all_zero()) {
          concentration::Selection sel = concentration::select_q(g, telem_policy);
          sum_pr += sel.report.pr;
          sum_pr1 += sel.report.pr1;
          sum_dh += sel.report.delta_h;
          sum_cos += sel.report.cos2inf;
          batch_qstars.push_back(sel.q_star);
          epoch_qstars.push_back(sel.q_star);
        } else {
          // degenerate gradient: fully delocalised defaults keep sums finite
          sum_pr += static_cast<double>(d);
          sum_pr1 += static_cast<double>(d);
          sum_cos += 1.0;
          batch_qstars.push_back(telem_policy.q_max);
          epoch_qstars.push_back(telem_policy.q_max);
        }
      }

      // craft the batch perturbation
      perturb::PerturbSpec spec = config.perturb;
      if (config.method == Method::LpAdaptive) {
        double q_used = config.cadence == AdaptCadence::PerBatch ? median_of(batch_qstars)
                                                                 : prev_epoch_median_q;
        spec.norm = NormParam::finite(q_used / (q_used - 1.0));
      }

      Tensor x_train = x_base;
      switch (config.method) {
        case Method::Clean:
          break;
        case Method::Fgsm:
          for (std::size_t i = 0; i < count; ++i) {
            GradVector delta = perturb::fgsm(craft.input_grads[i], spec.epsilon).delta;
            double* xr = x_train.data.data() + i * d;
            for (std::size_t k = 0; k < d; ++k) xr[k] += delta[k];
          }
          break;
        case Method::RsFgsm:
          for (std::size_t i = 0; i < count; ++i) {
            double* xr = x_train.data.data() + i * d;
            const GradVector& g = craft.input_grads[i];
            for (std::size_t k = 0; k < d; ++k) {
              double dk = std::clamp(etas[i][k] + spec.epsilon * sign(g[k]), -spec.epsilon,
                                     spec.epsilon);
              xr[k] += dk;
            }
          }
          break;
        case Method::LpFixed:
        case Method::LpAdaptive:
          for (std::size_t i = 0; i < count; ++i) {
            GradVector delta = perturb::lp_step(craft.input_grads[i], spec).delta;
            double* xr = x_train.data.data() + i * d;
            for (std::size_t k = 0; k < d; ++k) xr[k] += delta[k];
          }
          break;
      }
      clip_rows_into_domain(x_train, config.perturb.clip_domain);

      // parameter update at the perturbed batch
      model::DropoutMasks train_masks;
      const model::DropoutMasks* train_mask_ptr = nullptr;
      if (config.dropout > 0.0) {
        if (config.attack_grad_uses_dropout && craft_mask_ptr) {
          train_mask_ptr = craft_mask_ptr;  // one mask serves both passes
        } else {
          train_masks = model::make_dropout_masks(params, count, config.dropout, dropout_rng);
          train_mask_ptr = &train_masks;
        }
      }
      model::LossGrads lg = model::xent_loss_and_grads(params, x_train, y, train_mask_ptr);
      if (!std::isfinite(lg.loss)) {
        result.aborted_nan = true;
        result.params = params;
        return result;
      }
      epoch_loss_sum += lg.loss * static_cast<double>(count);
      samples_seen += count;

      opt.set_schedule_time(static_cast<double>(epoch) +
                            static_cast<double>(b) / static_cast<double>(num_batches));
      opt.step(params, lg.weight_grads, lg.bias_grads);
    }

    result.epoch_losses.push_back(epoch_loss_sum / static_cast<double>(samples_seen));
    double epoch_median_q = median_of(epoch_qstars);
    prev_epoch_median_q = epoch_median_q;

    if ((epoch + 1) % config.eval_every == 0) {
      TrainRecord rec;
      rec.epoch = epoch + 1;
      std::map<std::string, double> acc =
          evaluate(params, dataset.test, config.eval_attacks, config.seed);
      rec.clean_acc = acc.at("clean");
      rec.fgsm_acc = acc.count("fgsm") ? acc.at("fgsm") : 0.0;
      rec.pgd_linf_acc = acc.count("pgd_linf") ? acc.at("pgd_linf") : 0.0;
      rec.pgd_l2_acc = acc.count("pgd_l2") ? acc.at("pgd_l2") : 0.0;
      double dn = static_cast<double>(n);
      rec.mean_grad_l2 = sum_grad_l2 / dn;
      rec.mean_pr = sum_pr / dn;
      rec.mean_pr1 = sum_pr1 / dn;
      rec.mean_delta_h = sum_dh / dn;
      rec.mean_cos2inf = sum_cos / dn;
      rec.median_q_star = epoch_median_q;
      if (config.method == Method::LpAdaptive) {
        rec.p_used = epoch_median_q / (epoch_median_q - 1.0);
      } else if (config.perturb.norm.is_inf()) {
        rec.p_used = std::numeric_limits<double>::infinity();
      } else {
        rec.p_used = config.perturb.norm.p();
      }
      rec.lr = opt.current_lr();
      result.records.push_back(rec);
    }
  }

  result.params = std::move(params);
  return result;
}

std::optional<CoEvent> detect_co(const std::vector<TrainRecord>& records, double drop_threshold,
                                 int window) {
  if (records.size() < 2) return std::nullopt;
  double fgsm_sum = 0.0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    fgsm_sum += records[i].fgsm_acc;
    double fgsm_mean = fgsm_sum / static_cast<double>(i + 1);

    double peak = -1.0;
    double peak_pr1 = 0.0;
    for (std::size_t j = 0; j < i; ++j) {
      if (records[i].epoch - records[j].epoch > window) continue;
      if (records[j].pgd_linf_acc > peak) {
        peak = records[j].pgd_linf_acc;
        peak_pr1 = records[j].mean_pr1;
      }
    }
    if (peak < 0.0) continue;
    double drop = peak - records[i].pgd_linf_acc;
    if (drop >= drop_threshold && records[i].fgsm_acc >= fgsm_mean - 0.10) {
      CoEvent ev;
      ev.epoch_detected = records[i].epoch;
      ev.pgd_drop = drop;
      ev.fgsm_level = records[i].fgsm_acc;
      ev.pr1_drop_ratio = peak_pr1 > 0.0 ? records[i].mean_pr1 / peak_pr1 : 0.0;
      return ev;
    }
  }
  return std::nullopt;
}

}  // namespace lpforge::train
