#include "lpforge/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "lpforge/concentration.hpp"
#include "lpforge/dataset.hpp"
#include "lpforge/model.hpp"
#include "lpforge/records_io.hpp"
#include "lpforge/svg_plot.hpp"
#include "lpforge/training.hpp"
#include "lpforge/verify.hpp"
#include "lpforge/version.hpp"

namespace lpforge::cli {

namespace {

using nlohmann::json;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void check_keys(const json& j, const char* ctx, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(std::string(ctx) + ": expected a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = std::any_of(allowed.begin(), allowed.end(),
                             [&](const char* k) { return it.key() == k; });
    if (!known) throw ConfigError(std::string("unknown key '") + it.key() + "' in " + ctx);
  }
}

json load_json_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    is >> j;
  } catch (const std::exception& e) {
    throw ConfigError("invalid JSON in " + path + ": " + e.what());
  }
  return j;
}

// ---- dataset description ----------------------------------------------------

struct DatasetSource {
  std::optional<std::string> path;
  data::SyntheticKind kind = data::SyntheticKind::GaussBlobs;
  std::size_t d = 64;
  int classes = 2;
  std::size_t n_per_class = 256;
  std::uint64_t seed = 1;
  std::size_t sparse_k = 4;

  data::Dataset load() const {
    if (path) return data::load_dataset(*path);
    return data::make_synthetic(kind, d, classes, n_per_class, seed, sparse_k);
  }
};

DatasetSource parse_dataset(const json& j) {
  DatasetSource src;
  if (j.contains("path")) {
    check_keys(j, "dataset", {"path"});
    src.path = j.at("path").get<std::string>();
    return src;
  }
  check_keys(j, "dataset", {"kind", "d", "classes", "n_per_class", "seed", "k"});
  src.kind = data::synthetic_kind_from_name(j.at("kind").get<std::string>());
  src.d = j.at("d").get<std::size_t>();
  src.classes = j.at("classes").get<int>();
  src.n_per_class = j.at("n_per_class").get<std::size_t>();
  src.seed = j.value("seed", std::uint64_t{1});
  src.sparse_k = j.value("k", std::size_t{4});
  return src;
}

json dataset_to_json(const DatasetSource& src) {
  json j;
  if (src.path) {
    j["path"] = *src.path;
    return j;
  }
  j["kind"] = data::synthetic_kind_name(src.kind);
  j["d"] = src.d;
  j["classes"] = src.classes;
  j["n_per_class"] = src.n_per_class;
  j["seed"] = src.seed;
  j["k"] = src.sparse_k;
  return j;
}

// ---- perturb / adapt / optimizer blocks --------------------------------------

NormParam parse_norm(const json& v, const char* ctx) {
  if (v.is_string()) {
    if (v.get<std::string>() == "inf") return NormParam::inf();
    throw ConfigError(std::string(ctx) + ": norm must be a number >= 2 or \"inf\"");
  }
  return NormParam::finite(v.get<double>());
}

json norm_to_json(const NormParam& n) {
  if (n.is_inf()) return json("inf");
  return json(n.p());
}

perturb::PerturbSpec parse_perturb(const json& j) {
  check_keys(j, "perturb", {"epsilon", "norm", "soften", "noise_mode", "clip"});
  perturb::PerturbSpec s;
  s.epsilon = j.at("epsilon").get<double>();
  s.norm = parse_norm(j.at("norm"), "perturb");
  s.soften = j.value("soften", 1e-12);
  std::string nm = j.value("noise_mode", std::string("none"));
  if (nm == "none")
    s.noise_mode = perturb::NoiseMode::None;
  else if (nm == "augment_input")
    s.noise_mode = perturb::NoiseMode::AugmentInput;
  else if (nm == "init_boundary")
    s.noise_mode = perturb::NoiseMode::InitBoundary;
  else if (nm == "both")
    s.noise_mode = perturb::NoiseMode::Both;
  else
    throw ConfigError("perturb.noise_mode: unknown value '" + nm + "'");
  if (j.contains("clip") && !j.at("clip").is_null()) {
    auto arr = j.at("clip");
    if (!arr.is_array() || arr.size() != 2) throw ConfigError("perturb.clip: expected [lo, hi]");
    s.clip_domain = {{arr[0].get<double>(), arr[1].get<double>()}};
  }
  s.validate();
  return s;
}

json perturb_to_json(const perturb::PerturbSpec& s) {
  json j;
  j["epsilon"] = s.epsilon;
  j["norm"] = norm_to_json(s.norm);
  j["soften"] = s.soften;
  switch (s.noise_mode) {
    case perturb::NoiseMode::None: j["noise_mode"] = "none"; break;
    case perturb::NoiseMode::AugmentInput: j["noise_mode"] = "augment_input"; break;
    case perturb::NoiseMode::InitBoundary: j["noise_mode"] = "init_boundary"; break;
    case perturb::NoiseMode::Both: j["noise_mode"] = "both"; break;
  }
  if (s.clip_domain)
    j["clip"] = json::array({(*s.clip_domain)[0], (*s.clip_domain)[1]});
  else
    j["clip"] = nullptr;
  return j;
}

concentration::AdaptPolicy parse_adapt(const json& j) {
  check_keys(j, "adapt", {"alpha", "beta", "q_min", "q_max", "soften"});
  concentration::AdaptPolicy p;
  if (j.contains("alpha")) p.alpha = j.at("alpha").get<double>();
  if (j.contains("beta")) p.beta = j.at("beta").get<double>();
  p.q_min = j.value("q_min", 1.01);
  p.q_max = j.value("q_max", 2.0);
  p.soften = j.value("soften", 1e-12);
  p.validate();
  return p;
}

json adapt_to_json(const concentration::AdaptPolicy& p) {
  json j;
  if (p.alpha) j["alpha"] = *p.alpha;
  if (p.beta) j["beta"] = *p.beta;
  j["q_min"] = p.q_min;
  j["q_max"] = p.q_max;
  j["soften"] = p.soften;
  return j;
}

model::OptimizerConfig parse_optimizer(const json& j) {
  model::OptimizerConfig c;
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "adam") {
    check_keys(j, "optimizer", {"kind", "lr", "beta1", "beta2", "weight_decay", "adam_eps"});
    c.kind = model::OptimizerKind::Adam;
    c.lr_max = j.at("lr").get<double>();
    c.beta1 = j.value("beta1", 0.9);
    c.beta2 = j.value("beta2", 0.999);
    c.adam_eps = j.value("adam_eps", 1e-8);
    c.weight_decay = j.value("weight_decay", 0.0);
  } else if (kind == "sgd_cosine") {
    check_keys(j, "optimizer",
               {"kind", "lr_max", "lr_min", "momentum", "weight_decay", "total_epochs"});
    c.kind = model::OptimizerKind::SgdMomentumCosine;
    c.lr_max = j.at("lr_max").get<double>();
    c.lr_min = j.value("lr_min", 0.0);
    c.momentum = j.value("momentum", 0.9);
    c.weight_decay = j.value("weight_decay", 0.0);
    c.total_epochs = j.value("total_epochs", 0);  // 0: filled from epochs
  } else {
    throw ConfigError("optimizer.kind must be 'adam' or 'sgd_cosine'");
  }
  return c;
}

json optimizer_to_json(const model::OptimizerConfig& c) {
  json j;
  if (c.kind == model::OptimizerKind::Adam) {
    j["kind"] = "adam";
    j["lr"] = c.lr_max;
    j["beta1"] = c.beta1;
    j["beta2"] = c.beta2;
    j["adam_eps"] = c.adam_eps;
    j["weight_decay"] = c.weight_decay;
  } else {
    j["kind"] = "sgd_cosine";
    j["lr_max"] = c.lr_max;
    j["lr_min"] = c.lr_min;
    j["momentum"] = c.momentum;
    j["weight_decay"] = c.weight_decay;
    j["total_epochs"] = c.total_epochs;
  }
  return j;
}

// ---- full train run config ----------------------------------------------------

struct RunConfig {
  train::TrainConfig tc;
  DatasetSource dataset;
  int eval_steps = 20;
  int eval_restarts = 2;
  double eval_eps_l2 = 0.0;
};

RunConfig parse_run_config(const json& j) {
  check_keys(j, "config",
             {"method", "seed", "epochs", "batch_size", "eval_every", "model", "optimizer",
              "perturb", "adapt", "adapt_cadence", "eval_attacks", "dataset"});
  RunConfig rc;
  rc.tc.method = train::method_from_name(j.at("method").get<std::string>());
  rc.tc.seed = j.value("seed", std::uint64_t{1});
  rc.tc.epochs = j.at("epochs").get<int>();
  rc.tc.batch_size = j.value("batch_size", 128);
  rc.tc.eval_every = j.value("eval_every", 1);

  if (j.contains("model")) {
    const json& m = j.at("model");
    check_keys(m, "model", {"hidden", "activation", "dropout", "attack_grad_uses_dropout"});
    if (m.contains("hidden")) rc.tc.hidden = m.at("hidden").get<std::vector<std::size_t>>();
    std::string act = m.value("activation", std::string("relu"));
    if (act == "relu")
      rc.tc.activation = model::Activation::Relu;
    else if (act == "gelu")
      rc.tc.activation = model::Activation::GeluApprox;
    else
      throw ConfigError("model.activation must be 'relu' or 'gelu'");
    rc.tc.dropout = m.value("dropout", 0.0);
    rc.tc.attack_grad_uses_dropout = m.value("attack_grad_uses_dropout", false);
  }

  rc.tc.optimizer = parse_optimizer(j.at("optimizer"));
  if (rc.tc.optimizer.kind == model::OptimizerKind::SgdMomentumCosine &&
      rc.tc.optimizer.total_epochs == 0)
    rc.tc.optimizer.total_epochs = rc.tc.epochs;

  rc.tc.perturb = parse_perturb(j.at("perturb"));
  if (j.contains("adapt") && !j.at("adapt").is_null()) rc.tc.adapt = parse_adapt(j.at("adapt"));

  std::string cad = j.value("adapt_cadence", std::string("batch"));
  if (cad == "batch")
    rc.tc.cadence = train::AdaptCadence::PerBatch;
  else if (cad == "epoch")
    rc.tc.cadence = train::AdaptCadence::PerEpoch;
  else
    throw ConfigError("adapt_cadence must be 'batch' or 'epoch'");

  if (j.contains("eval_attacks")) {
    const json& e = j.at("eval_attacks");
    check_keys(e, "eval_attacks", {"steps", "restarts", "eps_l2"});
    rc.eval_steps = e.value("steps", 20);
    rc.eval_restarts = e.value("restarts", 2);
    rc.eval_eps_l2 = e.value("eps_l2", 0.0);
  }
  rc.tc.eval_attacks = train::standard_eval_attacks(rc.tc.perturb.epsilon, rc.eval_steps,
                                                    rc.eval_restarts, rc.eval_eps_l2);
  if (rc.tc.perturb.clip_domain)
    for (auto& a : rc.tc.eval_attacks) a.clip_domain = rc.tc.perturb.clip_domain;

  rc.dataset = parse_dataset(j.at("dataset"));
  rc.tc.validate();
  return rc;
}

json run_config_to_json(const RunConfig& rc) {
  json j;
  j["method"] = train::method_name(rc.tc.method);
  j["seed"] = rc.tc.seed;
  j["epochs"] = rc.tc.epochs;
  j["batch_size"] = rc.tc.batch_size;
  j["eval_every"] = rc.tc.eval_every;
  json m;
  m["hidden"] = rc.tc.hidden;
  m["activation"] = rc.tc.activation == model::Activation::Relu ? "relu" : "gelu";
  m["dropout"] = rc.tc.dropout;
  m["attack_grad_uses_dropout"] = rc.tc.attack_grad_uses_dropout;
  j["model"] = m;
  j["optimizer"] = optimizer_to_json(rc.tc.optimizer);
  j["perturb"] = perturb_to_json(rc.tc.perturb);
  if (rc.tc.adapt) j["adapt"] = adapt_to_json(*rc.tc.adapt);
  j["adapt_cadence"] = rc.tc.cadence == train::AdaptCadence::PerBatch ? "batch" : "epoch";
  json e;
  e["steps"] = rc.eval_steps;
  e["restarts"] = rc.eval_restarts;
  e["eps_l2"] = rc.eval_eps_l2;
  j["eval_attacks"] = e;
  j["dataset"] = dataset_to_json(rc.dataset);
  return j;
}

// ---- subcommand bodies ----------------------------------------------------------

int cmd_train(const std::string& config_path, const std::string& out_dir) {
  if (!std::filesystem::exists(config_path)) {
    std::cerr << "error: config file not found: " << config_path << "\n";
    return 2;
  }
  RunConfig rc = parse_run_config(load_json_file(config_path));
  std::filesystem::create_directories(out_dir);

  io::RunManifest manifest;
  manifest.config_snapshot_json = run_config_to_json(rc).dump();
  manifest.seed = rc.tc.seed;
  manifest.code_version = kVersionString;
  manifest.started_utc = io::utc_timestamp_now();

  data::Dataset ds = rc.dataset.load();
  train::TrainResult result = train::train(rc.tc, ds);

  std::string csv_path = out_dir + "/records.csv";
  std::string ckpt_path = out_dir + "/model.ckpt";
  std::string manifest_path = out_dir + "/manifest.json";

  if (!result.records.empty()) io::write_records_csv(result.records, csv_path);
  model::save_checkpoint(result.params, ckpt_path);

  manifest.finished_utc = io::utc_timestamp_now();
  if (!result.records.empty()) manifest.outputs.push_back(csv_path);
  manifest.outputs.push_back(ckpt_path);
  manifest.outputs.push_back(manifest_path);
  io::write_manifest(manifest, manifest_path);

  if (result.aborted_nan) {
    std::cerr << "training aborted: divergent (NaN) loss; last valid records kept\n";
    return 1;
  }
  std::cout << "trained " << train::method_name(rc.tc.method) << " for " << rc.tc.epochs
            << " epochs; " << result.records.size() << " records -> " << csv_path << "\n";
  if (!result.records.empty()) {
    const auto& last = result.records.back();
    std::printf("final: clean %.4f fgsm %.4f pgd_linf %.4f pgd_l2 %.4f\n", last.clean_acc,
                last.fgsm_acc, last.pgd_linf_acc, last.pgd_l2_acc);
    auto co = train::detect_co(result.records);
    if (co)
      std::printf("catastrophic overfitting detected at epoch %d (pgd drop %.3f)\n",
                  co->epoch_detected, co->pgd_drop);
  }
  return 0;
}

perturb::AttackSpec parse_attack(const json& j) {
  check_keys(j, "attack",
             {"name", "steps", "restarts", "step_size", "norm", "epsilon", "clip"});
  perturb::AttackSpec a;
  a.name = j.at("name").get<std::string>();
  a.steps = j.value("steps", 20);
  a.restarts = j.value("restarts", 2);
  a.step_size = j.value("step_size", 0.0);
  a.norm = parse_norm(j.at("norm"), "attack");
  a.epsilon = j.at("epsilon").get<double>();
  if (j.contains("clip") && !j.at("clip").is_null()) {
    auto arr = j.at("clip");
    a.clip_domain = {{arr[0].get<double>(), arr[1].get<double>()}};
  }
  a.validate();
  return a;
}

int cmd_attack(const std::string& ckpt_path, const std::string& ds_path, double epsilon,
               int steps, int restarts, const std::string& attacks_path,
               const std::string& out_path, std::uint64_t seed) {
  model::ModelParams params = model::load_checkpoint(ckpt_path);
  data::Dataset ds = data::load_dataset(ds_path);

  std::vector<perturb::AttackSpec> attacks;
  if (!attacks_path.empty()) {
    json j = load_json_file(attacks_path);
    if (!j.is_array()) throw ConfigError("attacks file: expected a JSON array");
    for (const auto& a : j) attacks.push_back(parse_attack(a));
  } else {
    attacks = train::standard_eval_attacks(epsilon, steps, restarts);
  }

  std::map<std::string, double> acc = train::evaluate(params, ds.test, attacks, seed);
  json out(acc);
  std::string text = out.dump(2);
  if (!out_path.empty()) {
    std::ofstream os(out_path);
    os << text << "\n";
  }
  std::cout << text << "\n";
  return 0;
}

int cmd_metrics(const std::string& grads_path, const std::string& ckpt_path,
                const std::string& ds_path, double beta, double alpha, bool use_alpha,
                double q_min, double q_max, double soften, std::size_t limit) {
  concentration::AdaptPolicy policy =
      use_alpha ? concentration::AdaptPolicy::with_alpha(alpha, q_min, q_max, soften)
                : concentration::AdaptPolicy::with_beta(beta, q_min, q_max, soften);

  auto emit = [&](const GradVector& g) {
    std::cout << concentration::report_for(g, policy).to_json_string() << "\n";
  };

  if (!grads_path.empty()) {
    std::ifstream is(grads_path);
    if (!is) {
      std::cerr << "error: cannot open gradient dump: " << grads_path << "\n";
      return 2;
    }
    std::string line;
    std::size_t count = 0;
    while (std::getline(is, line) && (limit == 0 || count < limit)) {
      std::istringstream ls(line);
      std::vector<double> vals;
      double v;
      while (ls >> v) vals.push_back(v);
      if (vals.empty()) continue;
      emit(GradVector(std::move(vals)));
      ++count;
    }
    return 0;
  }

  if (ckpt_path.empty() || ds_path.empty()) {
    std::cerr << "error: metrics needs either --grads or both --checkpoint and --dataset\n";
    return 2;
  }
  model::ModelParams params = model::load_checkpoint(ckpt_path);
  data::Dataset ds = data::load_dataset(ds_path);
  std::size_t n = ds.test.size();
  if (limit > 0) n = std::min(n, limit);
  Tensor x({n, ds.dim()});
  std::copy(ds.test.x.data.begin(), ds.test.x.data.begin() + static_cast<long>(n * ds.dim()),
            x.data.begin());
  std::vector<int> y(ds.test.y.begin(), ds.test.y.begin() + static_cast<long>(n));
  model::LossGrads lg = model::xent_loss_and_grads(params, x, y);
  for (std::size_t i = 0; i < n; ++i) emit(lg.input_grads[i]);
  return 0;
}

int cmd_verify(const std::vector<std::string>& suites, const std::string& inject) {
  verify::Fault fault = verify::Fault::None;
  if (!inject.empty()) {
    auto f = verify::fault_from_name(inject);
    if (!f) {
      std::cerr << "error: unknown fault '" << inject << "'\n";
      return 2;
    }
    fault = *f;
  }

  std::vector<std::string> to_run = suites.empty() ? verify::suite_names() : suites;
  for (const auto& s : to_run) {
    auto known = verify::suite_names();
    if (std::find(known.begin(), known.end(), s) == known.end()) {
      std::cerr << "error: unknown suite '" << s << "'\n";
      return 2;
    }
  }

  bool all_ok = true;
  std::printf("%-12s %-6s %8s  %s\n", "suite", "status", "time", "detail");
  for (const auto& name : to_run) {
    verify::SuiteResult r = verify::run_suite(name, fault);
    all_ok = all_ok && r.passed;
    std::printf("%-12s %-6s %7.2fs  %s\n", r.name.c_str(), r.passed ? "pass" : "FAIL", r.seconds,
                r.detail.c_str());
  }
  std::printf("%s\n", all_ok ? "all suites passed" : "VERIFICATION FAILED");
  return all_ok ? 0 : 1;
}

int cmd_dataset(const std::string& kind, std::size_t d, int classes, std::size_t n_per_class,
                std::uint64_t seed, std::size_t k, const std::string& out) {
  data::Dataset ds =
      data::make_synthetic(data::synthetic_kind_from_name(kind), d, classes, n_per_class, seed, k);
  data::save_dataset(ds, out);
  std::cout << "wrote " << ds.name << " dataset: train " << ds.train.size() << ", test "
            << ds.test.size() << ", d " << ds.dim() << " -> " << out << "\n";
  return 0;
}

int cmd_plot(const std::string& records_path, const std::string& out) {
  auto records = io::read_records_csv(records_path);
  io::write_records_svg(records, out);
  std::cout << "wrote " << out << " (" << records.size() << " records)\n";
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"lp-norm adversarial attack library and training harness"};
  app.set_version_flag("--version", std::string(kVersionString));
  app.require_subcommand(1);

  // train
  std::string config_path, out_dir = ".";
  auto* train_cmd = app.add_subcommand("train", "run a training config");
  train_cmd->add_option("--config", config_path, "JSON config file")->required();
  train_cmd->add_option("--out-dir", out_dir, "output directory");

  // attack
  std::string ckpt_path, ds_path, attacks_path, attack_out;
  double atk_eps = 8.0 / 255.0;
  int atk_steps = 20, atk_restarts = 2;
  std::uint64_t atk_seed = 1;
  auto* attack_cmd = app.add_subcommand("attack", "evaluate a checkpoint under attacks");
  attack_cmd->add_option("--checkpoint", ckpt_path, "model checkpoint")->required();
  attack_cmd->add_option("--dataset", ds_path, "dataset binary")->required();
  attack_cmd->add_option("--epsilon", atk_eps, "l-inf radius for the standard attacks");
  attack_cmd->add_option("--steps", atk_steps, "PGD steps");
  attack_cmd->add_option("--restarts", atk_restarts, "PGD restarts");
  attack_cmd->add_option("--attacks", attacks_path, "JSON list of attack specs");
  attack_cmd->add_option("--out", attack_out, "write the accuracy JSON here too");
  attack_cmd->add_option("--seed", atk_seed, "attack RNG seed");

  // metrics
  std::string grads_path, m_ckpt, m_ds;
  double m_beta = 0.01, m_alpha = 0.0, m_qmin = 1.01, m_qmax = 2.0, m_soften = 1e-12;
  bool m_use_alpha = false;
  std::size_t m_limit = 0;
  auto* metrics_cmd = app.add_subcommand("metrics", "emit concentration reports as JSON lines");
  metrics_cmd->add_option("--grads", grads_path, "text file, one gradient per line");
  metrics_cmd->add_option("--checkpoint", m_ckpt, "model checkpoint");
  metrics_cmd->add_option("--dataset", m_ds, "dataset binary");
  metrics_cmd->add_option("--beta", m_beta, "angle-shrink parameter");
  metrics_cmd->add_option("--alpha", m_alpha, "cosine-inflation parameter")
      ->each([&](const std::string&) { m_use_alpha = true; });
  metrics_cmd->add_option("--q-min", m_qmin, "lower q clamp");
  metrics_cmd->add_option("--q-max", m_qmax, "upper q clamp");
  metrics_cmd->add_option("--soften", m_soften, "entropy softening");
  metrics_cmd->add_option("--limit", m_limit, "stop after this many samples");

  // verify
  std::vector<std::string> suites;
  std::string inject;
  auto* verify_cmd = app.add_subcommand("verify", "run the oracle suites");
  verify_cmd->add_option("--suite", suites, "suite name (repeatable; default all)");
  verify_cmd->add_option("--inject", inject,
                         "testing aid: run with a deliberately broken formula");

  // dataset
  std::string ds_kind = "gauss_blobs", ds_out;
  std::size_t ds_d = 64, ds_npc = 256, ds_k = 4;
  int ds_classes = 2;
  std::uint64_t ds_seed = 1;
  auto* dataset_cmd = app.add_subcommand("dataset", "emit a synthetic dataset binary");
  dataset_cmd->add_option("--kind", ds_kind, "gauss_blobs | two_spirals | sparse_signal");
  dataset_cmd->add_option("--d", ds_d, "feature dimension");
  dataset_cmd->add_option("--classes", ds_classes, "class count");
  dataset_cmd->add_option("--n-per-class", ds_npc, "training samples per class");
  dataset_cmd->add_option("--seed", ds_seed, "generator seed");
  dataset_cmd->add_option("--k", ds_k, "informative coordinates (sparse_signal)");
  dataset_cmd->add_option("--out", ds_out, "output path")->required();

  // plot
  std::string plot_records, plot_out;
  auto* plot_cmd = app.add_subcommand("plot", "render records CSV as an SVG chart");
  plot_cmd->add_option("--records", plot_records, "records CSV")->required();
  plot_cmd->add_option("--out", plot_out, "output SVG path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(config_path, out_dir);
    if (attack_cmd->parsed())
      return cmd_attack(ckpt_path, ds_path, atk_eps, atk_steps, atk_restarts, attacks_path,
                        attack_out, atk_seed);
    if (metrics_cmd->parsed())
      return cmd_metrics(grads_path, m_ckpt, m_ds, m_beta, m_alpha, m_use_alpha, m_qmin, m_qmax,
                         m_soften, m_limit);
    if (verify_cmd->parsed()) return cmd_verify(suites, inject);
    if (dataset_cmd->parsed())
      return cmd_dataset(ds_kind, ds_d, ds_classes, ds_npc, ds_seed, ds_k, ds_out);
    if (plot_cmd->parsed()) return cmd_plot(plot_records, plot_out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace lpforge::cli
