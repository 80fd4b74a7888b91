#include "lpforge/records_io.hpp"

#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace lpforge::io {

namespace {

std::string fmt_f64(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

double parse_f64(const std::string& tok) {
  if (tok == "inf") return std::numeric_limits<double>::infinity();
  if (tok == "-inf") return -std::numeric_limits<double>::infinity();
  return std::stod(tok);
}

}  // namespace

std::string records_to_csv(const std::vector<train::TrainRecord>& records) {
  if (records.empty()) throw std::invalid_argument("records_to_csv: no records");
  std::ostringstream os;
  os << kRecordsHeader << "\n";
  for (const auto& r : records) {
    os << r.epoch << ',' << fmt_f64(r.clean_acc) << ',' << fmt_f64(r.fgsm_acc) << ','
       << fmt_f64(r.pgd_linf_acc) << ',' << fmt_f64(r.pgd_l2_acc) << ','
       << fmt_f64(r.mean_grad_l2) << ',' << fmt_f64(r.mean_pr) << ',' << fmt_f64(r.mean_pr1)
       << ',' << fmt_f64(r.mean_delta_h) << ',' << fmt_f64(r.mean_cos2inf) << ','
       << fmt_f64(r.median_q_star) << ',' << fmt_f64(r.p_used) << ',' << fmt_f64(r.lr) << "\n";
  }
  return os.str();
}

void write_records_csv(const std::vector<train::TrainRecord>& records, const std::string& path) {
  std::string text = records_to_csv(records);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("write_records_csv: cannot open " + path);
  os << text;
  if (!os) throw std::runtime_error("write_records_csv: write failed " + path);
}

std::vector<train::TrainRecord> parse_records_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("records csv: empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kRecordsHeader) throw std::runtime_error("records csv: unexpected header");

  std::vector<train::TrainRecord> out;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> tok;
    std::stringstream ls(line);
    std::string t;
    while (std::getline(ls, t, ',')) tok.push_back(t);
    if (tok.size() != 13) throw std::runtime_error("records csv: bad column count");
    train::TrainRecord r;
    r.epoch = std::stoi(tok[0]);
    r.clean_acc = parse_f64(tok[1]);
    r.fgsm_acc = parse_f64(tok[2]);
    r.pgd_linf_acc = parse_f64(tok[3]);
    r.pgd_l2_acc = parse_f64(tok[4]);
    r.mean_grad_l2 = parse_f64(tok[5]);
    r.mean_pr = parse_f64(tok[6]);
    r.mean_pr1 = parse_f64(tok[7]);
    r.mean_delta_h = parse_f64(tok[8]);
    r.mean_cos2inf = parse_f64(tok[9]);
    r.median_q_star = parse_f64(tok[10]);
    r.p_used = parse_f64(tok[11]);
    r.lr = parse_f64(tok[12]);
    out.push_back(r);
  }
  return out;
}

std::vector<train::TrainRecord> read_records_csv(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("read_records_csv: cannot open " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_records_csv(buf.str());
}

std::string RunManifest::to_json_string() const {
  nlohmann::json j;
  j["config"] = nlohmann::json::parse(config_snapshot_json);
  j["seed"] = seed;
  j["code_version"] = code_version;
  j["started_utc"] = started_utc;
  j["finished_utc"] = finished_utc;
  j["outputs"] = outputs;
  return j.dump(2);
}

RunManifest RunManifest::from_json_string(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  RunManifest m;
  m.config_snapshot_json = j.at("config").dump();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.code_version = j.at("code_version").get<std::string>();
  m.started_utc = j.at("started_utc").get<std::string>();
  m.finished_utc = j.at("finished_utc").get<std::string>();
  m.outputs = j.at("outputs").get<std::vector<std::string>>();
  return m;
}

void write_manifest(const RunManifest& m, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("write_manifest: cannot open " + path);
  os << m.to_json_string() << "\n";
}

RunManifest read_manifest(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("read_manifest: cannot open " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return RunManifest::from_json_string(buf.str());
}

std::string utc_timestamp_now() {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace lpforge::io
