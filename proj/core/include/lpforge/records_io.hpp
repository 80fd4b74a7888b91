#pragma once

#include <string>
#include <vector>

#include "lpforge/training.hpp"

namespace lpforge::io {

inline constexpr const char* kRecordsHeader =
    "epoch,clean_acc,fgsm_acc,pgd_linf_acc,pgd_l2_acc,grad_l2,pr,pr1,delta_h,cos2inf,q_star,"
    "p_used,lr";

/// Exact header above, floats at 9 significant digits, the l-inf sentinel
/// spelled as the literal `inf`.
void write_records_csv(const std::vector<train::TrainRecord>& records, const std::string& path);
std::string records_to_csv(const std::vector<train::TrainRecord>& records);

std::vector<train::TrainRecord> read_records_csv(const std::string& path);
std::vector<train::TrainRecord> parse_records_csv(const std::string& text);

/// Config snapshot, seed, version and every emitted artifact path; replaying
/// the snapshot reproduces the records CSV bit-for-bit.
struct RunManifest {
  std::string config_snapshot_json;
  std::uint64_t seed = 0;
  std::string code_version;
  std::string started_utc;
  std::string finished_utc;
  std::vector<std::string> outputs;

  std::string to_json_string() const;
  static RunManifest from_json_string(const std::string& text);
};

void write_manifest(const RunManifest& m, const std::string& path);
RunManifest read_manifest(const std::string& path);

std::string utc_timestamp_now();

}  // namespace lpforge::io
