#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "lpforge/tensor.hpp"

namespace lpforge::data {

/// One tagged sample set: features (N x d) in feature_range, integer labels.
struct Split {
  std::string tag;  // "train" or "test"
  Tensor x;
  std::vector<int> y;

  std::size_t size() const { return y.size(); }
  std::size_t dim() const { return x.ndim() == 2 ? x.cols() : 0; }
};

struct Dataset {
  std::string name;
  int classes = 2;
  std::array<double, 2> feature_range{0.0, 1.0};
  Split train;
  Split test;

  std::size_t dim() const { return train.dim(); }
  void validate() const;
};

enum class SyntheticKind { GaussBlobs, TwoSpirals, SparseSignal };

SyntheticKind synthetic_kind_from_name(const std::string& name);
std::string synthetic_kind_name(SyntheticKind kind);

/// Deterministic synthetic data scaled into [0, 1]. sparse_k applies to
/// SparseSignal only: class information lives in the first sparse_k
/// coordinates, which drives trained-model gradients toward low PR1.
/// The test split holds max(1, n_per_class / 4) extra samples per class.
Dataset make_synthetic(SyntheticKind kind, std::size_t d, int classes, std::size_t n_per_class,
                       std::uint64_t seed, std::size_t sparse_k = 4);

/// Parse failures carry a distinct code; the message embeds its token
/// ("bad-magic", "truncated", "count-mismatch").
class IdxError : public std::runtime_error {
 public:
  enum class Code { BadMagic, Truncated, CountMismatch };
  IdxError(Code c, const std::string& msg) : std::runtime_error(msg), code(c) {}
  Code code;
};

/// IDX pair loader (images magic 0x00000803, labels 0x00000801, big-endian
/// dimensions, uint8 payload). Pixels are scaled to [0, 1] float64.
Split load_idx(const std::string& images_path, const std::string& labels_path);

/// Compose a full dataset from two IDX pairs.
Dataset load_idx_dataset(const std::string& train_images, const std::string& train_labels,
                         const std::string& test_images, const std::string& test_labels,
                         const std::string& name = "idx");

/// Binary dataset container: "LPDS01" magic, shape table, little-endian
/// float64 feature payload, uint32 labels.
void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);

}  // namespace lpforge::data
