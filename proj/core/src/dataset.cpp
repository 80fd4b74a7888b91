#include "lpforge/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "lpforge/rng.hpp"

namespace lpforge::data {

void Dataset::validate() const {
  if (train.size() < 1 || test.size() < 1)
    throw std::invalid_argument("Dataset: both splits must be non-empty");
  if (train.dim() != test.dim()) throw std::invalid_argument("Dataset: split dimension mismatch");
  for (const Split* s : {&train, &test}) {
    if (s->x.rows() != s->size()) throw std::invalid_argument("Dataset: row/label count mismatch");
    for (int y : s->y)
      if (y < 0 || y >= classes) throw std::invalid_argument("Dataset: label out of range");
    for (double v : s->x.data)
      if (v < feature_range[0] - 1e-12 || v > feature_range[1] + 1e-12)
        throw std::invalid_argument("Dataset: feature outside feature_range");
  }
}

SyntheticKind synthetic_kind_from_name(const std::string& name) {
  if (name == "gauss_blobs") return SyntheticKind::GaussBlobs;
  if (name == "two_spirals") return SyntheticKind::TwoSpirals;
  if (name == "sparse_signal") return SyntheticKind::SparseSignal;
  throw std::invalid_argument("unknown synthetic dataset kind: " + name);
}

std::string synthetic_kind_name(SyntheticKind kind) {
  switch (kind) {
    case SyntheticKind::GaussBlobs: return "gauss_blobs";
    case SyntheticKind::TwoSpirals: return "two_spirals";
    case SyntheticKind::SparseSignal: return "sparse_signal";
  }
  return "?";
}

namespace {

// Raw (unscaled) sample generators; scaling to [0,1] happens once at the end
// over train+test jointly so both splits share the same affine map.

void gen_gauss_blobs(std::size_t d, int classes, RngStream& rng, int label,
                     std::vector<double>& out) {
  // class means on a scaled simplex over the first `classes` coordinates
  const double sep = 6.0;
  for (std::size_t i = 0; i < d; ++i) {
    double mean = (i < static_cast<std::size_t>(classes) && static_cast<int>(i) == label)
                      ? sep
                      : 0.0;
    out.push_back(mean + rng.normal());
  }
}

void gen_two_spirals(std::size_t d, int classes, RngStream& rng, int label,
                     std::vector<double>& out) {
  double t = 0.25 + 2.25 * rng.uniform01();  // radius parameter
  double angle = 2.5 * M_PI * t + 2.0 * M_PI * static_cast<double>(label) / classes;
  double r = t;
  out.push_back(r * std::cos(angle) + 0.05 * rng.normal());
  out.push_back(r * std::sin(angle) + 0.05 * rng.normal());
  for (std::size_t i = 2; i < d; ++i) out.push_back(0.1 * rng.normal());
}

void gen_sparse_signal(std::size_t d, int classes, std::size_t k, double margin, RngStream& rng,
                       int label, std::vector<double>& out) {
  // informative block: a +/- margin pattern keyed by label, tight noise;
  // the remaining coordinates are pure broad noise
  for (std::size_t i = 0; i < d; ++i) {
    if (i < k) {
      double s = ((static_cast<std::size_t>(label) >> (i % 8)) & 1u) ? 1.0 : -1.0;
      if (classes == 2) s = label == 1 ? 1.0 : -1.0;
      out.push_back(s * margin + 0.15 * margin * rng.normal());
    } else {
      out.push_back(rng.normal());
    }
  }
}

}  // namespace

Dataset make_synthetic(SyntheticKind kind, std::size_t d, int classes, std::size_t n_per_class,
                       std::uint64_t seed, std::size_t sparse_k) {
  if (d < 2) throw std::invalid_argument("make_synthetic: d must be >= 2");
  if (classes < 2) throw std::invalid_argument("make_synthetic: classes must be >= 2");
  if (n_per_class < 1) throw std::invalid_argument("make_synthetic: n_per_class must be >= 1");
  if (kind == SyntheticKind::SparseSignal && (sparse_k < 1 || sparse_k > d))
    throw std::invalid_argument("make_synthetic: sparse_k must lie in [1, d]");

  std::size_t n_test_per_class = std::max<std::size_t>(1, n_per_class / 4);
  const double sparse_margin = 2.0;

  auto gen_split = [&](const char* tag, std::size_t per_class, std::uint64_t counter) {
    Split s;
    s.tag = tag;
    std::size_t n = per_class * static_cast<std::size_t>(classes);
    s.x = Tensor({n, d});
    s.y.resize(n);
    RngStream rng(seed, "data", counter);
    std::vector<double> row;
    std::size_t idx = 0;
    for (int c = 0; c < classes; ++c) {
      for (std::size_t i = 0; i < per_class; ++i, ++idx) {
        row.clear();
        switch (kind) {
          case SyntheticKind::GaussBlobs: gen_gauss_blobs(d, classes, rng, c, row); break;
          case SyntheticKind::TwoSpirals: gen_two_spirals(d, classes, rng, c, row); break;
          case SyntheticKind::SparseSignal:
            gen_sparse_signal(d, classes, sparse_k, sparse_margin, rng, c, row);
            break;
        }
        std::copy(row.begin(), row.end(), s.x.data.begin() + static_cast<long>(idx * d));
        s.y[idx] = c;
      }
    }
    return s;
  };

  Dataset ds;
  ds.name = synthetic_kind_name(kind);
  ds.classes = classes;
  ds.train = gen_split("train", n_per_class, 0);
  ds.test = gen_split("test", n_test_per_class, 1);

  // joint min-max scale into [0, 1]
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const Split* s : {&ds.train, &ds.test})
    for (double v : s->x.data) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  double span = hi > lo ? hi - lo : 1.0;
  for (Split* s : {&ds.train, &ds.test})
    for (double& v : s->x.data) v = (v - lo) / span;

  ds.feature_range = {0.0, 1.0};
  ds.validate();
  return ds;
}

namespace {

std::uint32_t read_be_u32(std::ifstream& is, const char* what) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw IdxError(IdxError::Code::Truncated, std::string("truncated: ") + what);
  return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) | (std::uint32_t(b[2]) << 8) |
         std::uint32_t(b[3]);
}

}  // namespace

Split load_idx(const std::string& images_path, const std::string& labels_path) {
  std::ifstream imgs(images_path, std::ios::binary);
  if (!imgs) throw IdxError(IdxError::Code::Truncated, "truncated: cannot open " + images_path);
  std::ifstream labs(labels_path, std::ios::binary);
  if (!labs) throw IdxError(IdxError::Code::Truncated, "truncated: cannot open " + labels_path);

  std::uint32_t img_magic = read_be_u32(imgs, "image magic");
  if (img_magic != 0x00000803u)
    throw IdxError(IdxError::Code::BadMagic, "bad-magic: images file " + images_path);
  std::uint32_t n_images = read_be_u32(imgs, "image count");
  std::uint32_t rows = read_be_u32(imgs, "image rows");
  std::uint32_t cols = read_be_u32(imgs, "image cols");

  std::uint32_t lab_magic = read_be_u32(labs, "label magic");
  if (lab_magic != 0x00000801u)
    throw IdxError(IdxError::Code::BadMagic, "bad-magic: labels file " + labels_path);
  std::uint32_t n_labels = read_be_u32(labs, "label count");

  if (n_images != n_labels)
    throw IdxError(IdxError::Code::CountMismatch,
                   "count-mismatch: " + std::to_string(n_images) + " images vs " +
                       std::to_string(n_labels) + " labels");

  std::size_t d = static_cast<std::size_t>(rows) * cols;
  std::size_t n = n_images;

  std::vector<unsigned char> pixel_buf(n * d);
  imgs.read(reinterpret_cast<char*>(pixel_buf.data()), static_cast<std::streamsize>(n * d));
  if (static_cast<std::size_t>(imgs.gcount()) != n * d)
    throw IdxError(IdxError::Code::Truncated, "truncated: image payload");

  std::vector<unsigned char> label_buf(n);
  labs.read(reinterpret_cast<char*>(label_buf.data()), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(labs.gcount()) != n)
    throw IdxError(IdxError::Code::Truncated, "truncated: label payload");

  Split s;
  s.tag = "train";
  s.x = Tensor({n, d});
  for (std::size_t i = 0; i < n * d; ++i) s.x.data[i] = pixel_buf[i] / 255.0;
  s.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) s.y[i] = label_buf[i];
  return s;
}

Dataset load_idx_dataset(const std::string& train_images, const std::string& train_labels,
                         const std::string& test_images, const std::string& test_labels,
                         const std::string& name) {
  Dataset ds;
  ds.name = name;
  ds.train = load_idx(train_images, train_labels);
  ds.train.tag = "train";
  ds.test = load_idx(test_images, test_labels);
  ds.test.tag = "test";
  int max_label = 0;
  for (const Split* s : {&ds.train, &ds.test})
    for (int y : s->y) max_label = std::max(max_label, y);
  ds.classes = max_label + 1;
  ds.feature_range = {0.0, 1.0};
  ds.validate();
  return ds;
}

namespace {

constexpr char kDatasetMagic[] = "LPDS01";
constexpr std::size_t kDatasetMagicLen = 6;

template <typename T>
void write_raw(std::ofstream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::ifstream& is, const char* what) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error(std::string("dataset file: truncated ") + what);
  return v;
}

void write_split(std::ofstream& os, const Split& s) {
  os.write(reinterpret_cast<const char*>(s.x.data.data()),
           static_cast<std::streamsize>(s.x.data.size() * sizeof(double)));
  for (int y : s.y) write_raw<std::uint32_t>(os, static_cast<std::uint32_t>(y));
}

Split read_split(std::ifstream& is, const char* tag, std::size_t n, std::size_t d) {
  Split s;
  s.tag = tag;
  s.x = Tensor({n, d});
  is.read(reinterpret_cast<char*>(s.x.data.data()),
          static_cast<std::streamsize>(n * d * sizeof(double)));
  if (!is) throw std::runtime_error("dataset file: truncated feature payload");
  s.y.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    s.y[i] = static_cast<int>(read_raw<std::uint32_t>(is, "labels"));
  return s;
}

}  // namespace

void save_dataset(const Dataset& ds, const std::string& path) {
  ds.validate();
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("dataset file: cannot open for write: " + path);
  os.write(kDatasetMagic, kDatasetMagicLen);
  write_raw<std::uint32_t>(os, static_cast<std::uint32_t>(ds.classes));
  write_raw<std::uint32_t>(os, static_cast<std::uint32_t>(ds.dim()));
  write_raw<std::uint32_t>(os, static_cast<std::uint32_t>(ds.train.size()));
  write_raw<std::uint32_t>(os, static_cast<std::uint32_t>(ds.test.size()));
  write_raw<double>(os, ds.feature_range[0]);
  write_raw<double>(os, ds.feature_range[1]);
  write_split(os, ds.train);
  write_split(os, ds.test);
  if (!os) throw std::runtime_error("dataset file: write failed: " + path);
}

Dataset load_dataset(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("dataset file: cannot open: " + path);
  char magic[kDatasetMagicLen];
  is.read(magic, kDatasetMagicLen);
  if (!is || std::memcmp(magic, kDatasetMagic, kDatasetMagicLen) != 0)
    throw std::runtime_error("dataset file: bad magic");
  Dataset ds;
  ds.name = path;
  ds.classes = static_cast<int>(read_raw<std::uint32_t>(is, "classes"));
  std::size_t d = read_raw<std::uint32_t>(is, "dim");
  std::size_t n_train = read_raw<std::uint32_t>(is, "train count");
  std::size_t n_test = read_raw<std::uint32_t>(is, "test count");
  ds.feature_range[0] = read_raw<double>(is, "feature lo");
  ds.feature_range[1] = read_raw<double>(is, "feature hi");
  ds.train = read_split(is, "train", n_train, d);
  ds.test = read_split(is, "test", n_test, d);
  ds.validate();
  return ds;
}

}  // namespace lpforge::data
