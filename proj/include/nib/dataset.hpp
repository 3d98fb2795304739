#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "nib/common.hpp"
#include "nib/noise.hpp"
#include "nib/random.hpp"

namespace nib {

enum class Split { train, test };

/// Per-channel affine normalization applied after scaling pixels to [0,1].
struct Standardization {
  std::vector<Real> mean;
  std::vector<Real> stddev;
};

/// Features plus true labels, observed (possibly corrupted) labels and the
/// corruption flags. Features are row-major, one row of `dim()` values per
/// sample; images are stored channel-planar (C, H, W).
struct LabeledDataset {
  std::vector<int> sample_shape;  // {D} or {C, H, W}
  std::vector<Real> features;
  std::vector<Label> true_labels;
  std::vector<Label> observed_labels;
  std::vector<bool> flip_mask;
  int classes = 0;
  Split split = Split::train;
  Standardization standardization;

  std::size_t size() const { return true_labels.size(); }

  std::size_t dim() const {
    std::size_t d = 1;
    for (int s : sample_shape) d *= static_cast<std::size_t>(s);
    return d;
  }

  std::span<const Real> sample(std::size_t i) const {
    return {features.data() + i * dim(), dim()};
  }

  std::size_t flipped_count() const {
    return static_cast<std::size_t>(std::count(flip_mask.begin(), flip_mask.end(), true));
  }

  /// Throws ContractError when the parallel sequences disagree.
  void validate() const {
    const std::size_t n = size();
    if (observed_labels.size() != n || flip_mask.size() != n || features.size() != n * dim())
      throw ContractError("dataset sequences have inconsistent lengths");
    for (std::size_t i = 0; i < n; ++i) {
      if (true_labels[i] < 0 || true_labels[i] >= classes ||
          observed_labels[i] < 0 || observed_labels[i] >= classes)
        throw ContractError("dataset label out of range at index " + std::to_string(i));
      if (flip_mask[i] != (observed_labels[i] != true_labels[i]))
        throw ContractError("flip mask inconsistent at index " + std::to_string(i));
    }
    if (split == Split::test && flipped_count() != 0)
      throw ContractError("test split must not be corrupted");
  }
};

/// Replaces observed labels and flags of a training split.
inline void apply_corruption(LabeledDataset& ds, const CorruptionRecord& rec) {
  if (ds.split == Split::test) throw ContractError("refusing to corrupt a test split");
  if (rec.observed_labels.size() != ds.size())
    throw ParameterError("corruption record length does not match dataset");
  ds.observed_labels = rec.observed_labels;
  ds.flip_mask = rec.flip_mask;
}

/// Copies the listed samples, in order, into a new dataset.
inline LabeledDataset gather(const LabeledDataset& ds, std::span<const std::size_t> idx) {
  LabeledDataset out;
  out.sample_shape = ds.sample_shape;
  out.classes = ds.classes;
  out.split = ds.split;
  out.standardization = ds.standardization;
  const std::size_t d = ds.dim();
  out.features.reserve(idx.size() * d);
  for (std::size_t i : idx) {
    const auto s = ds.sample(i);
    out.features.insert(out.features.end(), s.begin(), s.end());
    out.true_labels.push_back(ds.true_labels[i]);
    out.observed_labels.push_back(ds.observed_labels[i]);
    out.flip_mask.push_back(ds.flip_mask[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Batching

struct BatchPlan {
  std::vector<std::size_t> permutation;
  std::size_t batch_size = 0;

  std::size_t iterations() const {
    return (permutation.size() + batch_size - 1) / batch_size;
  }

  /// Indices of batch `j`; the last batch may be short.
  std::span<const std::size_t> batch(std::size_t j) const {
    const std::size_t begin = j * batch_size;
    const std::size_t end = std::min(permutation.size(), begin + batch_size);
    return {permutation.data() + begin, end - begin};
  }
};

inline BatchPlan make_batch_plan(std::size_t n, std::size_t batch_size, std::uint64_t seed,
                                 std::uint64_t epoch) {
  if (batch_size == 0) throw ParameterError("batch size must be positive");
  BatchPlan plan;
  plan.batch_size = batch_size;
  plan.permutation.resize(n);
  std::iota(plan.permutation.begin(), plan.permutation.end(), std::size_t{0});
  Rng rng(derive_seed(seed, epoch));
  rng.shuffle(plan.permutation);
  return plan;
}

// ---------------------------------------------------------------------------
// CIFAR-10 binary format: 3073-byte records, one label byte followed by
// three 32x32 row-major colour planes (R, G, B).

namespace cifar10 {
inline constexpr std::size_t kRecordBytes = 3073;
inline constexpr std::size_t kPixelBytes = 3072;
inline constexpr std::size_t kRecordsPerFile = 10000;
inline constexpr int kClasses = 10;
inline constexpr std::array<const char*, 5> kTrainFiles = {
    "data_batch_1.bin", "data_batch_2.bin", "data_batch_3.bin", "data_batch_4.bin",
    "data_batch_5.bin"};
inline constexpr const char* kTestFile = "test_batch.bin";
}  // namespace cifar10

/// Reads raw bytes of one batch file and appends labels and pixel values
/// (scaled to [0,1]) to `ds`.
inline void read_cifar10_file(const std::filesystem::path& path, std::size_t expected_records,
                              LabeledDataset& ds) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError("cannot open CIFAR-10 file " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() % cifar10::kRecordBytes != 0)
    throw FormatError("CIFAR-10 file " + path.string() + " has length " +
                      std::to_string(bytes.size()) + ", not a multiple of 3073");
  const std::size_t records = bytes.size() / cifar10::kRecordBytes;
  if (records < expected_records)
    throw IngestionError("CIFAR-10 file " + path.string() + " is short: " +
                         std::to_string(records) + " of " +
                         std::to_string(expected_records) + " records");
  if (records > expected_records)
    throw FormatError("CIFAR-10 file " + path.string() + " has " + std::to_string(records) +
                      " records, expected " + std::to_string(expected_records));

  for (std::size_t r = 0; r < records; ++r) {
    const unsigned char* rec = bytes.data() + r * cifar10::kRecordBytes;
    if (rec[0] >= cifar10::kClasses)
      throw FormatError("CIFAR-10 file " + path.string() + " record " + std::to_string(r) +
                        " has label byte " + std::to_string(rec[0]));
    ds.true_labels.push_back(rec[0]);
    for (std::size_t p = 0; p < cifar10::kPixelBytes; ++p)
      ds.features.push_back(static_cast<Real>(rec[1 + p]) / 255.0);
  }
}

/// Per-channel mean and standard deviation of a channel-planar dataset.
inline Standardization compute_standardization(const LabeledDataset& ds) {
  const int channels = ds.sample_shape.size() == 3 ? ds.sample_shape[0] : 1;
  const std::size_t plane = ds.dim() / static_cast<std::size_t>(channels);
  Standardization st;
  st.mean.assign(channels, 0.0);
  st.stddev.assign(channels, 0.0);
  const double count = static_cast<double>(ds.size() * plane);
  for (int c = 0; c < channels; ++c) {
    double sum = 0, sq = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      const Real* p = ds.features.data() + i * ds.dim() + c * plane;
      for (std::size_t k = 0; k < plane; ++k) {
        sum += p[k];
        sq += p[k] * p[k];
      }
    }
    const double m = sum / count;
    st.mean[c] = m;
    st.stddev[c] = std::sqrt(std::max(sq / count - m * m, 1e-12));
  }
  return st;
}

inline void apply_standardization(LabeledDataset& ds, const Standardization& st) {
  const auto channels = st.mean.size();
  const std::size_t plane = ds.dim() / channels;
  for (std::size_t i = 0; i < ds.size(); ++i)
    for (std::size_t c = 0; c < channels; ++c) {
      Real* p = ds.features.data() + i * ds.dim() + c * plane;
      for (std::size_t k = 0; k < plane; ++k) p[k] = (p[k] - st.mean[c]) / st.stddev[c];
    }
  ds.standardization = st;
}

struct TrainTest {
  LabeledDataset train;
  LabeledDataset test;
};

/// Loads the five training batches and the test batch from `dir`.
/// Standardization constants come from the training split only.
/// `records_per_file` exists so tests can use miniature files.
inline TrainTest load_cifar10(const std::filesystem::path& dir,
                              std::size_t records_per_file = cifar10::kRecordsPerFile,
                              bool standardize = true) {
  TrainTest out;
  for (LabeledDataset* ds : {&out.train, &out.test}) {
    ds->sample_shape = {3, 32, 32};
    ds->classes = cifar10::kClasses;
  }
  out.train.split = Split::train;
  out.test.split = Split::test;

  for (const char* name : cifar10::kTrainFiles)
    read_cifar10_file(dir / name, records_per_file, out.train);
  read_cifar10_file(dir / cifar10::kTestFile, records_per_file, out.test);

  for (LabeledDataset* ds : {&out.train, &out.test}) {
    ds->observed_labels = ds->true_labels;
    ds->flip_mask.assign(ds->size(), false);
  }
  if (standardize) {
    const auto st = compute_standardization(out.train);
    apply_standardization(out.train, st);
    apply_standardization(out.test, st);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic Gaussian blobs

struct BlobSpec {
  int classes = 4;
  int n_per_class = 250;
  int dim = 2;
  Real center_spread = 10.0;
  Real cluster_std = 1.0;
  std::uint64_t seed = 0;
};

/// K isotropic Gaussian clusters; centres uniform in [-spread, spread]^dim.
/// Each class contributes its first ceil(0.8 n) draws to train, the rest to test.
inline TrainTest generate_blobs(const BlobSpec& spec) {
  if (spec.classes < 2) throw ParameterError("blobs need at least 2 classes");
  if (spec.dim < 2) throw ParameterError("blobs need dim >= 2");
  if (!(spec.cluster_std > 0)) throw ParameterError("cluster_std must be positive");
  if (spec.n_per_class < 5) throw ParameterError("n_per_class must be at least 5");
  if (!(spec.center_spread >= 0)) throw ParameterError("center_spread must be >= 0");

  Rng rng(derive_seed(spec.seed, 0x626c6f6273ULL));
  std::vector<Real> centers(static_cast<std::size_t>(spec.classes) * spec.dim);
  for (Real& c : centers) c = rng.uniform(-spec.center_spread, spec.center_spread);

  TrainTest out;
  for (LabeledDataset* ds : {&out.train, &out.test}) {
    ds->sample_shape = {spec.dim};
    ds->classes = spec.classes;
  }
  out.train.split = Split::train;
  out.test.split = Split::test;

  const int n_train = spec.n_per_class - spec.n_per_class / 5;
  for (int k = 0; k < spec.classes; ++k) {
    for (int i = 0; i < spec.n_per_class; ++i) {
      LabeledDataset& ds = i < n_train ? out.train : out.test;
      for (int d = 0; d < spec.dim; ++d)
        ds.features.push_back(rng.normal(centers[static_cast<std::size_t>(k) * spec.dim + d],
                                         spec.cluster_std));
      ds.true_labels.push_back(k);
    }
  }
  for (LabeledDataset* ds : {&out.train, &out.test}) {
    ds->observed_labels = ds->true_labels;
    ds->flip_mask.assign(ds->size(), false);
  }
  return out;
}

/// Keeps exactly `n_per_class` samples of every class, chosen by `seed`,
/// preserving the original relative order.
inline LabeledDataset subset_per_class(const LabeledDataset& ds, std::size_t n_per_class,
                                       std::uint64_t seed) {
  std::vector<std::vector<std::size_t>> by_class(ds.classes);
  for (std::size_t i = 0; i < ds.size(); ++i) by_class[ds.true_labels[i]].push_back(i);
  Rng rng(derive_seed(seed, 0x737562736574ULL));
  std::vector<std::size_t> keep;
  keep.reserve(n_per_class * ds.classes);
  for (int k = 0; k < ds.classes; ++k) {
    auto& members = by_class[k];
    if (members.size() < n_per_class)
      throw DataError("class " + std::to_string(k) + " has " + std::to_string(members.size()) +
                      " samples, fewer than the requested " + std::to_string(n_per_class));
    rng.shuffle(members);
    keep.insert(keep.end(), members.begin(), members.begin() + n_per_class);
  }
  std::sort(keep.begin(), keep.end());
  return gather(ds, keep);
}

/// FNV-1a over the shape, feature bits and true labels.
inline std::uint64_t fingerprint(const LabeledDataset& ds) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ULL;
    }
  };
  for (int s : ds.sample_shape) mix(&s, sizeof s);
  mix(ds.features.data(), ds.features.size() * sizeof(Real));
  for (Label y : ds.true_labels) mix(&y, sizeof y);
  return h;
}

inline std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

/// Writes `index,true_label,observed_label,flipped,f_0..f_{D-1}`.
inline void export_csv(const LabeledDataset& ds, std::ostream& os) {
  os << "index,true_label,observed_label,flipped";
  for (std::size_t d = 0; d < ds.dim(); ++d) os << ",f_" << d;
  os << '\n' << std::setprecision(17);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    os << i << ',' << ds.true_labels[i] << ',' << ds.observed_labels[i] << ','
       << (ds.flip_mask[i] ? 1 : 0);
    for (Real v : ds.sample(i)) os << ',' << v;
    os << '\n';
  }
}

}  // namespace nib
