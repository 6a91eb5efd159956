#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ini/autodiff/tensor.hpp"

namespace ini::data {

enum class DatasetTag { kId, kOod, kSurrogate };

std::string to_string(DatasetTag tag);
DatasetTag parse_tag(const std::string& name);

/// Cluster centers and spread of a generated Gaussian-blob family.
struct BlobGeometry {
  std::vector<std::vector<double>> centers;
  double sigma = 0.0;
};

/// Samples with integer labels. Immutable after construction; shareable.
struct LabeledDataset {
  ad::Tensor x;
  std::vector<int> labels;
  std::size_t num_classes = 0;
  DatasetTag tag = DatasetTag::kId;
  std::string provenance;
  std::optional<BlobGeometry> geometry;
  /// Surrogate sets only: 1 for rows drawn from the ID generator family.
  std::vector<std::uint8_t> id_family;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return x.cols(); }

  /// Throws unless N > 0, rows match labels and labels lie in [0, K).
  void validate() const;
  ad::Tensor rows(std::span<const std::size_t> indices) const;
  std::vector<int> labels_at(std::span<const std::size_t> indices) const;
  LabeledDataset subset(std::span<const std::size_t> indices) const;
};

struct BlobSpec {
  std::uint64_t seed = 0;
  std::size_t num_classes = 4;
  std::size_t per_class = 100;
  std::size_t dim = 16;
  double sigma = 0.3;
  double spacing = 1.0;
};

/// Center of class k: spacing * (floor(k / D) + 1) * e_(k mod D). Centers of
/// distinct classes are at least `spacing` apart.
std::vector<double> lattice_center(std::size_t k, std::size_t dim, double spacing);

/// K isotropic Gaussian clusters on the lattice. Rows are class-interleaved
/// (row i has label i mod K), so every class holds exactly per_class rows.
LabeledDataset make_id_blobs(const BlobSpec& spec);

/// Fresh draws from the clusters of `base` translated by `shift`, tagged OOD.
/// With `relabel_classes` labels are rotated by one class. Requires
/// |shift| > 2 sigma of the base family; otherwise throws SeparationError.
LabeledDataset make_ood_shifted(std::uint64_t seed, const LabeledDataset& base,
                                std::span<const double> shift, bool relabel_classes);

/// Minimum separation |shift| / sigma required by make_ood_shifted.
inline constexpr double kMinShiftInSigmas = 2.0;

/// Mean distance over all pairs (ID center, OOD center).
double mean_center_distance(const BlobGeometry& id, const BlobGeometry& ood);

/// Shift of the given norm along a named direction: "ones" (all coordinates
/// equal), "alternating" (+,-,+,...) or "negative" (all coordinates equal,
/// negative).
std::vector<double> shift_vector(std::size_t dim, double norm, const std::string& pattern);

struct SurrogateSources {
  BlobSpec id_family;
  std::vector<double> ood_shift;
  std::uint64_t ood_seed = 0;
};

/// Mixture of `size` rows: each row independently comes from the ID family
/// with probability rho, otherwise from the shifted OOD family. With rho = 1
/// the rows equal the first `size` rows of make_id_blobs(sources.id_family).
LabeledDataset make_surrogate(std::uint64_t seed, double rho, std::size_t size,
                              const SurrogateSources& sources);

enum class FlatFormat { kCsv, kBinary };

struct FlatSchema {
  FlatFormat format = FlatFormat::kCsv;
  std::size_t dim = 0;
  std::size_t num_classes = 0;
  DatasetTag tag = DatasetTag::kId;
};

// CSV: one row per sample, `dim` features then the integer label, comma
// separated, no header. Values are written with 17 significant digits.
//
// Binary (little-endian): "IDXF", u32 version = 1, u32 N, u32 D, u32 K,
// N*D float64 features row-major, N u32 labels.
void export_flatfile(const LabeledDataset& dataset, const std::string& path, FlatFormat format);

/// Loads and validates a flat file. Schema violations raise SchemaError with
/// the offending row (CSV) or byte offset (binary). Provenance records the
/// SHA-256 of the file bytes.
LabeledDataset load_flatfile(const std::string& path, const FlatSchema& schema);

}  // namespace ini::data
