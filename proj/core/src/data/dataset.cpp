#include "ini/data/dataset.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "ini/digest.hpp"
#include "ini/error.hpp"
#include "ini/rng.hpp"

namespace ini::data {

std::string to_string(DatasetTag tag) {
  switch (tag) {
    case DatasetTag::kId: return "id";
    case DatasetTag::kOod: return "ood";
    case DatasetTag::kSurrogate: return "surrogate";
  }
  return "?";
}

DatasetTag parse_tag(const std::string& name) {
  if (name == "id") return DatasetTag::kId;
  if (name == "ood") return DatasetTag::kOod;
  if (name == "surrogate") return DatasetTag::kSurrogate;
  throw Error("unknown dataset tag '" + name + "'");
}

void LabeledDataset::validate() const {
  if (labels.empty()) throw DomainError("dataset is empty");
  if (!x.defined() || x.rank() != 2 || x.rows() != labels.size()) {
    throw ShapeError("dataset features do not match " + std::to_string(labels.size()) + " labels");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= num_classes) {
      throw DomainError("label " + std::to_string(labels[i]) + " out of range at row " + std::to_string(i));
    }
  }
  for (double v : x.values()) {
    if (!std::isfinite(v)) throw DomainError("dataset contains a non-finite feature");
  }
}

ad::Tensor LabeledDataset::rows(std::span<const std::size_t> indices) const {
  const std::size_t d = dim();
  auto vals = x.values();
  std::vector<double> out;
  out.reserve(indices.size() * d);
  for (std::size_t i : indices) {
    out.insert(out.end(), vals.begin() + static_cast<std::ptrdiff_t>(i * d),
               vals.begin() + static_cast<std::ptrdiff_t>((i + 1) * d));
  }
  return ad::Tensor::from({indices.size(), d}, std::move(out));
}

std::vector<int> LabeledDataset::labels_at(std::span<const std::size_t> indices) const {
  std::vector<int> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(labels.at(i));
  return out;
}

LabeledDataset LabeledDataset::subset(std::span<const std::size_t> indices) const {
  LabeledDataset out;
  out.x = rows(indices);
  out.labels = labels_at(indices);
  out.num_classes = num_classes;
  out.tag = tag;
  out.provenance = provenance + ":subset";
  out.geometry = geometry;
  if (!id_family.empty()) {
    for (std::size_t i : indices) out.id_family.push_back(id_family[i]);
  }
  return out;
}

std::vector<double> lattice_center(std::size_t k, std::size_t dim, double spacing) {
  std::vector<double> c(dim, 0.0);
  c[k % dim] = spacing * static_cast<double>(k / dim + 1);
  return c;
}

namespace {

LabeledDataset sample_clusters(Rng& rng, const BlobGeometry& geometry, std::size_t per_class,
                               std::size_t dim) {
  const std::size_t k = geometry.centers.size();
  const std::size_t n = k * per_class;
  std::vector<double> x(n * dim);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t cls = i % k;
    labels[i] = static_cast<int>(cls);
    for (std::size_t d = 0; d < dim; ++d) {
      x[i * dim + d] = geometry.centers[cls][d] + geometry.sigma * rng.normal();
    }
  }
  LabeledDataset out;
  out.x = ad::Tensor::from({n, dim}, std::move(x));
  out.labels = std::move(labels);
  out.num_classes = k;
  out.geometry = geometry;
  return out;
}

}  // namespace

LabeledDataset make_id_blobs(const BlobSpec& spec) {
  if (spec.num_classes < 2) throw DomainError("make_id_blobs: need at least 2 classes");
  if (spec.dim < 2) throw DomainError("make_id_blobs: need at least 2 dimensions");
  if (spec.per_class == 0) throw DomainError("make_id_blobs: per_class must be positive");
  if (!(spec.sigma > 0.0) || !(spec.spacing > 0.0)) throw DomainError("make_id_blobs: sigma and spacing must be positive");

  BlobGeometry geometry;
  geometry.sigma = spec.sigma;
  for (std::size_t k = 0; k < spec.num_classes; ++k) geometry.centers.push_back(lattice_center(k, spec.dim, spec.spacing));

  Rng rng(spec.seed);
  LabeledDataset out = sample_clusters(rng, geometry, spec.per_class, spec.dim);
  out.tag = DatasetTag::kId;
  std::ostringstream os;
  os << "blobs(seed=" << spec.seed << ",K=" << spec.num_classes << ",N=" << spec.per_class << ",D=" << spec.dim
     << ",sigma=" << spec.sigma << ",spacing=" << spec.spacing << ")";
  out.provenance = os.str();
  return out;
}

LabeledDataset make_ood_shifted(std::uint64_t seed, const LabeledDataset& base, std::span<const double> shift,
                                bool relabel_classes) {
  if (!base.geometry) throw DomainError("make_ood_shifted: base dataset has no blob geometry");
  const BlobGeometry& g = *base.geometry;
  if (shift.size() != base.dim()) throw ShapeError("make_ood_shifted: shift length differs from dimension");
  double norm2 = 0.0;
  for (double s : shift) norm2 += s * s;
  const double norm = std::sqrt(norm2);
  if (!(norm > kMinShiftInSigmas * g.sigma)) {
    throw SeparationError("OOD shift norm " + std::to_string(norm) + " must exceed " +
                          std::to_string(kMinShiftInSigmas) + " sigma = " +
                          std::to_string(kMinShiftInSigmas * g.sigma));
  }
  BlobGeometry shifted = g;
  for (auto& c : shifted.centers) {
    for (std::size_t d = 0; d < c.size(); ++d) c[d] += shift[d];
  }
  const std::size_t per_class = (base.size() + g.centers.size() - 1) / g.centers.size();
  Rng rng(seed);
  LabeledDataset out = sample_clusters(rng, shifted, per_class, base.dim());
  if (relabel_classes) {
    for (int& l : out.labels) l = (l + 1) % static_cast<int>(out.num_classes);
  }
  out.tag = DatasetTag::kOod;
  std::ostringstream os;
  os << "ood_shifted(seed=" << seed << ",|shift|=" << norm << ",base=" << base.provenance << ")";
  out.provenance = os.str();
  return out;
}

double mean_center_distance(const BlobGeometry& id, const BlobGeometry& ood) {
  double total = 0.0;
  std::size_t pairs = 0;
  for (const auto& a : id.centers) {
    for (const auto& b : ood.centers) {
      double d2 = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) d2 += (a[i] - b[i]) * (a[i] - b[i]);
      total += std::sqrt(d2);
      ++pairs;
    }
  }
  return pairs ? total / static_cast<double>(pairs) : 0.0;
}

std::vector<double> shift_vector(std::size_t dim, double norm, const std::string& pattern) {
  const double unit = norm / std::sqrt(static_cast<double>(dim));
  std::vector<double> s(dim);
  for (std::size_t d = 0; d < dim; ++d) {
    if (pattern == "ones") {
      s[d] = unit;
    } else if (pattern == "negative") {
      s[d] = -unit;
    } else if (pattern == "alternating") {
      s[d] = d % 2 == 0 ? unit : -unit;
    } else {
      throw Error("unknown shift pattern '" + pattern + "'");
    }
  }
  return s;
}

LabeledDataset make_surrogate(std::uint64_t seed, double rho, std::size_t size, const SurrogateSources& sources) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw DomainError("make_surrogate: rho must lie in [0, 1]");
  if (size == 0) throw DomainError("make_surrogate: size must be positive");
  const std::size_t k = sources.id_family.num_classes;
  BlobSpec id_spec = sources.id_family;
  id_spec.per_class = (size + k - 1) / k;
  const LabeledDataset id_pool = make_id_blobs(id_spec);
  const LabeledDataset ood_pool = make_ood_shifted(sources.ood_seed, id_pool, sources.ood_shift, false);

  Rng rng(seed);
  const std::size_t d = id_pool.dim();
  auto id_vals = id_pool.x.values();
  auto ood_vals = ood_pool.x.values();
  std::vector<double> x(size * d);
  std::vector<int> labels(size);
  std::vector<std::uint8_t> family(size);
  for (std::size_t i = 0; i < size; ++i) {
    const bool from_id = rho >= 1.0 || rng.uniform() < rho;
    const auto& src = from_id ? id_vals : ood_vals;
    std::copy(src.begin() + static_cast<std::ptrdiff_t>(i * d), src.begin() + static_cast<std::ptrdiff_t>((i + 1) * d),
              x.begin() + static_cast<std::ptrdiff_t>(i * d));
    labels[i] = from_id ? id_pool.labels[i] : ood_pool.labels[i];
    family[i] = from_id ? 1 : 0;
  }
  LabeledDataset out;
  out.x = ad::Tensor::from({size, d}, std::move(x));
  out.labels = std::move(labels);
  out.num_classes = k;
  out.tag = DatasetTag::kSurrogate;
  out.id_family = std::move(family);
  std::ostringstream os;
  os << "surrogate(seed=" << seed << ",rho=" << rho << ",id=" << id_pool.provenance << ",ood=" << ood_pool.provenance
     << ")";
  out.provenance = os.str();
  return out;
}

// ---------------------------------------------------------------------------
// Flat files

namespace {

constexpr std::string_view kBinaryMagic = "IDXF";

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

std::uint64_t get_le(std::string_view bytes, std::size_t at, int width) {
  std::uint64_t v = 0;
  for (int i = 0; i < width; ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[at + static_cast<std::size_t>(i)])) << (8 * i);
  }
  return v;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

LabeledDataset parse_csv(std::string_view text, const FlatSchema& schema) {
  std::vector<double> x;
  std::vector<int> labels;
  std::size_t row = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;

    std::size_t fields = 0;
    std::size_t fpos = 0;
    while (true) {
      std::size_t comma = line.find(',', fpos);
      std::string_view field = line.substr(fpos, comma == std::string_view::npos ? std::string_view::npos : comma - fpos);
      if (fields < schema.dim) {
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
        if (ec != std::errc() || ptr != field.data() + field.size() || !std::isfinite(v)) {
          throw SchemaError("row " + std::to_string(row) + ": feature " + std::to_string(fields) +
                            " is not a finite number");
        }
        x.push_back(v);
      } else if (fields == schema.dim) {
        long long label = 0;
        auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), label);
        if (ec != std::errc() || ptr != field.data() + field.size()) {
          throw SchemaError("row " + std::to_string(row) + ": label is not an integer");
        }
        if (label < 0 || static_cast<std::size_t>(label) >= schema.num_classes) {
          throw SchemaError("row " + std::to_string(row) + ": label " + std::to_string(label) +
                            " outside [0, " + std::to_string(schema.num_classes) + ")");
        }
        labels.push_back(static_cast<int>(label));
      }
      ++fields;
      if (comma == std::string_view::npos) break;
      fpos = comma + 1;
    }
    if (fields != schema.dim + 1) {
      throw SchemaError("row " + std::to_string(row) + ": expected " + std::to_string(schema.dim + 1) +
                        " fields, found " + std::to_string(fields));
    }
    ++row;
  }
  if (labels.empty()) throw SchemaError("row 0: file holds no samples");
  LabeledDataset out;
  out.x = ad::Tensor::from({labels.size(), schema.dim}, std::move(x));
  out.labels = std::move(labels);
  return out;
}

LabeledDataset parse_binary(std::string_view bytes, const FlatSchema& schema) {
  const auto need = [&](std::size_t at, std::size_t len, const char* what) {
    if (bytes.size() < at + len) {
      throw SchemaError("byte " + std::to_string(bytes.size()) + ": file ends inside " + what);
    }
  };
  need(0, 20, "header");
  if (bytes.substr(0, 4) != kBinaryMagic) throw SchemaError("byte 0: magic is not IDXF");
  if (get_le(bytes, 4, 4) != 1) throw SchemaError("byte 4: unsupported version");
  const std::size_t n = get_le(bytes, 8, 4);
  const std::size_t d = get_le(bytes, 12, 4);
  const std::size_t k = get_le(bytes, 16, 4);
  if (n == 0) throw SchemaError("byte 8: sample count is zero");
  if (d != schema.dim) {
    throw SchemaError("byte 12: dimension " + std::to_string(d) + " differs from schema " + std::to_string(schema.dim));
  }
  if (k != schema.num_classes) {
    throw SchemaError("byte 16: class count " + std::to_string(k) + " differs from schema " +
                      std::to_string(schema.num_classes));
  }
  const std::size_t features_at = 20;
  need(features_at, n * d * 8, "feature block");
  const std::size_t labels_at = features_at + n * d * 8;
  need(labels_at, n * 4, "label block");
  if (bytes.size() != labels_at + n * 4) {
    throw SchemaError("byte " + std::to_string(labels_at + n * 4) + ": trailing bytes");
  }
  std::vector<double> x(n * d);
  for (std::size_t i = 0; i < n * d; ++i) {
    const std::size_t at = features_at + 8 * i;
    x[i] = std::bit_cast<double>(get_le(bytes, at, 8));
    if (!std::isfinite(x[i])) throw SchemaError("byte " + std::to_string(at) + ": non-finite feature");
  }
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t at = labels_at + 4 * i;
    const std::uint64_t label = get_le(bytes, at, 4);
    if (label >= k) {
      throw SchemaError("byte " + std::to_string(at) + " (row " + std::to_string(i) + "): label " +
                        std::to_string(label) + " out of range");
    }
    labels[i] = static_cast<int>(label);
  }
  LabeledDataset out;
  out.x = ad::Tensor::from({n, d}, std::move(x));
  out.labels = std::move(labels);
  return out;
}

}  // namespace

void export_flatfile(const LabeledDataset& dataset, const std::string& path, FlatFormat format) {
  dataset.validate();
  const std::size_t n = dataset.size(), d = dataset.dim();
  auto vals = dataset.x.values();
  std::string out;
  if (format == FlatFormat::kCsv) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        out += format_double(vals[i * d + j]);
        out += ',';
      }
      out += std::to_string(dataset.labels[i]);
      out += '\n';
    }
  } else {
    out.append(kBinaryMagic);
    put_u32(out, 1);
    put_u32(out, static_cast<std::uint32_t>(n));
    put_u32(out, static_cast<std::uint32_t>(d));
    put_u32(out, static_cast<std::uint32_t>(dataset.num_classes));
    for (double v : vals) put_u64(out, std::bit_cast<std::uint64_t>(v));
    for (int l : dataset.labels) put_u32(out, static_cast<std::uint32_t>(l));
  }
  write_file_bytes(path, out);
}

LabeledDataset load_flatfile(const std::string& path, const FlatSchema& schema) {
  if (schema.dim == 0 || schema.num_classes < 2) throw DomainError("flat-file schema needs dim > 0 and K >= 2");
  const std::string bytes = read_file_bytes(path);
  LabeledDataset out = schema.format == FlatFormat::kCsv ? parse_csv(bytes, schema) : parse_binary(bytes, schema);
  out.num_classes = schema.num_classes;
  out.tag = schema.tag;
  out.provenance = "file:sha256:" + sha256_hex(bytes);
  out.validate();
  return out;
}

}  // namespace ini::data
