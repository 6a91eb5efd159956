#include "ini/nets/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <nlohmann/json.hpp>

#include "ini/digest.hpp"
#include "ini/error.hpp"

namespace ini::nets {

namespace {

constexpr std::string_view kMagic = "INI1";

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

std::uint32_t get_u32(std::string_view bytes, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[at + static_cast<std::size_t>(i)])) << (8 * i);
  }
  return v;
}

nlohmann::json metadata_json(const CheckpointMetadata& m) {
  return {{"mode", m.mode},
          {"benign_accuracy", m.benign_accuracy},
          {"epoch", m.epoch},
          {"gamma1", m.gamma1},
          {"gamma2", m.gamma2},
          {"beta", m.beta},
          {"threshold", m.threshold},
          {"threshold_met", m.threshold_met}};
}

CheckpointMetadata metadata_from(const nlohmann::json& j) {
  CheckpointMetadata m;
  m.mode = j.at("mode").get<std::string>();
  m.benign_accuracy = j.at("benign_accuracy").get<double>();
  m.epoch = j.at("epoch").get<std::size_t>();
  m.gamma1 = j.at("gamma1").get<double>();
  m.gamma2 = j.at("gamma2").get<double>();
  m.beta = j.at("beta").get<double>();
  m.threshold = j.at("threshold").get<double>();
  m.threshold_met = j.at("threshold_met").get<bool>();
  return m;
}

}  // namespace

std::string architecture_digest(const Architecture& architecture) {
  return sha256_hex(architecture.descriptor());
}

std::string serialize_checkpoint(const Checkpoint& checkpoint) {
  const Classifier& model = checkpoint.model;
  const Architecture& arch = model.architecture();
  nlohmann::json header = {
      {"format", "ini-checkpoint"},
      {"architecture", {{"layer_dims", arch.layer_dims}, {"activation", to_string(arch.activation)}}},
      {"architecture_digest", architecture_digest(arch)},
      {"seed", model.seed()},
      {"config_digest", checkpoint.config_digest},
      {"param_count", model.num_params()},
      {"metadata", metadata_json(checkpoint.metadata)},
  };
  const std::string header_text = header.dump();

  std::string payload;
  payload.reserve(4 * model.num_params());
  for (double v : model.params().values()) {
    put_u32(payload, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }

  std::string out;
  out.append(kMagic);
  put_u32(out, static_cast<std::uint32_t>(header_text.size()));
  out.append(header_text);
  out.append(payload);
  put_u32(out, crc32(std::span<const unsigned char>(reinterpret_cast<const unsigned char*>(payload.data()),
                                                    payload.size())));
  return out;
}

Checkpoint parse_checkpoint(std::string_view bytes) {
  if (bytes.size() < kMagic.size() + 4) throw TruncatedFileError("checkpoint shorter than its preamble");
  if (bytes.substr(0, kMagic.size()) != kMagic) throw FormatError("checkpoint magic is not INI1");
  const std::size_t header_len = get_u32(bytes, 4);
  const std::size_t header_at = 8;
  if (bytes.size() < header_at + header_len) throw TruncatedFileError("checkpoint header truncated");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(header_at, header_len));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint header is not valid JSON: ") + e.what());
  }

  Architecture arch;
  std::string stored_digest;
  std::uint64_t seed = 0;
  std::size_t param_count = 0;
  Checkpoint result{Classifier(Architecture{{1, 2}, Activation::kRelu}, 0), {}, {}};
  try {
    arch.layer_dims = header.at("architecture").at("layer_dims").get<std::vector<std::size_t>>();
    arch.activation = parse_activation(header.at("architecture").at("activation").get<std::string>());
    stored_digest = header.at("architecture_digest").get<std::string>();
    seed = header.at("seed").get<std::uint64_t>();
    param_count = header.at("param_count").get<std::size_t>();
    result.config_digest = header.at("config_digest").get<std::string>();
    result.metadata = metadata_from(header.at("metadata"));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint header is missing fields: ") + e.what());
  }

  if (architecture_digest(arch) != stored_digest) {
    throw ArchitectureMismatchError("checkpoint architecture " + arch.descriptor() +
                                    " does not match its header digest");
  }
  const auto layout = Classifier::layout_for(arch);
  if (layout->size() != param_count) {
    throw ArchitectureMismatchError("checkpoint declares " + std::to_string(param_count) +
                                    " parameters but " + arch.descriptor() + " has " +
                                    std::to_string(layout->size()));
  }

  const std::size_t payload_at = header_at + header_len;
  const std::size_t payload_len = 4 * param_count;
  if (bytes.size() < payload_at + payload_len + 4) {
    throw TruncatedFileError("checkpoint payload truncated: expected " + std::to_string(payload_len + 4) +
                             " bytes after header, found " + std::to_string(bytes.size() - payload_at));
  }
  if (bytes.size() > payload_at + payload_len + 4) throw FormatError("trailing bytes after checkpoint");

  const std::string_view payload = bytes.substr(payload_at, payload_len);
  const std::uint32_t expected_crc = get_u32(bytes, payload_at + payload_len);
  const std::uint32_t actual_crc =
      crc32(std::span<const unsigned char>(reinterpret_cast<const unsigned char*>(payload.data()), payload.size()));
  if (expected_crc != actual_crc) throw ChecksumError("checkpoint payload checksum mismatch");

  std::vector<double> values(param_count);
  for (std::size_t i = 0; i < param_count; ++i) {
    values[i] = static_cast<double>(std::bit_cast<float>(get_u32(payload, 4 * i)));
  }
  result.model = Classifier(arch, ad::ParamVector::from_values(layout, std::move(values)), seed);
  return result;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path) {
  write_file_bytes(path, serialize_checkpoint(checkpoint));
}

Checkpoint load_checkpoint(const std::string& path) { return parse_checkpoint(read_file_bytes(path)); }

}  // namespace ini::nets
