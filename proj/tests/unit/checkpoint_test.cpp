#include <gtest/gtest.h>

#include <filesystem>

#include "ini/digest.hpp"
#include "ini/error.hpp"
#include "ini/nets/checkpoint.hpp"
#include "ini/rng.hpp"

using namespace ini;

namespace {

nets::Checkpoint sample_checkpoint() {
  nets::Checkpoint c{nets::Classifier({{6, 8, 3}, nets::Activation::kRelu}, 42), "digest-abc", {}};
  c.metadata.mode = "ini";
  c.metadata.benign_accuracy = 0.93;
  c.metadata.epoch = 30;
  c.metadata.gamma1 = 0.03;
  c.metadata.gamma2 = 0.03;
  c.metadata.beta = 1.0;
  c.metadata.threshold = 0.9;
  return c;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("ini_ckpt_" + name)).string();
}

}  // namespace

TEST(Checkpoint, SaveLoadSaveIsByteIdentical) {
  const auto c = sample_checkpoint();
  const std::string path = temp_path("a.ckpt");
  nets::save_checkpoint(c, path);
  const auto loaded = nets::load_checkpoint(path);
  EXPECT_EQ(nets::serialize_checkpoint(loaded), read_file_bytes(path));
  EXPECT_EQ(loaded.config_digest, "digest-abc");
  EXPECT_EQ(loaded.metadata.mode, "ini");
  EXPECT_DOUBLE_EQ(loaded.metadata.benign_accuracy, 0.93);
  EXPECT_EQ(loaded.metadata.epoch, 30u);
  EXPECT_EQ(loaded.model.seed(), 42u);
  for (std::size_t i = 0; i < c.model.num_params(); ++i) {
    EXPECT_EQ(loaded.model.params().values()[i], c.model.params().values()[i]);
  }
  std::filesystem::remove(path);
}

TEST(Checkpoint, RoundTripPreservesPredictions) {
  const auto c = sample_checkpoint();
  const auto loaded = nets::parse_checkpoint(nets::serialize_checkpoint(c));
  Rng rng(1);
  std::vector<double> v(10 * 6);
  for (auto& e : v) e = rng.normal();
  const auto x = ad::Tensor::from({10, 6}, v);
  const auto a = c.model.predict_proba(x), b = loaded.model.predict_proba(x);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]);
}

TEST(Checkpoint, EditedLayerDimsRaiseArchitectureMismatch) {
  std::string bytes = nets::serialize_checkpoint(sample_checkpoint());
  const auto pos = bytes.find("[6,8,3]");
  ASSERT_NE(pos, std::string::npos);
  bytes.replace(pos, 7, "[6,9,3]");
  EXPECT_THROW(nets::parse_checkpoint(bytes), ArchitectureMismatchError);
}

TEST(Checkpoint, TruncatedPayloadRaisesTruncation) {
  const std::string bytes = nets::serialize_checkpoint(sample_checkpoint());
  for (std::size_t cut : {bytes.size() - 1, bytes.size() - 10, std::size_t{6}, std::size_t{2}}) {
    EXPECT_THROW(nets::parse_checkpoint(bytes.substr(0, cut)), TruncatedFileError);
  }
}

TEST(Checkpoint, CorruptedPayloadRaisesChecksum) {
  std::string bytes = nets::serialize_checkpoint(sample_checkpoint());
  bytes[bytes.size() - 12] ^= 0x40;
  EXPECT_THROW(nets::parse_checkpoint(bytes), ChecksumError);
}

TEST(Checkpoint, BadMagicAndTrailingBytesAreRejected) {
  std::string bytes = nets::serialize_checkpoint(sample_checkpoint());
  EXPECT_THROW(nets::parse_checkpoint(bytes + "x"), FormatError);
  bytes[0] = 'X';
  EXPECT_THROW(nets::parse_checkpoint(bytes), FormatError);
  EXPECT_THROW(nets::load_checkpoint(temp_path("missing.ckpt")), Error);
}

TEST(Digest, KnownVectors) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  const std::string s = "123456789";
  EXPECT_EQ(crc32({reinterpret_cast<const unsigned char*>(s.data()), s.size()}), 0xCBF43926u);
}
