#include <gtest/gtest.h>

#include <filesystem>
#include <nlohmann/json.hpp>
#include <random>
#include <sstream>

#include "bnn/modelio.hpp"
#include "support/errors.hpp"
#include "support/models.hpp"
#include "support/tempdir.hpp"

using namespace bnn;
using json = nlohmann::json;

namespace {

ExecPlan random_plan(std::mt19937_64& rng) {
  ExecPlan p;
  p.model_name = "m" + std::to_string(rng() % 1000);
  p.model_hash = sha256_hex(std::to_string(rng()));
  p.batch_size = std::size_t{1} << (rng() % 8);
  for (std::size_t i = 0, n = 1 + rng() % 20; i < n; ++i) p.assignments.push_back(kAllConfigs[rng() % 8]);
  p.predicted_batch_ns = static_cast<std::int64_t>(rng() >> 20);
  p.predicted_total_ns = static_cast<std::int64_t>(rng() >> 10);
  p.dataset_images = rng() % 100000;
  p.workers = 1 + rng() % 64;
  p.window_rows = 1 + rng() % 4;
  return p;
}

ProfileTable random_profile(std::mt19937_64& rng) {
  ProfileTable t;
  auto& m = t.metadata;
  m.model_name = "net";
  m.model_hash = sha256_hex(std::to_string(rng()));
  m.layer_count = 1 + rng() % 5;
  m.workers = 1 + rng() % 8;
  m.window_rows = 1 + rng() % 3;
  m.fuse_transfers = rng() & 1U;
  m.host = "host \"quoted\" " + std::to_string(rng() % 100);
  m.timestamp = "2026-01-01T00:00:00Z";
  m.warmups = rng() % 4;
  m.reps = 1 + rng() % 9;
  m.dataset_images = rng() % 20000;
  m.configs = {ParallelConfig::CPU, ParallelConfig::X, ParallelConfig::XYZ};
  m.batch_sizes = {1, 2};
  for (std::size_t b : m.batch_sizes)
    for (std::size_t l = 0; l < m.layer_count; ++l)
      for (ParallelConfig c : m.configs) {
        ProfileEntry e;
        e.overhead_ns = static_cast<std::int64_t>(rng() % 1000000);
        e.compute_ns = static_cast<std::int64_t>(rng() % 100000000);
        e.reps = m.reps;
        e.spread = static_cast<double>(rng() % 100000) / 7919.0;
        t.entries[{l, c, b}] = e;
      }
  return t;
}

std::string csv_row(std::size_t label, std::size_t pixels, int value = 0) {
  std::string s = std::to_string(label);
  for (std::size_t i = 0; i < pixels; ++i) s += "," + std::to_string(value);
  return s + "\n";
}

}  // namespace

TEST(Encoding, Base64AndSha256) {
  const std::vector<std::uint8_t> bytes{'f', 'o', 'o', 'b', 'a'};
  EXPECT_EQ(base64_encode(bytes), "Zm9vYmE=");
  EXPECT_EQ(base64_decode("Zm9vYmE="), bytes);
  EXPECT_TRUE(base64_decode("").empty());
  EXPECT_EQ(code_of([] { base64_decode("Zm9v!mE="); }), ErrorCode::Parse);
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  const std::vector<Word> words{0x0807060504030201ULL};
  EXPECT_EQ(words_to_bytes(words), (std::vector<std::uint8_t>{1, 2, 3, 4, 5, 6, 7, 8}));
}

TEST(ModelIo, RoundTripIsByteStable) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 20; ++i) {
    ModelSpec m = testmodels::tiny(rng(), 1 + rng() % 3, 2 * (1 + rng() % 5));
    m.name = "tiny-" + std::to_string(i);
    const std::string text = serialize_model(m);
    const ModelSpec back = parse_model(text);
    EXPECT_EQ(serialize_model(back), text);
    EXPECT_EQ(model_hash(back), model_hash(m));
  }
}

TEST(ModelIo, ShippedArchitecturesThroughFiles) {
  TempDir dir;
  for (auto [arch, layers] : {std::pair{Architecture::Fashion, 10u}, std::pair{Architecture::Cifar10, 19u}}) {
    const ModelSpec m = export_synthetic_model(arch, 7);
    save_model(m, dir / "m.model.json");
    const ModelSpec back = load_model(dir / "m.model.json");
    EXPECT_EQ(back.layers.size(), layers);
    EXPECT_TRUE(validate_model(back).empty());
    EXPECT_EQ(serialize_model(back), serialize_model(m));
  }
}

TEST(ModelIo, SyntheticIsDeterministicInSeed) {
  EXPECT_EQ(serialize_model(export_synthetic_model(Architecture::Fashion, 7)),
            serialize_model(export_synthetic_model(Architecture::Fashion, 7)));
  EXPECT_NE(model_hash(export_synthetic_model(Architecture::Fashion, 7)),
            model_hash(export_synthetic_model(Architecture::Fashion, 8)));
}

TEST(ModelIo, SyntheticThresholdRange) {
  const ModelSpec m = export_synthetic_model(Architecture::Fashion, 7);
  const std::int64_t bits[] = {0, 0, 9, 0, 0, 64 * 9, 0, 0, 3136};
  for (std::size_t i : {2u, 5u, 8u}) {
    for (auto t : m.layers[i].thresholds.values) {
      EXPECT_LE(std::abs(static_cast<std::int64_t>(t)), bits[i]) << "layer " << i + 1;
    }
  }
}

TEST(ModelIo, TruncatedBlobNamesLayer) {
  json j = json::parse(serialize_model(export_synthetic_model(Architecture::Cifar10, 1)));
  auto& blob = j["layers"][2]["weights"]["blob"];
  auto bytes = base64_decode(blob.get<std::string>());
  bytes.resize(bytes.size() - 8);
  blob = base64_encode(bytes);
  const std::string text = j.dump();
  EXPECT_EQ(code_of([&] { parse_model(text); }), ErrorCode::Validation);
  EXPECT_NE(message_of([&] { parse_model(text); }).find("blob length mismatch layer 3"), std::string::npos);
}

TEST(ModelIo, Errors) {
  const std::string good = serialize_model(export_synthetic_model(Architecture::Fashion, 1));
  json j = json::parse(good);
  j["format_version"] = 99;
  EXPECT_EQ(code_of([&] { parse_model(j.dump()); }), ErrorCode::UnsupportedVersion);

  const std::string broken = good.substr(0, good.size() / 2);
  EXPECT_EQ(code_of([&] { parse_model(broken); }), ErrorCode::Parse);
  EXPECT_NE(message_of([&] { parse_model(broken); }).find("at byte"), std::string::npos);

  j = json::parse(good);
  j["layers"].erase(1);
  EXPECT_EQ(code_of([&] { parse_model(j.dump()); }), ErrorCode::Validation);

  j = json::parse(good);
  j["layers"][0]["kind"] = "conv_float";
  EXPECT_EQ(code_of([&] { parse_model(j.dump()); }), ErrorCode::Parse);

  EXPECT_EQ(code_of([] { load_model("/nonexistent/m.json"); }), ErrorCode::Io);
}

TEST(Dataset, RowsAndPixelsPreserved) {
  const InputSpec in{1, 2, 2};
  const Dataset d = parse_dataset("3,0,255,17,4\n0,1,2,3,4\n", in, 10);
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d.images.dims, (Dims{2, 1, 2, 2}));
  EXPECT_EQ(d.images.values, (std::vector<std::int32_t>{0, 255, 17, 4, 1, 2, 3, 4}));
  EXPECT_EQ(d.labels, (std::vector<std::size_t>{3, 0}));
  EXPECT_EQ(parse_dataset("", in).size(), 0u);
}

TEST(Dataset, ArityLabelAndRangeErrors) {
  const InputSpec fashion{1, 28, 28};
  const std::string text = csv_row(1, 784) + csv_row(2, 783);
  EXPECT_EQ(code_of([&] { parse_dataset(text, fashion, 10); }), ErrorCode::Parse);
  EXPECT_NE(message_of([&] { parse_dataset(text, fashion, 10); }).find("row 2"), std::string::npos);
  EXPECT_EQ(code_of([&] { parse_dataset(csv_row(10, 784), fashion, 10); }), ErrorCode::LabelOutOfRange);
  EXPECT_EQ(code_of([&] { parse_dataset(csv_row(1, 784, 256), fashion, 10); }), ErrorCode::Parse);
  EXPECT_EQ(code_of([] { load_dataset("/nonexistent/d.csv", InputSpec{1, 1, 1}); }), ErrorCode::Io);
}

TEST(Dataset, TenThousandImages) {
  TempDir dir;
  const InputSpec in{1, 28, 28};
  const Dataset d = synthetic_dataset(in, 10000, 10, 3);
  save_dataset(d, dir / "testing.csv");
  const Dataset back = load_dataset(dir / "testing.csv", in, 10);
  EXPECT_EQ(back.size(), 10000u);
  EXPECT_EQ(back.images, d.images);
  EXPECT_EQ(back.labels, d.labels);
}

TEST(PlanIo, RoundTripAndHashBinding) {
  TempDir dir;
  std::mt19937_64 rng(2);
  for (int i = 0; i < 50; ++i) {
    const ExecPlan p = random_plan(rng);
    const std::string text = serialize_plan(p);
    EXPECT_EQ(parse_plan(text), p);
    EXPECT_EQ(serialize_plan(parse_plan(text)), text);
  }

  const ModelSpec fashion = export_synthetic_model(Architecture::Fashion, 1);
  const ModelSpec cifar = export_synthetic_model(Architecture::Cifar10, 1);
  ExecPlan p;
  p.model_name = fashion.name;
  p.model_hash = model_hash(fashion);
  p.assignments.assign(fashion.layers.size(), ParallelConfig::CPU);
  save_plan(p, dir / "p.plan.json");
  EXPECT_EQ(load_plan(dir / "p.plan.json", fashion), p);
  EXPECT_EQ(code_of([&] { load_plan(dir / "p.plan.json", cifar); }), ErrorCode::ModelHashMismatch);

  json j = json::parse(serialize_plan(p));
  j["assignments"][0] = "W";
  EXPECT_EQ(code_of([&] { parse_plan(j.dump()); }), ErrorCode::Parse);
  EXPECT_NE(message_of([&] { parse_plan(j.dump()); }).find("'W'"), std::string::npos);
}

TEST(ProfileIo, RoundTrip) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 30; ++i) {
    const ProfileTable t = random_profile(rng);
    const std::string text = serialize_profile(t);
    EXPECT_EQ(parse_profile(text), t);
    EXPECT_EQ(serialize_profile(parse_profile(text)), text);
  }
}

TEST(ProfileIo, PersistsPerBatchArgmin) {
  std::mt19937_64 rng(4);
  const ProfileTable t = random_profile(rng);
  const json j = json::parse(serialize_profile(t));
  ASSERT_TRUE(j.contains("per_batch_argmin"));
  EXPECT_EQ(j["per_batch_argmin"].size(), t.metadata.batch_sizes.size());
}
