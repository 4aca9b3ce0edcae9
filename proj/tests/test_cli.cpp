#include <gtest/gtest.h>

#include <fstream>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "commands.hpp"
#include "support/models.hpp"
#include "support/tempdir.hpp"

using namespace bnn;
using json = nlohmann::json;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "bnn");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  const int code = cli::main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::size_t line_count(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

/// A tiny model and a small dataset on disk.
struct Fixture {
  TempDir dir;
  std::string model = (dir / "tiny.model.json").string();
  std::string data = (dir / "tiny.csv").string();
  ModelSpec spec = testmodels::tiny(3);

  explicit Fixture(std::size_t images = 10) {
    save_model(spec, model);
    save_dataset(synthetic_dataset(spec.input, images, spec.num_classes, 4), data);
  }
};

}  // namespace

TEST(Cli, ExitCodesAreDistinctPerCategory) {
  std::set<int> codes;
  for (ErrorCode c : {ErrorCode::Io, ErrorCode::Parse, ErrorCode::Validation, ErrorCode::UnsupportedVersion,
                      ErrorCode::IncompleteTable, ErrorCode::ModelHashMismatch, ErrorCode::BadRange,
                      ErrorCode::LabelOutOfRange, ErrorCode::ShapeMismatch, ErrorCode::InvalidArgument,
                      ErrorCode::AlreadyExists}) {
    const int code = cli::exit_code(c);
    EXPECT_GT(code, 1);
    codes.insert(code);
  }
  EXPECT_EQ(codes.size(), 11u);
  EXPECT_EQ(invoke({"frobnicate"}).code, 1);
  EXPECT_EQ(invoke({"--help"}).code, 0);
}

TEST(Cli, GenModelDeterministicAndGuarded) {
  TempDir dir;
  const std::string a = (dir / "a.json").string(), b = (dir / "b.json").string();
  ASSERT_EQ(invoke({"gen-model", "--arch", "cifar10", "--seed", "1", "--out", a}).code, 0);
  ASSERT_EQ(invoke({"gen-model", "--arch", "cifar10", "--seed", "1", "--out", b}).code, 0);
  EXPECT_EQ(read_file(a), read_file(b));
  EXPECT_EQ(load_model(a).layers.size(), 19u);

  const Outcome again = invoke({"gen-model", "--arch", "cifar10", "--seed", "2", "--out", a});
  EXPECT_EQ(again.code, cli::exit_code(ErrorCode::AlreadyExists));
  EXPECT_EQ(read_file(a), read_file(b));
  EXPECT_EQ(invoke({"gen-model", "--arch", "fashion", "--seed", "2", "--out", a, "--force"}).code, 0);
  EXPECT_EQ(load_model(a).layers.size(), 10u);
}

TEST(Cli, ValidateAndGenData) {
  Fixture f;
  const std::string csv = (f.dir / "more.csv").string();
  EXPECT_EQ(invoke({"gen-data", "--model", f.model, "--count", "7", "--seed", "1", "--out", csv}).code, 0);
  const Outcome v = invoke({"--json", "validate", "--model", f.model, "--data", csv});
  ASSERT_EQ(v.code, 0) << v.err;
  const json j = json::parse(v.out);
  EXPECT_EQ(j["images"], 7);
  EXPECT_EQ(j["hash"], model_hash(f.spec));
}

TEST(Cli, TuneMissingDataIsIo) {
  Fixture f;
  const std::string missing = (f.dir / "nope.csv").string();
  const Outcome o = invoke({"tune", "--model", f.model, "--data", missing, "--outpath", f.dir.path().string()});
  EXPECT_EQ(o.code, cli::exit_code(ErrorCode::Io));
  EXPECT_NE(o.err.find(missing), std::string::npos) << o.err;
}

TEST(Cli, TuneBadRange) {
  Fixture f;
  EXPECT_EQ(invoke({"tune", "--model", f.model, "--data", f.data, "--batch-lower", "3", "--batch-upper", "1"}).code,
            cli::exit_code(ErrorCode::BadRange));
}

TEST(Cli, TuneThenRunMatchesReference) {
  Fixture f;
  const std::string out = f.dir.path().string();
  const Outcome t = invoke({"--json", "tune", "--model", f.model, "--data", f.data, "--batch-upper", "2", "--reps",
                            "2", "--warmups", "0", "--threads", "2", "--outpath", out});
  ASSERT_EQ(t.code, 0) << t.err;
  const json tj = json::parse(t.out);
  const ExecPlan plan = load_plan(f.dir / "tiny.plan.json", f.spec);
  EXPECT_TRUE(std::set<std::size_t>({1, 2, 4}).count(plan.batch_size));
  EXPECT_EQ(plan.workers, 2u);
  EXPECT_EQ(tj["plan"]["batch_size"], plan.batch_size);
  EXPECT_EQ(load_profile(f.dir / "tiny.profile.json").metadata.batch_sizes, (std::vector<std::size_t>{1, 2, 4}));
  const std::string summary = read_file(f.dir / "tiny.summary.md");
  EXPECT_NE(summary.find("| config |"), std::string::npos);

  const std::string preds = (f.dir / "preds.txt").string();
  const Outcome r = invoke({"--json", "run", "--plan", (f.dir / "tiny.plan.json").string(), "--model", f.model, "--data",
                            f.data, "--predictions", preds, "--threads", "3"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("warning"), std::string::npos);
  const json rj = json::parse(r.out);
  EXPECT_EQ(rj["images"], 10);
  EXPECT_EQ(rj["layers"].size(), f.spec.layers.size());

  const Dataset d = load_dataset(f.data, f.spec.input);
  const InferenceResult ref = reference_infer(f.spec, d.images);
  std::string want;
  for (auto p : ref.predictions) want += std::to_string(p) + "\n";
  EXPECT_EQ(read_file(preds), want);
}

TEST(Cli, RunUsesRemainderBatches) {
  Fixture f;
  const PreparedModel m(f.spec);
  const Dataset d = load_dataset(f.data, f.spec.input);
  Engine engine(EngineConfig{2});
  const auto xyz = baseline_plans(f.spec).full_xyz;
  const cli::DatasetRun run = cli::execute_dataset(engine, m, d, xyz, 4);
  EXPECT_EQ(run.batches, (std::vector<std::size_t>{4, 4, 2}));
  EXPECT_EQ(run.predictions, reference_infer(f.spec, d.images).predictions);
}

TEST(Cli, RunRefusesTamperedPlanAndEmptyData) {
  Fixture f;
  ExecPlan p;
  p.model_name = f.spec.name;
  p.model_hash = model_hash(f.spec);
  p.assignments.assign(f.spec.layers.size(), ParallelConfig::CPU);
  const std::string plan = (f.dir / "p.plan.json").string();
  save_plan(p, plan);
  EXPECT_EQ(invoke({"run", "--plan", plan, "--model", f.model, "--data", f.data}).code, 0);

  p.model_hash[0] = p.model_hash[0] == 'a' ? 'b' : 'a';
  save_plan(p, plan);
  EXPECT_EQ(invoke({"run", "--plan", plan, "--model", f.model, "--data", f.data}).code,
            cli::exit_code(ErrorCode::ModelHashMismatch));

  const std::string empty = (f.dir / "empty.csv").string();
  write_file(empty, "");
  p.model_hash = model_hash(f.spec);
  save_plan(p, plan);
  EXPECT_EQ(invoke({"run", "--plan", plan, "--model", f.model, "--data", empty}).code,
            cli::exit_code(ErrorCode::InvalidArgument));
}

TEST(Cli, SingleBatchTune) {
  Fixture f;
  const Outcome t = invoke({"tune", "--model", f.model, "--data", f.data, "--batch-upper", "0", "--reps", "1",
                            "--warmups", "0", "--outpath", f.dir.path().string()});
  ASSERT_EQ(t.code, 0) << t.err;
  EXPECT_EQ(load_plan(f.dir / "tiny.plan.json").batch_size, 1u);
  EXPECT_EQ(load_profile(f.dir / "tiny.profile.json").metadata.batch_sizes, (std::vector<std::size_t>{1}));
}

TEST(Cli, CompareCsvShape) {
  Fixture f;
  const Outcome c = invoke({"compare", "--model", f.model, "--data", f.data, "--batch-upper", "3", "--reps", "1",
                            "--warmups", "0", "--measure-reps", "1", "--outpath", f.dir.path().string()});
  ASSERT_EQ(c.code, 0) << c.err;
  const std::string csv = read_file(f.dir / "tiny.compare.csv");
  EXPECT_EQ(line_count(csv), 1u + 4);
  std::istringstream lines(csv);
  std::string line;
  while (std::getline(lines, line)) EXPECT_EQ(std::count(line.begin(), line.end(), ','), 4) << line;
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "batch,cpu_only_ns,naive_x_ns,full_xyz_ns,efficient_ns");
  EXPECT_NE(read_file(f.dir / "tiny.compare.md").find("fastest"), std::string::npos);
}
