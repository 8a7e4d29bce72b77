#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "deltamix/bytes.hpp"
#include "deltamix/calib_io.hpp"
#include "deltamix/cli.hpp"
#include "deltamix/container.hpp"
#include "deltamix/pipeline.hpp"
#include "deltamix/report.hpp"
#include "helpers.hpp"

using namespace deltamix;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun run(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) break;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = testutil::scratch_dir(::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir / "delta");
    fs::create_directories(dir / "calib");
    const std::vector<std::pair<std::string, std::pair<int, int>>> layers{
        {"blk10.q", {24, 16}}, {"blk2.q", {16, 16}}, {"blk9.q", {16, 20}}};
    std::uint64_t seed = 1;
    for (const auto& [name, dims] : layers) {
      save_matrix(dir / "delta" / (name + ".calx"), synth_delta(dims.first, dims.second, 0.85, seed));
      save_matrix(dir / "calib" / (name + ".calx"),
                  synth_activations(dims.second, 64, Distribution{}, seed + 100));
      ++seed;
    }
    save_matrix(dir / "delta" / "blk0.zero.calx", DenseMatrix(8, 16));
    save_matrix(dir / "calib" / "blk0.zero.calx", synth_activations(16, 64, Distribution{}, 77));
  }
  void TearDown() override { fs::remove_all(dir); }

  std::string p(const std::string& rel) const { return (dir / rel).string(); }

  CliRun compress(std::vector<std::string> extra = {}) {
    std::vector<std::string> args{"compress", "--delta", p("delta"), "--calib", p("calib"),
                                  "--out", p("c.dmix"), "--report", p("r.jsonl")};
    args.insert(args.end(), extra.begin(), extra.end());
    return run(args);
  }

  fs::path dir;
};

}  // namespace

TEST_F(CliTest, CompressVerifyHappyPath) {
  const auto c = compress();
  ASSERT_EQ(c.code, cli::kOk) << c.err;
  const auto rows = parse_csv(c.out);
  ASSERT_EQ(rows.size(), 5u);
  // Natural order: blk0 < blk2 < blk9 < blk10.
  EXPECT_EQ(rows[1][0], "blk0.zero");
  EXPECT_EQ(rows[2][0], "blk2.q");
  EXPECT_EQ(rows[3][0], "blk9.q");
  EXPECT_EQ(rows[4][0], "blk10.q");
  EXPECT_NE(c.err.find("blk0.zero"), std::string::npos);  // degenerate scheme warning

  const auto v = run({"verify", "--in", p("c.dmix"), "--delta", p("delta"), "--calib", p("calib")});
  ASSERT_EQ(v.code, cli::kOk) << v.err;
  const auto table = parse_csv(v.out);
  ASSERT_EQ(table.size(), 5u);
  for (std::size_t i = 1; i < table.size(); ++i) {
    EXPECT_EQ(table[i][3], "1");
    EXPECT_EQ(table[i][4], "1");
  }
  EXPECT_NE(v.out.find("group,layers,end_to_end,all,out"), std::string::npos);
  EXPECT_NE(v.out.find("\nLow,"), std::string::npos);
  EXPECT_NE(v.out.find("\nHigh,"), std::string::npos);
}

TEST_F(CliTest, ReconstructMatchesInMemoryPipeline) {
  ASSERT_EQ(compress().code, cli::kOk);
  ASSERT_EQ(run({"reconstruct", "--in", p("c.dmix"), "--layer", "blk9.q", "--out", p("w.calx")}).code, cli::kOk);
  const auto job = make_job("blk9.q", load_matrix(p("delta/blk9.q.calx")),
                            load_matrix(p("calib/blk9.q.calx")));
  const auto in_memory = compress_layer(job).reconstruct();
  EXPECT_LE(max_abs(load_matrix(p("w.calx")) - in_memory), 1e-6);

  ASSERT_EQ(run({"reconstruct", "--in", p("c.dmix"), "--layer", "blk0.zero", "--out", p("z.calx")}).code, cli::kOk);
  EXPECT_EQ(load_matrix(p("z.calx")), DenseMatrix(8, 16));
  EXPECT_EQ(run({"reconstruct", "--in", p("c.dmix"), "--layer", "nope", "--out", p("n.calx")}).code, cli::kNotFound);
}

TEST_F(CliTest, AlphaZeroIsInfeasibleWithHint) {
  const auto r = compress({"--alpha", "0"});
  EXPECT_EQ(r.code, cli::kInfeasible);
  EXPECT_NE(r.err.find("minimal budget"), std::string::npos);
}

TEST_F(CliTest, InfeasibleWithoutZeroBit) {
  const auto r = compress({"--bits", "4,8", "--alpha", "0.01"});
  EXPECT_EQ(r.code, cli::kInfeasible);
}

TEST_F(CliTest, TamperedContainerFailsIntegrity) {
  ASSERT_EQ(compress().code, cli::kOk);
  auto bytes = read_file(p("c.dmix"));
  bytes[bytes.size() / 2] ^= 0x01;
  write_file(p("c.dmix"), bytes);
  const auto v = run({"verify", "--in", p("c.dmix"), "--delta", p("delta"), "--calib", p("calib")});
  EXPECT_EQ(v.code, cli::kIntegrity);
}

TEST_F(CliTest, BudgetViolationFailsIntegrity) {
  ASSERT_EQ(compress().code, cli::kOk);
  auto c = load_container(p("c.dmix"));
  c.layers.back().budget_bits = 1;
  save_container(p("c.dmix"), c);
  const auto v = run({"verify", "--in", p("c.dmix"), "--delta", p("delta"), "--calib", p("calib")});
  EXPECT_EQ(v.code, cli::kIntegrity);
  EXPECT_NE(v.out.find(",0,1,"), std::string::npos);
}

TEST_F(CliTest, EmptyContainerAndMissingFiles) {
  save_container(p("empty.dmix"), CompressedDelta{});
  EXPECT_EQ(run({"verify", "--in", p("empty.dmix"), "--delta", p("delta"), "--calib", p("calib")}).code, cli::kNotFound);
  EXPECT_EQ(run({"verify", "--in", p("none.dmix"), "--delta", p("delta"), "--calib", p("calib")}).code, cli::kNotFound);
  fs::create_directories(dir / "nothing");
  EXPECT_EQ(run({"compress", "--delta", p("nothing"), "--calib", p("calib"), "--out", p("x")}).code, cli::kNotFound);
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(run({}).code, cli::kUsage);
  EXPECT_EQ(run({"explode"}).code, cli::kUsage);
  EXPECT_EQ(run({"compress", "--delta", p("delta")}).code, cli::kUsage);
  EXPECT_EQ(compress({"--alpha", "0.1", "--gbit", "1"}).code, cli::kUsage);
  EXPECT_EQ(compress({"--bits", "0,1,2"}).code, cli::kUsage);
  EXPECT_EQ(compress({"--alpha", "2"}).code, cli::kUsage);
  EXPECT_EQ(run({"--help"}).code, cli::kOk);
}

TEST_F(CliTest, LenientSkipsBadLayer) {
  save_matrix(p("calib/blk2.q.calx"), synth_activations(5, 10, Distribution{}, 1));
  EXPECT_EQ(compress().code, cli::kUsage);
  const auto r = compress({"--lenient"});
  ASSERT_EQ(r.code, cli::kOk);
  EXPECT_NE(r.err.find("blk2.q"), std::string::npos);
  EXPECT_EQ(load_container(p("c.dmix")).layers.size(), 3u);
}

TEST_F(CliTest, SynthCalibrationIsReproducible) {
  const std::vector<std::string> args{"compress", "--delta", p("delta"), "--calib", "synth:heavy_tail:2:n=40",
                                      "--seed", "5", "--out", p("a.dmix")};
  ASSERT_EQ(run(args).code, cli::kOk);
  auto again = args;
  again.back() = p("b.dmix");
  ASSERT_EQ(run(again).code, cli::kOk);
  EXPECT_EQ(read_file(p("a.dmix")), read_file(p("b.dmix")));
  const auto v = run({"verify", "--in", p("a.dmix"), "--delta", p("delta"), "--calib",
                      "synth:heavy_tail:2:n=40", "--seed", "5"});
  EXPECT_EQ(v.code, cli::kOk) << v.err;
  EXPECT_EQ(run({"compress", "--delta", p("delta"), "--calib", "synth:bogus", "--out", p("x")}).code, cli::kUsage);
}

TEST_F(CliTest, ReportEmitters) {
  ASSERT_EQ(compress().code, cli::kOk);
  const auto scheme = run({"report", "--in", p("r.jsonl"), "--emit", "scheme_csv", "--layer", "blk10.q"});
  ASSERT_EQ(scheme.code, cli::kOk);
  EXPECT_EQ(parse_csv(scheme.out).size(), 1u + 16u);  // header + r rows

  const auto fig = run({"report", "--in", p("r.jsonl"), "--emit", "figure2_csv", "--layer", "blk10.q"});
  ASSERT_EQ(fig.code, cli::kOk);
  const auto rows = parse_csv(fig.out);
  const std::vector<std::string> header{"row", "scaling", "difference@0", "difference@2", "difference@3",
                                        "difference@4", "difference@5", "difference@6", "difference@7",
                                        "difference@8"};
  EXPECT_EQ(rows[0], header);
  // Recompute from the in-memory table.
  const auto job = make_job("blk10.q", load_matrix(p("delta/blk10.q.calx")),
                            load_matrix(p("calib/blk10.q.calx")));
  const auto res = compress_layer(job);
  ASSERT_EQ(rows.size(), 1u + res.sigma.size());
  for (std::size_t i = 0; i < res.sigma.size(); ++i) {
    EXPECT_EQ(std::stod(rows[i + 1][1]), res.sigma[i] * res.sigma[i]);
    for (std::size_t k = 0; k < res.table.bits.size(); ++k)
      EXPECT_EQ(std::stod(rows[i + 1][2 + k]), res.table.difference(i, k));
  }

  const auto err = run({"report", "--in", p("r.jsonl"), "--emit", "error_csv", "--layer", "blk2.q"});
  ASSERT_EQ(err.code, cli::kOk);
  EXPECT_EQ(parse_csv(err.out).size(), 1u + 16u * 8u);

  EXPECT_EQ(run({"report", "--in", p("r.jsonl"), "--emit", "scheme_csv"}).code, cli::kUsage);
  EXPECT_EQ(run({"report", "--in", p("r.jsonl"), "--emit", "scheme_csv", "--layer", "x"}).code, cli::kNotFound);
  EXPECT_EQ(run({"report", "--in", p("r.jsonl"), "--emit", "pie_chart"}).code, cli::kUsage);
  std::ofstream(p("empty.jsonl")).close();
  EXPECT_EQ(run({"report", "--in", p("empty.jsonl"), "--emit", "scheme_csv"}).code, cli::kNotFound);
  std::ofstream(p("junk.jsonl")) << "{not json\n";
  EXPECT_EQ(run({"report", "--in", p("junk.jsonl"), "--emit", "scheme_csv"}).code, cli::kIntegrity);
}

TEST_F(CliTest, ReportJsonCarriesSummaryAndSettings) {
  ASSERT_EQ(compress().code, cli::kOk);
  std::ifstream in(p("r.jsonl"));
  std::string line;
  std::vector<nlohmann::json> lines;
  while (std::getline(in, line)) lines.push_back(nlohmann::json::parse(line));
  ASSERT_EQ(lines.size(), 5u);
  EXPECT_EQ(lines.back()["type"], "summary");
  EXPECT_EQ(lines.back()["layers"], 4);
  std::int64_t total = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(lines[i]["type"], "layer");
    EXPECT_LE(lines[i]["payload_bits"].get<std::int64_t>(), lines[i]["budget_bits"].get<std::int64_t>());
    EXPECT_EQ(lines[i]["settings"]["damp_rel"], 0.01);
    total += lines[i]["payload_bits"].get<std::int64_t>();
  }
  EXPECT_EQ(lines.back()["total_payload_bits"], total);
}

TEST(CliBinary, ExitCodeReachesTheShell) {
  const std::string cmd = std::string(DELTAMIX_CLI_PATH) + " reconstruct --in /nonexistent.dmix --layer a --out /dev/null 2>/dev/null";
  const int status = std::system(cmd.c_str());
  ASSERT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), cli::kNotFound);
}
