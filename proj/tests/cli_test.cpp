#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "te/cli.hpp"
#include "te/io.hpp"
#include "test_support.hpp"

using namespace te;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "terminal-embed");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("te_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    fs::path dir_;
};

}  // namespace

TEST_F(CliTest, SmallSetBuildsExactBundle) {
    io::write_points_csv(path("p.csv"), tk::random_matrix(3, 4, 1));
    const auto r = run_cli({"build", "--points", path("p.csv"), "--out", path("b"), "--epsilon", "0.1"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = json::parse(r.out);
    EXPECT_EQ(j.at("mode"), "exact_small");
    EXPECT_EQ(j.at("output_dim"), 3);
    EXPECT_TRUE(fs::exists(path("b/manifest.json")));
}

TEST_F(CliTest, SketchBuildIsReproducible) {
    io::write_points_bin(path("p.bin"), tk::random_matrix(400, 20, 2));
    const std::vector<std::string> common{"--epsilon", "0.9", "--const-C", "0.5", "--seed", "7"};
    auto a = common, b = common;
    a.insert(a.begin(), {"build", "--points", path("p.bin"), "--out", path("a")});
    b.insert(b.begin(), {"build", "--points", path("p.bin"), "--out", path("b"), "--threads", "1"});
    ASSERT_EQ(run_cli(a).code, 0);
    ASSERT_EQ(run_cli(b).code, 0);
    for (const auto* f : {"manifest.json", "points.bin", "embedded.bin", "sketch.tesk"}) {
        EXPECT_EQ(slurp(dir_ / "a" / f), slurp(dir_ / "b" / f)) << f;
    }
    EXPECT_EQ(json::parse(slurp(dir_ / "a/manifest.json")).at("mode"), "sketch");
}

TEST_F(CliTest, SeedFallsBackToEnvironment) {
    io::write_points_bin(path("p.bin"), tk::random_matrix(400, 20, 2));
    const std::vector<std::string> args{"--epsilon", "0.9", "--const-C", "0.5"};
    auto a = args, b = args;
    a.insert(a.begin(), {"build", "--points", path("p.bin"), "--out", path("a"), "--seed", "11"});
    b.insert(b.begin(), {"build", "--points", path("p.bin"), "--out", path("b")});
    ::setenv("TE_SEED", "11", 1);
    ASSERT_EQ(run_cli(b).code, 0);
    ::unsetenv("TE_SEED");
    ASSERT_EQ(run_cli(a).code, 0);
    EXPECT_EQ(slurp(dir_ / "a/sketch.tesk"), slurp(dir_ / "b/sketch.tesk"));
}

TEST_F(CliTest, QueryMembersAndEmptyFile) {
    const Matrix P = tk::random_matrix(400, 20, 3);
    io::write_points_bin(path("p.bin"), P);
    ASSERT_EQ(run_cli({"build", "--points", path("p.bin"), "--out", path("b"), "--epsilon", "0.9", "--const-C",
                       "0.5"})
                  .code,
              0);
    Matrix members(5, 20);
    for (std::size_t i = 0; i < 5; ++i) std::copy(P.row(i * 7).begin(), P.row(i * 7).end(), members.row(i).begin());
    io::write_points_csv(path("q.csv"), members);
    auto r = run_cli({"query", "--bundle", path("b"), "--queries", path("q.csv"), "--out", path("o.csv")});
    ASSERT_EQ(r.code, 0) << r.err;
    const Matrix img = io::read_points_csv(path("o.csv"));
    ASSERT_EQ(img.rows(), 5u);
    for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(img(i, img.cols() - 1), 0.0);
    EXPECT_TRUE(fs::exists(path("o.csv.diag.json")));

    std::ofstream(path("empty.csv")) << "";
    r = run_cli({"query", "--bundle", path("b"), "--queries", path("empty.csv"), "--out", path("e.csv")});
    EXPECT_EQ(r.code, 0) << r.err;

    io::write_points_csv(path("wrong.csv"), tk::random_matrix(2, 3, 4));
    r = run_cli({"query", "--bundle", path("b"), "--queries", path("wrong.csv"), "--out", path("w.csv")});
    EXPECT_EQ(r.code, 2);
}

TEST_F(CliTest, ExitCodes) {
    EXPECT_EQ(run_cli({"build", "--points", path("missing.csv"), "--out", path("b")}).code, 2);
    EXPECT_EQ(run_cli({"build", "--points", path("missing.csv")}).code, 1);
    EXPECT_EQ(run_cli({"frobnicate"}).code, 1);
    io::write_points_csv(path("p.csv"), tk::random_matrix(3, 4, 1));
    EXPECT_EQ(run_cli({"build", "--points", path("p.csv"), "--out", path("b"), "--epsilon", "1.5"}).code, 1);
    Matrix dup = tk::random_matrix(3, 4, 1);
    std::copy(dup.row(0).begin(), dup.row(0).end(), dup.row(2).begin());
    io::write_points_csv(path("dup.csv"), dup);
    EXPECT_EQ(run_cli({"build", "--points", path("dup.csv"), "--out", path("d")}).code, 2);
}

TEST_F(CliTest, BinaryReportsMissingFile) {
    const std::string cmd = std::string(TE_CLI_PATH) + " build --points " + path("nope.csv") + " --out " +
                            path("b") + " 2>/dev/null";
    const int status = std::system(cmd.c_str());
    ASSERT_TRUE(WIFEXITED(status));
    EXPECT_EQ(WEXITSTATUS(status), 2);
}

TEST_F(CliTest, EvalAssertions) {
    io::write_points_csv(path("p.csv"), tk::random_matrix(5, 6, 5));
    ASSERT_EQ(run_cli({"build", "--points", path("p.csv"), "--out", path("b")}).code, 0);
    auto r = run_cli({"eval", "--bundle", path("b"), "--per-sampler", "4", "--assert", "max-abs-ratio-error=1e-9"});
    EXPECT_EQ(r.code, 0) << r.err;
    const auto rep = json::parse(r.out);
    EXPECT_EQ(rep.at("query_count"), 32);
    r = run_cli({"eval", "--bundle", path("b"), "--per-sampler", "4", "--assert", "max-ratio=0.5"});
    EXPECT_EQ(r.code, 3);
    EXPECT_NE(r.err.find("assertion failed"), std::string::npos);
    EXPECT_EQ(run_cli({"eval", "--bundle", path("b"), "--assert", "bogus=1"}).code, 1);
}

TEST_F(CliTest, EfnBaselineOnSharpInstance) {
    io::write_points_csv(path("p.csv"), Matrix::from_rows({{-1.0}, {0.0}, {2.0}}));
    io::write_points_csv(path("q.csv"), Matrix::from_rows({{1.0}}));
    ASSERT_EQ(run_cli({"build", "--points", path("p.csv"), "--out", path("b")}).code, 0);
    const auto r = run_cli({"eval", "--bundle", path("b"), "--queries", path("q.csv"), "--baseline", "efn"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NEAR(json::parse(r.out).at("terminal_distortion").get<double>(), std::sqrt(10.0), 1e-12);
    const auto exact = run_cli({"eval", "--bundle", path("b"), "--queries", path("q.csv")});
    EXPECT_NEAR(json::parse(exact.out).at("terminal_distortion").get<double>(), 1.0, 1e-12);
}

TEST_F(CliTest, VerifyChdAndScaling) {
    io::write_points_bin(path("p.bin"), tk::random_matrix(400, 20, 6));
    ASSERT_EQ(run_cli({"build", "--points", path("p.bin"), "--out", path("b"), "--epsilon", "0.9", "--const-C",
                       "0.5"})
                  .code,
              0);
    auto r = run_cli({"verify-chd", "--bundle", path("b"), "--samples", "200", "--assert", "max-violation=100"});
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_GT(json::parse(r.out).at("max_violation").get<double>(), 0.0);

    io::write_points_csv(path("small.csv"), tk::random_matrix(3, 4, 1));
    ASSERT_EQ(run_cli({"build", "--points", path("small.csv"), "--out", path("e")}).code, 0);
    EXPECT_NE(run_cli({"verify-chd", "--bundle", path("e")}).code, 0);

    io::write_points_csv(path("s.csv"), tk::random_matrix(8, 10, 7));
    r = run_cli({"scaling", "--points", path("s.csv"), "--epsilons", "0.5,0.7", "--seeds", "1,2", "--per-sampler",
                 "2", "--chd-samples", "100"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(json::parse(r.out).at("rows").size(), 4u);
}
