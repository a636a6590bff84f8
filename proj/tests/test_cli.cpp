#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <random>
#include <sys/wait.h>

#include "holopulse/commands.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace holopulse;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out, err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Run run_cli(const testutil::TempDir& tmp, const std::string& args) {
    const auto out = tmp / "stdout.txt", err = tmp / "stderr.txt";
    const std::string cmd = std::string("\"") + HOLOPULSE_CLI_PATH + "\" " + args + " >\"" + out.string() + "\" 2>\"" +
                            err.string() + "\"";
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

void write_small_spec(const fs::path& path) {
    std::ofstream(path) << R"({"dims":{"height":96,"width":96,"frames":64},"n_arteries":2,"n_veins":2,)"
                        << R"("artery_waveform":{"period":32}})";
}

class CliTest : public ::testing::Test {
protected:
    testutil::TempDir tmp;
};

}  // namespace

TEST_F(CliTest, InfoOnZeroStack) {
    save_stack(TemporalStack(2, 2, 2, std::vector<float>(8, 0.0f)), tmp / "z.json");
    const auto r = run_cli(tmp, "info " + q(tmp / "z.json"));
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("h=2 w=2 frames=2"), std::string::npos) << r.out;
}

TEST_F(CliTest, InfoOnMissingFile) {
    const auto r = run_cli(tmp, "info " + q(tmp / "nothing.json"));
    EXPECT_NE(r.code, 0);
    EXPECT_NE(r.err.find("error:"), std::string::npos);
}

TEST_F(CliTest, PhantomThenExtract) {
    write_small_spec(tmp / "spec.json");
    auto r = run_cli(tmp, "phantom --spec " + q(tmp / "spec.json") + " --out " + q(tmp / "ph"));
    ASSERT_EQ(r.code, 0) << r.err;
    for (auto f : {"stack.json", "stack.raw", "gt_mask.pgm", "vessel_mask.pgm", "spec.json"})
        EXPECT_TRUE(fs::exists(tmp / "ph" / f)) << f;

    r = run_cli(tmp, "extract --stack " + q(tmp / "ph" / "stack.json") + " --mask " + q(tmp / "ph" / "vessel_mask.pgm") +
                         " --out " + q(tmp / "ex"));
    ASSERT_EQ(r.code, 0) << r.err;
    for (auto f : {"features.json", "m0.json", "m0.raw", "corr.json", "corr.raw", "diasys.json", "diasys.raw",
                   "artery_seeds.pgm", "global_pulse.csv", "segment_signals.csv", "peaks.json", "segments.json",
                   "run-manifest.json"})
        EXPECT_TRUE(fs::exists(tmp / "ex" / f)) << f;

    const auto fsk = import_feature_stack(tmp / "ex" / "features.json");
    EXPECT_EQ(fsk.height(), 96u);
    const auto manifest = nlohmann::json::parse(slurp(tmp / "ex" / "run-manifest.json"));
    EXPECT_EQ(manifest["parameters"]["theta"].get<double>(), 0.3);
    EXPECT_EQ(manifest["parameters"]["min_separation"].get<int>(), 8);
    EXPECT_EQ(load_signal_csv(tmp / "ex" / "global_pulse.csv").values.size(), 64u);

    r = run_cli(tmp, "info " + q(tmp / "ex" / "features.json"));
    EXPECT_NE(r.out.find("channels=m0,corr,diasys"), std::string::npos) << r.out;
}

TEST_F(CliTest, RepeatedRunsAreByteIdentical) {
    write_small_spec(tmp / "spec.json");
    for (auto d : {"a", "b"}) {
        ASSERT_EQ(run_cli(tmp, "phantom --spec " + q(tmp / "spec.json") + " --out " + q(tmp / d / "ph")).code, 0);
        ASSERT_EQ(run_cli(tmp, "extract --threads 3 --stack " + q(tmp / d / "ph" / "stack.json") + " --mask " +
                                   q(tmp / d / "ph" / "vessel_mask.pgm") + " --out " + q(tmp / d / "ex"))
                      .code,
                  0);
    }
    std::size_t compared = 0;
    for (const auto& e : fs::recursive_directory_iterator(tmp / "a")) {
        if (!e.is_regular_file()) continue;
        const auto rel = fs::relative(e.path(), tmp / "a");
        if (rel.filename() == "run-manifest.json") continue;  // records the input paths
        EXPECT_EQ(slurp(e.path()), slurp(tmp / "b" / rel)) << rel;
        ++compared;
    }
    EXPECT_GE(compared, 15u);
}

TEST_F(CliTest, ExtractRejectsSingleFrameStack) {
    save_stack(TemporalStack(2, 4, 4, std::vector<float>(32, 1.0f)), tmp / "s.json");
    // Rewrite the header to claim one frame over a one-frame payload.
    std::ofstream(tmp / "s.json") << R"({"height":4,"width":4,"frames":1,"dtype":"f32le"})";
    std::ofstream(tmp / "s.raw", std::ios::binary) << std::string(64, '\0');
    save_binary_mask(BinaryMask(4, 4, 1), tmp / "m.pgm");
    const auto r = run_cli(tmp, "extract --stack " + q(tmp / "s.json") + " --mask " + q(tmp / "m.pgm") + " --out " +
                                    q(tmp / "o"));
    EXPECT_NE(r.code, 0);
    EXPECT_NE(r.err.find("frames < 2"), std::string::npos) << r.err;
}

TEST_F(CliTest, ExtractRejectsMaskDimensionMismatch) {
    save_stack(TemporalStack(4, 4, 4, std::vector<float>(64, 1.0f)), tmp / "s.json");
    save_binary_mask(BinaryMask(4, 5, 1), tmp / "m.pgm");
    const auto r = run_cli(tmp, "extract --stack " + q(tmp / "s.json") + " --mask " + q(tmp / "m.pgm") + " --out " +
                                    q(tmp / "o"));
    EXPECT_NE(r.code, 0);
    EXPECT_NE(r.err.find("4x5"), std::string::npos) << r.err;
}

TEST_F(CliTest, ExtractWithoutSeedsFails) {
    save_stack(TemporalStack(4, 8, 8, std::vector<float>(256, 1.0f)), tmp / "s.json");
    BinaryMask m(8, 8);
    for (std::size_t x = 0; x < 8; ++x) m(4, x) = 1;
    save_binary_mask(m, tmp / "m.pgm");
    const auto r = run_cli(tmp, "extract --stack " + q(tmp / "s.json") + " --mask " + q(tmp / "m.pgm") + " --out " +
                                    q(tmp / "o"));
    EXPECT_NE(r.code, 0);
    EXPECT_NE(r.err.find("no artery seeds"), std::string::npos) << r.err;
}

TEST_F(CliTest, InvalidPhantomSpec) {
    std::ofstream(tmp / "bad.json") << R"({"n_arteries": 2, "vessels": 3})";
    const auto r = run_cli(tmp, "phantom --spec " + q(tmp / "bad.json") + " --out " + q(tmp / "o"));
    EXPECT_NE(r.code, 0);
    EXPECT_NE(r.err.find("vessels"), std::string::npos) << r.err;
}

TEST_F(CliTest, EvaluateIdentityAndSwapped) {
    std::mt19937_64 rng(3);
    const auto gt = oracle::random_class_mask(rng, 24, 24);
    ClassMask swapped = gt;
    for (auto& l : swapped) l = l == Label::artery ? Label::vein : l == Label::vein ? Label::artery : l;
    save_mask(gt, tmp / "gt.pgm");
    save_mask(swapped, tmp / "sw.pgm");

    auto r = run_cli(tmp, "evaluate --pred " + q(tmp / "gt.pgm") + " --gt " + q(tmp / "gt.pgm") + " --out " +
                              q(tmp / "same.json"));
    ASSERT_EQ(r.code, 0) << r.err;
    auto j = nlohmann::json::parse(slurp(tmp / "same.json"));
    for (auto k : {"vessel", "artery", "vein", "macro_av"}) {
        EXPECT_EQ(j[k]["dice"].get<double>(), 1.0);
        EXPECT_EQ(j[k]["hd95"].get<double>(), 0.0);
    }
    EXPECT_NE(r.out.find("Dice"), std::string::npos);

    r = run_cli(tmp, "evaluate --pred " + q(tmp / "sw.pgm") + " --gt " + q(tmp / "gt.pgm") + " --out " +
                         q(tmp / "sw.json"));
    ASSERT_EQ(r.code, 0) << r.err;
    j = nlohmann::json::parse(slurp(tmp / "sw.json"));
    EXPECT_EQ(j["vessel"]["dice"].get<double>(), 1.0);
    EXPECT_EQ(j["artery"]["dice"].get<double>(), 0.0);
    EXPECT_EQ(j["vein"]["dice"].get<double>(), 0.0);
}

TEST_F(CliTest, EvaluateMatchesLibrary) {
    std::mt19937_64 rng(4);
    const auto p = oracle::random_class_mask(rng, 20, 20);
    const auto g = oracle::random_class_mask(rng, 20, 20);
    save_mask(p, tmp / "p.pgm");
    save_mask(g, tmp / "g.pgm");
    const auto r = run_cli(tmp, "evaluate --pred " + q(tmp / "p.pgm") + " --gt " + q(tmp / "g.pgm") + " --out " +
                                    q(tmp / "r.json"));
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(slurp(tmp / "r.json"), to_json(evaluate(p, g)).dump(2) + "\n");
    EXPECT_EQ(r.out, cli::format_report_table(evaluate(p, g)));
}

TEST_F(CliTest, EvaluateDimensionMismatch) {
    save_mask(ClassMask(4, 4), tmp / "a.pgm");
    save_mask(ClassMask(4, 5), tmp / "b.pgm");
    EXPECT_NE(run_cli(tmp, "evaluate --pred " + q(tmp / "a.pgm") + " --gt " + q(tmp / "b.pgm")).code, 0);
}
