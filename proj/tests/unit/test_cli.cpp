#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() / ("aeromtl_cli_" + std::to_string(::getpid()) + "_" +
                                            ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    // Runs the binary inside the scratch directory; returns its exit status.
    int run(const std::string& args) {
        const std::string cmd = "cd '" + dir_.string() + "' && '" AEROMTL_CLI "' " + args + " > '" +
                                (log_dir() / "stdout").string() + "' 2> '" + (log_dir() / "stderr").string() + "'";
        const int status = std::system(cmd.c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }

    std::string read(const fs::path& p) const {
        std::ifstream in(p, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    std::string err() const { return read(log_dir() / "stderr"); }
    std::string out() const { return read(log_dir() / "stdout"); }

    fs::path log_dir() const {
        const fs::path p = dir_.string() + "_logs";
        fs::create_directories(p);
        return p;
    }

    std::size_t entries() const {
        return static_cast<std::size_t>(std::distance(fs::directory_iterator(dir_), fs::directory_iterator()));
    }

    fs::path dir_;
};

}  // namespace

TEST_F(CliTest, HelpExitsZeroAndTouchesNoFiles) {
    for (const char* sub : {"", "train", "predict", "evaluate", "uncertainty", "make-height", "synth"}) {
        EXPECT_EQ(run(std::string(sub) + " --help"), 0) << sub;
        EXPECT_EQ(entries(), 0u) << sub;
        EXPECT_FALSE(out().empty()) << sub;
    }
    run("train --help");
    for (const char* flag : {"--lr", "--crop-size", "--balancing", "--mc-samples", "--resolution-factor"})
        EXPECT_NE(out().find(flag), std::string::npos) << flag;
    fs::remove_all(log_dir());
}

TEST_F(CliTest, ExitCodesFollowErrorCategories) {
    EXPECT_EQ(run(""), 2);
    EXPECT_EQ(run("frobnicate"), 2);
    EXPECT_EQ(run("train --no-such-flag 1"), 2);
    EXPECT_EQ(run("train --balancing uncertainty --manifest m.txt"), 7);
    EXPECT_EQ(run("train"), 7);  // no manifest
    {
        std::ofstream(dir_ / "bad.cfg") << "learning_rate = 1\n";
    }
    EXPECT_EQ(run("train bad.cfg"), 7);
    EXPECT_NE(err().find("bad.cfg:1"), std::string::npos) << err();
    EXPECT_EQ(run("make-height missing_dsm.pfm missing_dem.pfm out.pfm"), 12);
    {
        std::ofstream(dir_ / "broken.pfm") << "Pf\n4 4\n-1.0\nxx";
    }
    EXPECT_EQ(run("make-height broken.pfm broken.pfm out.pfm"), 8);
    EXPECT_NE(err().find("broken.pfm"), std::string::npos) << err();
    {
        std::ofstream(dir_ / "junk.ckpt") << "not a checkpoint at all";
    }
    EXPECT_EQ(run("synth data --count 1 --size 64"), 0);
    EXPECT_EQ(run("predict junk.ckpt data/scene_0_rgb.ppm p"), 11);
    EXPECT_EQ(run("synth data --size 8"), 2);
    fs::remove_all(log_dir());
}

TEST_F(CliTest, EndToEndOnSyntheticScene) {
    ASSERT_EQ(run("synth data --seed 3 --count 1 --size 64"), 0);
    EXPECT_TRUE(fs::exists(dir_ / "data" / "manifest.txt"));
    ASSERT_EQ(run("train --manifest data/manifest.txt --out-dir run --iterations 3 --encoder-depth 2 "
                  "--base-channels 4 --crop-size 32 --batch-size 1 --resolution-factor 1 --window 32 --stride 16"),
              0)
        << err();
    EXPECT_NE(out().find("iterations=3"), std::string::npos);
    const std::string log = read(dir_ / "run" / "loss_log.csv");
    EXPECT_EQ(log.substr(0, log.find('\n')), "iter,loss_height,loss_sem,k1,k2,gamma");

    ASSERT_EQ(run("predict run/model.ckpt data/scene_3_rgb.ppm a"), 0) << err();
    ASSERT_EQ(run("predict run/model.ckpt data/scene_3_rgb.ppm b"), 0) << err();
    EXPECT_EQ(read(dir_ / "a_height.pfm"), read(dir_ / "b_height.pfm"));
    EXPECT_EQ(read(dir_ / "a_labels.pgm"), read(dir_ / "b_labels.pgm"));
    EXPECT_TRUE(fs::exists(dir_ / "a_labels.legend.txt"));

    ASSERT_EQ(run("evaluate --pred-height data/scene_3_height.pfm --gt-height data/scene_3_height.pfm "
                  "--pred-labels data/scene_3_labels.pgm --gt-labels data/scene_3_labels.pgm --out r.txt"),
              0)
        << err();
    EXPECT_NE(read(dir_ / "r.txt").find("mae=0\n"), std::string::npos);
    EXPECT_NE(read(dir_ / "r.txt").find("kappa=1\n"), std::string::npos);

    ASSERT_EQ(run("uncertainty run/model.ckpt data/scene_3_rgb.ppm u --samples 2 --seed 1"), 0) << err();
    EXPECT_TRUE(fs::exists(dir_ / "u_std.pfm"));
    ASSERT_EQ(run("make-height data/scene_3_height.pfm data/scene_3_height.pfm z.pfm"), 0) << err();
    EXPECT_TRUE(fs::exists(dir_ / "z.pfm"));
    fs::remove_all(log_dir());
}
