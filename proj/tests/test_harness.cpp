#include "texelatt/config.hpp"
#include "texelatt/error.hpp"
#include "texelatt/harness.hpp"
#include "texelatt/io.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <filesystem>
#include <set>

using namespace texelatt;
namespace fs = std::filesystem;

namespace {

config::ExperimentConfig small_config(const fs::path& out, config::DetectorKind kind) {
    auto c = config::desk_config(out);
    c.dataset.n = 40;
    c.dataset.canvas = 320;
    c.dataset.split_ratio = 0.5;
    c.detector.kind = kind;
    return c;
}

class HarnessTest : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        root_ = fs::temp_directory_path() / "texelatt_harness_test";
        fs::remove_all(root_);
        classical_ = new harness::RunSummary(harness::run(small_config(root_ / "classical", config::DetectorKind::classical)));
    }
    static void TearDownTestSuite() {
        delete classical_;
        fs::remove_all(root_);
    }

    static fs::path root_;
    static harness::RunSummary* classical_;
};

fs::path HarnessTest::root_;
harness::RunSummary* HarnessTest::classical_ = nullptr;

}  // namespace

TEST_F(HarnessTest, EmitsTwelveRowTable) {
    ASSERT_EQ(classical_->rows.size(), 12u);
    const auto rows = retrieval::read_report_csv(classical_->report_csv);
    EXPECT_EQ(rows.size(), 12u);
    std::set<std::pair<std::string, std::string>> cells;
    for (const auto& r : rows) {
        cells.insert({r.variant, r.method});
        EXPECT_GE(r.auc, 0.0);
        EXPECT_LE(r.auc, 1.0);
    }
    EXPECT_EQ(cells.size(), 12u);
    for (const char* v : {"r100_noise", "r200_noise", "r300_noise", "r100_light", "r200_light", "r300_light"})
        EXPECT_TRUE(fs::exists(root_ / "classical" / "report" / (std::string("cmc_") + v + ".svg"))) << v;
}

TEST_F(HarnessTest, RerunPerformsNoRecomputation) {
    const auto before = io::read_text(classical_->report_csv);
    const auto again = harness::run(small_config(root_ / "classical", config::DetectorKind::classical));
    EXPECT_TRUE(again.executed_stages.empty());
    EXPECT_FALSE(again.skipped_stages.empty());
    EXPECT_EQ(io::read_text(again.report_csv), before);
}

TEST_F(HarnessTest, TamperedOutputIsRecomputed) {
    const auto csv = root_ / "classical" / "descriptors" / "db_tamura.csv";
    ASSERT_TRUE(fs::exists(csv));
    const auto original = io::read_text(csv);
    io::write_text(csv, original + "garbage\n");
    const auto again = harness::run(small_config(root_ / "classical", config::DetectorKind::classical));
    EXPECT_FALSE(again.executed_stages.empty());
    EXPECT_EQ(io::read_text(csv), original);
}

TEST_F(HarnessTest, SeparateRunsAreIdentical) {
    const auto other = harness::run(small_config(root_ / "second", config::DetectorKind::classical));
    EXPECT_EQ(io::read_text(other.report_csv), io::read_text(classical_->report_csv));
    EXPECT_EQ(io::read_text(root_ / "second" / "report" / "cmc.csv"),
              io::read_text(root_ / "classical" / "report" / "cmc.csv"));
}

TEST_F(HarnessTest, EveryFileIsReferencedByTheRunManifest) {
    const auto j = nlohmann::json::parse(io::read_text(classical_->run_manifest));
    std::set<std::string> listed{"run_manifest.json"};
    for (const auto& s : j["stages"])
        for (const auto& f : s["outputs"]) listed.insert(f.get<std::string>());
    const fs::path base = root_ / "classical";
    for (const auto& e : fs::recursive_directory_iterator(base)) {
        if (!e.is_regular_file()) continue;
        const auto rel = fs::relative(e.path(), base).generic_string();
        EXPECT_TRUE(listed.count(rel)) << "orphan output " << rel;
    }
}

TEST_F(HarnessTest, OracleDetectionsDoNotLoseToClassical) {
    const auto oracle = harness::run(small_config(root_ / "oracle", config::DetectorKind::oracle));
    std::map<std::string, double> classical_auc;
    for (const auto& r : classical_->rows)
        if (r.method == "texelatt") classical_auc[r.variant] = r.auc;
    for (const auto& r : oracle.rows) {
        if (r.method != "texelatt") continue;
        EXPECT_GE(r.auc, classical_auc.at(r.variant)) << r.variant;
    }
}

TEST(Harness, InvalidConfigIsRejectedBeforeAnyStage) {
    auto c = config::desk_config(fs::temp_directory_path() / "texelatt_harness_invalid");
    c.dataset.seed.reset();
    EXPECT_THROW(harness::run(c), InvalidArgument);
    EXPECT_FALSE(fs::exists(fs::temp_directory_path() / "texelatt_harness_invalid"));
}

TEST(StageCacheTest, FreshOnlyWithMatchingKeyAndDigests) {
    const auto root = fs::temp_directory_path() / "texelatt_stage_cache";
    fs::remove_all(root);
    harness::StageCache cache(root);
    EXPECT_FALSE(cache.fresh("s", "k"));
    io::write_text(root / "out.txt", "hello");
    cache.commit("s", "k", {"out.txt"});
    EXPECT_TRUE(cache.fresh("s", "k"));
    EXPECT_FALSE(cache.fresh("s", "other"));
    const auto digest = cache.digest("s");
    io::write_text(root / "out.txt", "changed");
    EXPECT_FALSE(cache.fresh("s", "k"));
    cache.commit("s", "k", {"out.txt"});
    EXPECT_NE(cache.digest("s"), digest);
    fs::remove(root / "out.txt");
    EXPECT_FALSE(cache.fresh("s", "k"));
    fs::remove_all(root);
}

TEST(Sha256, KnownVector) {
    EXPECT_EQ(harness::sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
