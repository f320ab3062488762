#include <gtest/gtest.h>

#include <filesystem>

#include "dumb/synthdata/generate.hpp"
#include "dumb/synthdata/image_io.hpp"
#include "dumb/synthdata/store.hpp"
#include "support.hpp"

using namespace dumb;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("dumb_gen_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

bool on_byte_grid(const Image& img) {
    for (float v : img.data)
        if (static_cast<float>(std::lround(v * 255.0f)) / 255.0f != v) return false;
    return true;
}

} // namespace

TEST(Generate, DeterministicAndQuantized) {
    const auto task = make_task("easy", 16);
    const auto a = generate_dataset(task, make_source("A"), 3, 50);
    const auto b = generate_dataset(task, make_source("A"), 3, 50);
    ASSERT_EQ(a.size(), 100u);
    for (std::size_t i = 0; i < a.size(); ++i) {
        ASSERT_EQ(a[i].image.data, b[i].image.data);
        EXPECT_EQ(a[i].image.shape, (Shape{16, 16, 3}));
        EXPECT_TRUE(a[i].image.in_unit_range());
        EXPECT_TRUE(on_byte_grid(a[i].image));
    }
    EXPECT_EQ(class_counts(a), (std::array<std::size_t, 2>{50, 50}));
}

TEST(Generate, SourcesAndSeedsDiffer) {
    const auto task = make_task("medium", 16);
    const Image a = render_image(task, make_source("A"), 0, 1);
    EXPECT_NE(a.data, render_image(task, make_source("B"), 0, 1).data);
    EXPECT_NE(a.data, render_image(task, make_source("A"), 0, 2).data);
}

TEST(Generate, EveryTaskRenders) {
    for (const auto& id : task_ids())
        for (int label = 0; label < 2; ++label) {
            const Image img = render_image(make_task(id), make_source("B"), label, 42);
            EXPECT_EQ(img.shape, (Shape{32, 32, 3}));
            EXPECT_TRUE(img.in_unit_range());
        }
}

TEST(Generate, SourcesHaveDistinctBrightness) {
    const auto task = make_task("easy", 16);
    double a = 0, b = 0;
    for (std::uint64_t s = 0; s < 20; ++s) {
        a += render::mean_luma(render_image(task, make_source("A"), 0, s));
        b += render::mean_luma(render_image(task, make_source("B"), 0, s));
    }
    EXPECT_GT(a, b);
}

TEST(Generate, ConfigErrors) {
    EXPECT_THROW(make_task("impossible"), Error);
    EXPECT_THROW(make_task("easy", 8), Error);
    EXPECT_THROW(make_source("C"), Error);
    EXPECT_THROW(generate_dataset(make_task("easy"), make_source("A"), 1, 10), Error);
}

TEST(ImageIo, PngRoundTripIsExactOnByteGrid) {
    const fs::path dir = scratch("png");
    Image img = fixtures::random_image(7, 5, 3, 4);
    quantize_8bit(img);
    write_png((dir / "x.png").string(), img);
    EXPECT_EQ(read_png((dir / "x.png").string()).data, img.data);
    EXPECT_THROW(read_png((dir / "none.png").string()), Error);
    std::ofstream(dir / "bad.png") << "not a png";
    EXPECT_THROW(read_png((dir / "bad.png").string()), Error);
}

TEST(ImageIo, ResizeKeepsConstantsAndAveragesBlocks) {
    const Image flat({8, 8, 3}, 0.4f);
    for (float v : resize_area(flat, 3, 5).data) EXPECT_NEAR(v, 0.4f, 1e-6);
    Image checker({2, 2, 1}, std::vector<float>{0, 1, 1, 0});
    EXPECT_NEAR(resize_area(checker, 1, 1)[0], 0.5f, 1e-6);
}

TEST(ImageIo, IngestFolderResizesAndLabels) {
    const fs::path dir = scratch("ingest");
    fs::create_directories(dir / "circles");
    fs::create_directories(dir / "squares");
    for (int i = 0; i < 3; ++i) write_png((dir / "circles" / (std::to_string(i) + ".png")).string(), fixtures::random_image(24, 20, 3, i));
    write_png((dir / "squares" / "a.png").string(), fixtures::random_image(40, 40, 3, 9));
    const auto items = ingest_folder(dir, {"circles", "squares"}, 16);
    ASSERT_EQ(items.size(), 4u);
    EXPECT_EQ(items.back().label, 1);
    EXPECT_EQ(items.front().image.shape, (Shape{16, 16, 3}));
    fs::remove_all(dir / "squares");
    try {
        ingest_folder(dir, {"circles", "squares"}, 16);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), "empty-class");
    }
}

TEST(Store, SaveLoadRoundTrip) {
    const fs::path root = scratch("store");
    DatasetSplit s = split(generate_dataset(make_task("hard", 16), make_source("A"), 8, 50), {0.7, 0.1, 0.2}, 2);
    s.provenance = {"hard", "A", 8};
    EXPECT_FALSE(dataset_exists(root, "hard", "A"));
    save_dataset(root, s, {{"origin", "synthetic"}});
    EXPECT_TRUE(dataset_exists(root, "hard", "A"));
    EXPECT_EQ(load_manifest(root, "hard", "A").at("origin"), "synthetic");
    const DatasetSplit back = load_dataset(root, "hard", "A");
    ASSERT_EQ(back.test.size(), s.test.size());
    for (std::size_t i = 0; i < s.test.size(); ++i) {
        EXPECT_EQ(back.test[i].image.data, s.test[i].image.data);
        EXPECT_EQ(back.test[i].label, s.test[i].label);
    }
    EXPECT_EQ(back.provenance.seed, 8u);
    try {
        load_dataset(root, "hard", "B");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), "missing-prerequisite");
    }
}
