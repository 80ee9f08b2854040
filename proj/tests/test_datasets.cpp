#include "satnn/datasets.hpp"
#include "satnn/errors.hpp"

#include <doctest.h>

#include <filesystem>
#include <set>

using namespace satnn;

namespace {

const Example& find(const Dataset& ds, std::vector<int> x) {
    for (const auto& e : ds.examples)
        if (e.features == x) return e;
    throw std::runtime_error("missing example");
}

Image constant_image(int side, std::uint8_t v) {
    return Image{side, side, std::vector<std::uint8_t>(static_cast<std::size_t>(side * side), v)};
}

} // namespace

TEST_CASE("parity labels") {
    const Dataset ds = gen_parity(8, {0, 1, 3, 5}, std::nullopt, 0);
    CHECK(ds.size() == 256);
    CHECK(ds.dim() == 8);
    CHECK(ds.positives() == 128);
    CHECK(find(ds, {0, 0, 0, 0, 0, 0, 0, 0}).label == -1);
    CHECK(find(ds, {1, 0, 0, 0, 0, 0, 0, 0}).label == 1);
    CHECK(find(ds, {1, 1, 0, 1, 0, 1, 0, 0}).label == -1);
    CHECK(ds.examples[1].features == std::vector<int>{0, 0, 0, 0, 0, 0, 0, 1});
    std::set<std::vector<int>> distinct;
    for (const auto& e : ds.examples) distinct.insert(e.features);
    CHECK(distinct.size() == 256);
}

TEST_CASE("parity sampling") {
    const Dataset a = gen_parity(8, {0, 1, 3, 5}, 40, 7);
    const Dataset b = gen_parity(8, {0, 1, 3, 5}, 40, 7);
    const Dataset c = gen_parity(8, {0, 1, 3, 5}, 40, 8);
    CHECK(a.size() == 40);
    CHECK(a.examples == b.examples);
    CHECK(a.examples != c.examples);
    std::set<std::vector<int>> distinct;
    for (const auto& e : a.examples) distinct.insert(e.features);
    CHECK(distinct.size() == 40);

    const Dataset wide = gen_parity(30, default_parity16_positions(), 100, 1);
    CHECK(wide.size() == 100);
    CHECK(default_parity16_positions() == std::vector<int>{0, 1, 2, 3, 4, 6, 11, 14});

    CHECK_THROWS_AS(gen_parity(8, {0, 0}, std::nullopt, 0), ConfigError);
    CHECK_THROWS_AS(gen_parity(8, {8}, std::nullopt, 0), ConfigError);
    CHECK_THROWS_AS(gen_parity(4, {0}, 17, 0), ConfigError);
    CHECK_THROWS_AS(gen_parity(30, {0}, std::nullopt, 0), ConfigError);
}

TEST_CASE("perceptron toy set") {
    const Dataset ds = perceptron_toyset();
    CHECK(ds.size() == 16);
    CHECK(find(ds, {0, 0, 0, 0}).label == 1);
    CHECK(find(ds, {0, 0, 1, 1}).label == -1);
    CHECK(find(ds, {1, 1, 0, 0}).label == 1);
    CHECK(find(ds, {0, 1, 1, 0}).label == -1); // sign(0) counts as negative
    for (const auto& e : ds.examples) {
        const int v = 2 * e.features[0] + 3 * e.features[1] - 4 * e.features[2] - 2 * e.features[3] + 1;
        CHECK(e.label == (v > 0 ? 1 : -1));
    }
}

TEST_CASE("discretize_pixel") {
    Hyperparams hp;
    CHECK(discretize_pixel(1.0, hp) == 3);
    CHECK(discretize_pixel(0.0, hp) == 0);
    CHECK(discretize_pixel(0.4, hp) == 1);
    CHECK_THROWS_AS(discretize_pixel(1.01, hp), RangeError);
    CHECK_THROWS_AS(discretize_pixel(-0.1, hp), RangeError);
    int prev = 0;
    for (int i = 0; i <= 1000; ++i) {
        const int k = discretize_pixel(i / 1000.0, hp);
        CHECK(k >= prev);
        CHECK(k < (1 << (hp.num_bits - 1)));
        prev = k;
    }
    Hyperparams bad;
    bad.alpha = 4;
    CHECK_THROWS_AS(discretize_pixel(0.5, bad), ConfigError);
}

TEST_CASE("preprocess_image vanilla") {
    Hyperparams hp;
    const auto zeros = preprocess_image(constant_image(28, 0), PreprocessScheme::Vanilla, hp);
    CHECK(zeros == std::vector<int>(196, 0));
    const auto c = preprocess_image(constant_image(28, 200), PreprocessScheme::Vanilla, hp);
    CHECK(c == std::vector<int>(196, discretize_pixel(200.0 / 255.0, hp)));

    Image checker = constant_image(28, 0);
    for (int r = 0; r < 28; ++r)
        for (int col = 0; col < 28; ++col)
            if ((r + col) % 2) checker.pixels[static_cast<std::size_t>(r * 28 + col)] = 255;
    CHECK(preprocess_image(checker, PreprocessScheme::Vanilla, hp) == std::vector<int>(196, 1));

    CHECK_THROWS_AS(preprocess_image(Image{2, 3, std::vector<std::uint8_t>(6)}, PreprocessScheme::Vanilla, hp),
                    ShapeError);
}

TEST_CASE("preprocess_image kernelised crops the zero border") {
    Hyperparams hp;
    Image img = constant_image(28, 0);
    for (int r = 4; r < 24; ++r)
        for (int c = 4; c < 24; ++c) img.pixels[static_cast<std::size_t>(r * 28 + c)] = 255;
    const auto f = preprocess_image(img, PreprocessScheme::Kernelised, hp);
    CHECK(f == std::vector<int>(100, 3));
    CHECK(preprocess_image(constant_image(28, 0), PreprocessScheme::Kernelised, hp) == std::vector<int>(100, 0));
}

TEST_CASE("area_resize") {
    const std::vector<double> g{0, 255, 255, 0};
    CHECK(area_resize(g, 2, 1) == std::vector<double>{127.5});
    const std::vector<double> same{1, 2, 3, 4};
    CHECK(area_resize(same, 2, 2) == same);
    const auto up = area_resize(std::vector<double>{8}, 1, 3);
    REQUIRE(up.size() == 9);
    for (double v : up) CHECK(v == doctest::Approx(8));
}

TEST_CASE("idx parsing") {
    const std::vector<std::uint8_t> bytes{0, 0, 8, 3, 0, 0, 0, 1, 0, 0, 0, 2, 0, 0, 0, 2, 0, 128, 255, 64};
    const IdxImages imgs = parse_idx_images(bytes);
    REQUIRE(imgs.images.size() == 1);
    CHECK(imgs.images[0].rows == 2);
    CHECK(imgs.images[0].at(1, 0) == 255);
    CHECK(encode_idx_images(imgs) == bytes);

    std::vector<std::uint8_t> label_magic = bytes;
    label_magic[3] = 1;
    CHECK_THROWS_AS(parse_idx_images(label_magic), FormatError);
    std::vector<std::uint8_t> truncated(bytes.begin(), bytes.end() - 1);
    try {
        parse_idx_images(truncated);
        FAIL("expected a format error");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find("offset") != std::string::npos);
    }

    const IdxLabels labels{{3, 1, 4}};
    const auto lb = encode_idx_labels(labels);
    CHECK(parse_idx_labels(lb).labels == labels.labels);
    CHECK_THROWS_AS(parse_idx_labels(bytes), FormatError);
}

TEST_CASE("images_to_dataset") {
    Hyperparams hp;
    IdxImages imgs;
    IdxLabels labels;
    for (int i = 0; i < 6; ++i) {
        imgs.images.push_back(constant_image(4, static_cast<std::uint8_t>(40 * i)));
        labels.labels.push_back(static_cast<std::uint8_t>(i % 3));
    }
    const Dataset ds = images_to_dataset(imgs, labels, 1, PreprocessScheme::Vanilla, hp, std::nullopt);
    CHECK(ds.size() == 6);
    CHECK(ds.dim() == 4);
    CHECK(ds.positives() == 2);
    const Dataset one = images_to_dataset(imgs, labels, 1, PreprocessScheme::Vanilla, hp, 1);
    CHECK(one.size() == 2); // one positive, one negative
}

TEST_CASE("sample_batches") {
    const Dataset ds = gen_parity(6, {0, 1}, 63, 1);
    const auto batches = sample_batches(ds, 20, 30, 5);
    CHECK(batches.size() == 20);
    for (const auto& b : batches) CHECK(b.size() == 30);
    CHECK(sample_batches(ds, 20, 30, 5) == batches);
    CHECK(sample_batches(ds, 20, 30, 6) != batches);

    const auto full = sample_batch_indices(ds.size(), 1, 63, 3).front();
    std::set<std::size_t> seen(full.begin(), full.end());
    CHECK(seen.size() == 63);

    CHECK_THROWS_AS(sample_batches(ds, 1, 64, 0), ConfigError);
}

TEST_CASE("dataset text round trip") {
    Dataset ds = gen_parity(4, {0, 2}, std::nullopt, 0);
    ds.source = "parity4";
    ds.seed = 9;
    const std::string text = format_dataset(ds);
    CHECK(text.find("0 0 0 1\t-1\n") != std::string::npos);
    const Dataset back = parse_dataset(text);
    CHECK(back.examples == ds.examples);
    CHECK(back.source == "parity4");
    CHECK(back.seed == 9);

    const auto path = std::filesystem::temp_directory_path() / "satnn_ds_test.txt";
    save_dataset(ds, path);
    CHECK(load_dataset(path).examples == ds.examples);
    std::filesystem::remove(path);

    CHECK_THROWS_AS(parse_dataset("0 1\t2\n"), FormatError);
    CHECK_THROWS_AS(parse_dataset("0 1\t1\n0\t1\n"), FormatError);
    CHECK_THROWS_AS(load_dataset("/nonexistent/satnn.txt"), EnvironmentError);
}
