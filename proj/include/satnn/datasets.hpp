#pragma once

#include "satnn/hyperparams.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace satnn {

struct Example {
    std::vector<int> features;
    int label = 1; // -1 or +1

    friend bool operator==(const Example&, const Example&) = default;
};

struct Dataset {
    std::vector<Example> examples;
    std::string source;
    std::uint64_t seed = 0;

    [[nodiscard]] std::size_t size() const { return examples.size(); }
    [[nodiscard]] std::size_t dim() const { return examples.empty() ? 0 : examples.front().features.size(); }
    [[nodiscard]] std::size_t positives() const;
};

/// Binary vectors labelled by the XOR of the selected positions (1 -> +1,
/// 0 -> -1). With `count` unset every one of the 2^dim vectors is emitted
/// in counting order (position 0 is the most significant bit); otherwise
/// `count` distinct vectors are drawn with `seed`.
Dataset gen_parity(int dim, const std::vector<int>& positions, std::optional<std::size_t> count, std::uint64_t seed);

/// Positions used for the 16-dimensional parity task.
std::vector<int> default_parity16_positions();

/// All 16 binary 4-vectors labelled by sign(2x0 + 3x1 - 4x2 - 2x3 + 1).
Dataset perceptron_toyset();

/// Greyscale images as rows x cols grids of [0, 255].
struct Image {
    int rows = 0;
    int cols = 0;
    std::vector<std::uint8_t> pixels; // row-major

    [[nodiscard]] std::uint8_t at(int r, int c) const { return pixels[static_cast<std::size_t>(r * cols + c)]; }
};

struct IdxImages {
    std::vector<Image> images;
};

struct IdxLabels {
    std::vector<std::uint8_t> labels;
};

IdxImages load_idx_images(const std::filesystem::path& path);
IdxLabels load_idx_labels(const std::filesystem::path& path);
IdxImages parse_idx_images(const std::vector<std::uint8_t>& bytes);
IdxLabels parse_idx_labels(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> encode_idx_images(const IdxImages& images);
std::vector<std::uint8_t> encode_idx_labels(const IdxLabels& labels);

enum class PreprocessScheme { Vanilla, Kernelised };

/// K = floor(v * (2^alpha - 1)).
int discretize_pixel(double v, const Hyperparams& hp);

/// Vanilla: 2x2 mean pooling. Kernelised: crop the all-zero border to a
/// square, then area-mean resize to 10x10. Both then flatten row-major and
/// discretize.
std::vector<int> preprocess_image(const Image& image, PreprocessScheme scheme, const Hyperparams& hp);

/// Area-weighted mean resize of a square grid of [0, 255] values.
std::vector<double> area_resize(const std::vector<double>& grid, int side, int new_side);

/// Builds a binary-labelled dataset from IDX images: `target_digit` -> +1,
/// everything else -> -1. `per_class` keeps the first n positives and the
/// first n negatives.
Dataset images_to_dataset(const IdxImages& images, const IdxLabels& labels, int target_digit,
                          PreprocessScheme scheme, const Hyperparams& hp, std::optional<std::size_t> per_class);

/// Each batch holds `batch_size` distinct examples; batches are drawn
/// independently and may overlap.
std::vector<std::vector<Example>> sample_batches(const Dataset& ds, int num_batches, int batch_size, std::uint64_t seed);
std::vector<std::vector<std::size_t>> sample_batch_indices(std::size_t dataset_size, int num_batches, int batch_size,
                                                           std::uint64_t seed);

/// Line format: space-separated features, a tab, the label. Lines starting
/// with '#' carry metadata.
std::string format_dataset(const Dataset& ds);
Dataset parse_dataset(const std::string& text);
void save_dataset(const Dataset& ds, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

} // namespace satnn
