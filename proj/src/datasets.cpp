#include "satnn/datasets.hpp"

#include "satnn/errors.hpp"
#include "satnn/random.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>
#include <unordered_set>

namespace satnn {

std::size_t Dataset::positives() const {
    return static_cast<std::size_t>(
        std::count_if(examples.begin(), examples.end(), [](const Example& e) { return e.label > 0; }));
}

namespace {

Example parity_example(std::uint64_t code, int dim, const std::vector<int>& positions) {
    Example ex;
    ex.features.resize(static_cast<std::size_t>(dim));
    for (int i = 0; i < dim; ++i) ex.features[static_cast<std::size_t>(i)] = static_cast<int>((code >> (dim - 1 - i)) & 1U);
    int parity = 0;
    for (int p : positions) parity ^= ex.features[static_cast<std::size_t>(p)];
    ex.label = parity ? 1 : -1;
    return ex;
}

} // namespace

Dataset gen_parity(int dim, const std::vector<int>& positions, std::optional<std::size_t> count, std::uint64_t seed) {
    if (dim < 1 || dim > 62) throw ConfigError("parity dimension must lie in [1, 62]");
    std::set<int> seen;
    for (int p : positions) {
        if (p < 0 || p >= dim) throw ConfigError("parity position " + std::to_string(p) + " outside [0, dim)");
        if (!seen.insert(p).second) throw ConfigError("duplicate parity position " + std::to_string(p));
    }
    const std::uint64_t total = std::uint64_t{1} << dim;

    Dataset ds;
    ds.seed = seed;
    std::ostringstream src;
    src << "parity dim=" << dim << " positions=";
    for (std::size_t i = 0; i < positions.size(); ++i) src << (i ? "," : "") << positions[i];

    if (!count) {
        if (dim > 24) throw ConfigError("exhaustive parity enumeration is limited to dim <= 24");
        src << " exhaustive";
        ds.examples.reserve(total);
        for (std::uint64_t code = 0; code < total; ++code) ds.examples.push_back(parity_example(code, dim, positions));
    } else {
        if (*count == 0 || *count > total) throw ConfigError("parity sample count must lie in [1, 2^dim]");
        src << " count=" << *count << " seed=" << seed;
        Rng rng{seed};
        std::vector<std::uint64_t> codes;
        if (dim <= 20) {
            for (std::size_t idx : sample_without_replacement(rng, total, *count)) codes.push_back(idx);
        } else {
            std::unordered_set<std::uint64_t> taken;
            while (codes.size() < *count) {
                const std::uint64_t c = uniform_below(rng, total);
                if (taken.insert(c).second) codes.push_back(c);
            }
        }
        for (std::uint64_t c : codes) ds.examples.push_back(parity_example(c, dim, positions));
    }
    ds.source = src.str();
    return ds;
}

std::vector<int> default_parity16_positions() { return {0, 1, 2, 3, 4, 6, 11, 14}; }

Dataset perceptron_toyset() {
    Dataset ds;
    ds.source = "perceptron sign(2x0+3x1-4x2-2x3+1)";
    for (int code = 0; code < 16; ++code) {
        Example ex;
        for (int i = 0; i < 4; ++i) ex.features.push_back((code >> (3 - i)) & 1);
        const auto& x = ex.features;
        const int s = 2 * x[0] + 3 * x[1] - 4 * x[2] - 2 * x[3] + 1;
        ex.label = s > 0 ? 1 : -1;
        ds.examples.push_back(std::move(ex));
    }
    return ds;
}

// ---------------------------------------------------------------- IDX ----

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::uint32_t read_be32(const std::vector<std::uint8_t>& bytes, std::size_t offset) {
    if (offset + 4 > bytes.size())
        throw FormatError("IDX header truncated at byte offset " + std::to_string(offset));
    return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
           (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void write_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

std::string hex32(std::uint32_t v) {
    std::ostringstream s;
    s << "0x" << std::hex;
    s.width(8);
    s.fill('0');
    s << v;
    return s.str();
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw EnvironmentError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

} // namespace

IdxImages parse_idx_images(const std::vector<std::uint8_t>& bytes) {
    const std::uint32_t magic = read_be32(bytes, 0);
    if (magic != kImageMagic)
        throw FormatError("bad IDX image magic " + hex32(magic) + " at byte offset 0 (expected " + hex32(kImageMagic) + ")");
    const std::uint32_t count = read_be32(bytes, 4);
    const std::uint32_t rows = read_be32(bytes, 8);
    const std::uint32_t cols = read_be32(bytes, 12);
    const std::size_t payload = std::size_t{count} * rows * cols;
    if (bytes.size() < 16 + payload)
        throw FormatError("IDX image payload truncated at byte offset " + std::to_string(bytes.size()) + " (need " +
                          std::to_string(16 + payload) + " bytes)");
    IdxImages out;
    out.images.reserve(count);
    std::size_t off = 16;
    for (std::uint32_t i = 0; i < count; ++i) {
        Image img{static_cast<int>(rows), static_cast<int>(cols), {}};
        img.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(off),
                          bytes.begin() + static_cast<std::ptrdiff_t>(off + std::size_t{rows} * cols));
        off += std::size_t{rows} * cols;
        out.images.push_back(std::move(img));
    }
    return out;
}

IdxLabels parse_idx_labels(const std::vector<std::uint8_t>& bytes) {
    const std::uint32_t magic = read_be32(bytes, 0);
    if (magic != kLabelMagic)
        throw FormatError("bad IDX label magic " + hex32(magic) + " at byte offset 0 (expected " + hex32(kLabelMagic) + ")");
    const std::uint32_t count = read_be32(bytes, 4);
    if (bytes.size() < 8 + std::size_t{count})
        throw FormatError("IDX label payload truncated at byte offset " + std::to_string(bytes.size()) + " (need " +
                          std::to_string(8 + std::size_t{count}) + " bytes)");
    return IdxLabels{std::vector<std::uint8_t>(bytes.begin() + 8, bytes.begin() + 8 + count)};
}

IdxImages load_idx_images(const std::filesystem::path& path) { return parse_idx_images(read_file_bytes(path)); }
IdxLabels load_idx_labels(const std::filesystem::path& path) { return parse_idx_labels(read_file_bytes(path)); }

std::vector<std::uint8_t> encode_idx_images(const IdxImages& images) {
    std::vector<std::uint8_t> out;
    const int rows = images.images.empty() ? 0 : images.images.front().rows;
    const int cols = images.images.empty() ? 0 : images.images.front().cols;
    write_be32(out, kImageMagic);
    write_be32(out, static_cast<std::uint32_t>(images.images.size()));
    write_be32(out, static_cast<std::uint32_t>(rows));
    write_be32(out, static_cast<std::uint32_t>(cols));
    for (const Image& img : images.images) {
        if (img.rows != rows || img.cols != cols) throw ShapeError("IDX images must share one shape");
        out.insert(out.end(), img.pixels.begin(), img.pixels.end());
    }
    return out;
}

std::vector<std::uint8_t> encode_idx_labels(const IdxLabels& labels) {
    std::vector<std::uint8_t> out;
    write_be32(out, kLabelMagic);
    write_be32(out, static_cast<std::uint32_t>(labels.labels.size()));
    out.insert(out.end(), labels.labels.begin(), labels.labels.end());
    return out;
}

// ------------------------------------------------------- preprocessing ----

int discretize_pixel(double v, const Hyperparams& hp) {
    if (!(v >= 0.0 && v <= 1.0)) throw RangeError("pixel value " + std::to_string(v) + " outside [0, 1]");
    if (hp.alpha <= 1 || hp.alpha >= hp.num_bits) throw ConfigError("alpha must satisfy 1 < alpha < num_bits");
    return static_cast<int>(std::floor(v * static_cast<double>((1 << hp.alpha) - 1)));
}

std::vector<double> area_resize(const std::vector<double>& grid, int side, int new_side) {
    if (side < 1 || new_side < 1 || grid.size() != static_cast<std::size_t>(side) * side)
        throw ShapeError("area_resize: grid is not side x side");
    const double scale = static_cast<double>(side) / new_side;
    std::vector<double> out(static_cast<std::size_t>(new_side) * new_side, 0.0);
    // Overlap of source cell [k, k+1) with output span [lo, hi).
    auto overlap = [](int k, double lo, double hi) {
        return std::max(0.0, std::min<double>(k + 1, hi) - std::max<double>(k, lo));
    };
    for (int r = 0; r < new_side; ++r) {
        const double r_lo = r * scale, r_hi = (r + 1) * scale;
        for (int c = 0; c < new_side; ++c) {
            const double c_lo = c * scale, c_hi = (c + 1) * scale;
            double acc = 0.0;
            for (int sr = static_cast<int>(std::floor(r_lo)); sr < std::min(side, static_cast<int>(std::ceil(r_hi))); ++sr) {
                const double wr = overlap(sr, r_lo, r_hi);
                for (int sc = static_cast<int>(std::floor(c_lo)); sc < std::min(side, static_cast<int>(std::ceil(c_hi))); ++sc)
                    acc += wr * overlap(sc, c_lo, c_hi) * grid[static_cast<std::size_t>(sr * side + sc)];
            }
            out[static_cast<std::size_t>(r * new_side + c)] = acc / (scale * scale);
        }
    }
    return out;
}

namespace {

constexpr int kKernelisedSide = 10;

// Smallest square window containing every non-zero pixel, clamped to the
// image. An all-zero image keeps its full extent.
std::vector<double> crop_zero_border(const Image& image, int& side_out) {
    const int n = image.rows;
    int top = n, bottom = -1, left = n, right = -1;
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c)
            if (image.at(r, c) != 0) {
                top = std::min(top, r);
                bottom = std::max(bottom, r);
                left = std::min(left, c);
                right = std::max(right, c);
            }
    if (bottom < 0) {
        top = left = 0;
        bottom = right = n - 1;
    }
    const int side = std::max(bottom - top + 1, right - left + 1);
    // Grow the narrower extent symmetrically, then shift back inside.
    int r0 = top - (side - (bottom - top + 1)) / 2;
    int c0 = left - (side - (right - left + 1)) / 2;
    r0 = std::clamp(r0, 0, n - side);
    c0 = std::clamp(c0, 0, n - side);
    std::vector<double> out(static_cast<std::size_t>(side) * side);
    for (int r = 0; r < side; ++r)
        for (int c = 0; c < side; ++c) out[static_cast<std::size_t>(r * side + c)] = image.at(r0 + r, c0 + c);
    side_out = side;
    return out;
}

} // namespace

std::vector<int> preprocess_image(const Image& image, PreprocessScheme scheme, const Hyperparams& hp) {
    if (image.rows != image.cols || image.rows < 1) throw ShapeError("preprocess_image: image must be square");
    if (image.pixels.size() != static_cast<std::size_t>(image.rows) * image.cols)
        throw ShapeError("preprocess_image: pixel count does not match shape");

    std::vector<double> pooled;
    if (scheme == PreprocessScheme::Vanilla) {
        if (image.rows % 2 != 0) throw ShapeError("vanilla preprocessing needs an even image side");
        std::vector<double> grid(image.pixels.begin(), image.pixels.end());
        pooled = area_resize(grid, image.rows, image.rows / 2);
    } else {
        int side = 0;
        auto cropped = crop_zero_border(image, side);
        pooled = area_resize(cropped, side, kKernelisedSide);
    }
    std::vector<int> features;
    features.reserve(pooled.size());
    for (double v : pooled) features.push_back(discretize_pixel(std::clamp(v / 255.0, 0.0, 1.0), hp));
    return features;
}

Dataset images_to_dataset(const IdxImages& images, const IdxLabels& labels, int target_digit, PreprocessScheme scheme,
                          const Hyperparams& hp, std::optional<std::size_t> per_class) {
    if (images.images.size() != labels.labels.size()) throw ShapeError("image and label counts differ");
    Dataset ds;
    ds.source = "idx digit=" + std::to_string(target_digit);
    std::size_t pos = 0, neg = 0;
    for (std::size_t i = 0; i < images.images.size(); ++i) {
        const bool is_target = labels.labels[i] == target_digit;
        std::size_t& taken = is_target ? pos : neg;
        if (per_class && taken >= *per_class) continue;
        ++taken;
        ds.examples.push_back({preprocess_image(images.images[i], scheme, hp), is_target ? 1 : -1});
    }
    return ds;
}

// ------------------------------------------------------------ batches ----

std::vector<std::vector<std::size_t>> sample_batch_indices(std::size_t dataset_size, int num_batches, int batch_size,
                                                           std::uint64_t seed) {
    if (num_batches < 1) throw ConfigError("num_batches must be at least 1");
    if (batch_size < 1 || static_cast<std::size_t>(batch_size) > dataset_size)
        throw ConfigError("batch_size " + std::to_string(batch_size) + " exceeds dataset size " + std::to_string(dataset_size));
    std::vector<std::vector<std::size_t>> batches;
    batches.reserve(static_cast<std::size_t>(num_batches));
    for (int b = 0; b < num_batches; ++b) {
        Rng rng{derive_seed(seed, static_cast<std::uint64_t>(b))};
        batches.push_back(sample_without_replacement(rng, dataset_size, static_cast<std::size_t>(batch_size)));
    }
    return batches;
}

std::vector<std::vector<Example>> sample_batches(const Dataset& ds, int num_batches, int batch_size, std::uint64_t seed) {
    std::vector<std::vector<Example>> batches;
    for (const auto& indices : sample_batch_indices(ds.size(), num_batches, batch_size, seed)) {
        std::vector<Example> batch;
        batch.reserve(indices.size());
        for (std::size_t idx : indices) batch.push_back(ds.examples[idx]);
        batches.push_back(std::move(batch));
    }
    return batches;
}

// --------------------------------------------------------- cache files ----

std::string format_dataset(const Dataset& ds) {
    std::ostringstream out;
    if (!ds.source.empty()) out << "# source: " << ds.source << '\n';
    out << "# seed: " << ds.seed << '\n';
    for (const Example& ex : ds.examples) {
        for (std::size_t i = 0; i < ex.features.size(); ++i) out << (i ? " " : "") << ex.features[i];
        out << '\t' << ex.label << '\n';
    }
    return out.str();
}

Dataset parse_dataset(const std::string& text) {
    Dataset ds;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line.front() == '#') {
            if (line.rfind("# source: ", 0) == 0) ds.source = line.substr(10);
            if (line.rfind("# seed: ", 0) == 0) ds.seed = std::stoull(line.substr(8));
            continue;
        }
        const auto tab = line.find('\t');
        if (tab == std::string::npos) throw FormatError("dataset line " + std::to_string(line_no) + " has no tab");
        Example ex;
        std::istringstream feats(line.substr(0, tab));
        int v = 0;
        while (feats >> v) ex.features.push_back(v);
        if (!feats.eof()) throw FormatError("bad feature on dataset line " + std::to_string(line_no));
        try {
            ex.label = std::stoi(line.substr(tab + 1));
        } catch (const std::exception&) {
            throw FormatError("bad label on dataset line " + std::to_string(line_no));
        }
        if (ex.label != 1 && ex.label != -1) throw FormatError("label must be -1 or +1 on line " + std::to_string(line_no));
        if (!ds.examples.empty() && ex.features.size() != ds.dim())
            throw FormatError("feature count changes on dataset line " + std::to_string(line_no));
        ds.examples.push_back(std::move(ex));
    }
    if (ds.examples.empty()) throw FormatError("dataset has no examples");
    return ds;
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw EnvironmentError("cannot write " + path.string());
    out << format_dataset(ds);
}

Dataset load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw EnvironmentError("cannot open dataset " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_dataset(buf.str());
}

} // namespace satnn
