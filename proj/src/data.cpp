#include "ganlab/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "ganlab/errors.hpp"

namespace ganlab {

namespace {

std::vector<unsigned char> read_all(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open '" + path + "'");
    return std::vector<unsigned char>(std::istreambuf_iterator<char>(is),
                                      std::istreambuf_iterator<char>());
}

std::uint32_t be32(const unsigned char* p) {
    return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) |
           (std::uint32_t(p[2]) << 8) | std::uint32_t(p[3]);
}

// Soft pixel coverage of a half-plane edge: 1 one pixel inside, 0 one outside.
double edge_cov(double signed_dist) { return std::clamp(signed_dist + 0.5, 0.0, 1.0); }

}  // namespace

Tensor Dataset::image(std::size_t i) const {
    if (i >= size()) throw ContractError("Dataset::image: index out of range");
    Tensor t = Tensor::zeros({1, channels, height, width});
    std::copy_n(pixels.begin() + static_cast<std::ptrdiff_t>(i * image_size()), image_size(),
                t.v.begin());
    return t;
}

Tensor Dataset::gather(const std::vector<std::size_t>& idx) const {
    Tensor t = Tensor::zeros({idx.size(), channels, height, width});
    const std::size_t m = image_size();
    for (std::size_t k = 0; k < idx.size(); ++k) {
        if (idx[k] >= size()) throw ContractError("Dataset::gather: index out of range");
        std::copy_n(pixels.begin() + static_cast<std::ptrdiff_t>(idx[k] * m), m,
                    t.v.begin() + static_cast<std::ptrdiff_t>(k * m));
    }
    return t;
}

Dataset gen_toy(std::size_t n, std::size_t channels, std::size_t height, std::size_t width,
                std::uint64_t seed) {
    if (n < 1) throw ContractError("gen_toy: need at least one image");
    if (channels < 1 || height < 2 || width < 2)
        throw ContractError("gen_toy: degenerate image dimensions");
    RngStream rng(seed, "toy");
    Dataset d;
    d.channels = channels;
    d.height = height;
    d.width = width;
    d.source = "toy";
    d.pixels.resize(n * d.image_size());

    std::vector<double> bg(channels), fg(channels);
    for (std::size_t img = 0; img < n; ++img) {
        double* px = d.pixels.data() + img * d.image_size();
        for (std::size_t c = 0; c < channels; ++c) bg[c] = rng.uniform();
        for (std::size_t c = 0; c < channels; ++c)
            for (std::size_t i = 0; i < height; ++i)
                for (std::size_t j = 0; j < width; ++j)
                    px[(c * height + i) * width + j] = bg[c];

        const int shapes = 1 + static_cast<int>(rng.uniform_int(2));
        for (int s = 0; s < shapes; ++s) {
            for (std::size_t c = 0; c < channels; ++c) fg[c] = rng.uniform();
            const bool disc = rng.uniform() < 0.5;
            const double cy = rng.uniform(0.15, 0.85) * static_cast<double>(height);
            const double cx = rng.uniform(0.15, 0.85) * static_cast<double>(width);
            const double ry = rng.uniform(0.1, 0.3) * static_cast<double>(height);
            const double rx = rng.uniform(0.1, 0.3) * static_cast<double>(width);
            for (std::size_t i = 0; i < height; ++i)
                for (std::size_t j = 0; j < width; ++j) {
                    const double dy = static_cast<double>(i) + 0.5 - cy;
                    const double dx = static_cast<double>(j) + 0.5 - cx;
                    double a;
                    if (disc) {
                        // scale to a unit circle so the shape may be elliptic
                        const double r = std::sqrt((dy / ry) * (dy / ry) + (dx / rx) * (dx / rx));
                        a = edge_cov((1.0 - r) * std::min(ry, rx));
                    } else {
                        a = edge_cov(ry - std::abs(dy)) * edge_cov(rx - std::abs(dx));
                    }
                    if (a <= 0.0) continue;
                    for (std::size_t c = 0; c < channels; ++c) {
                        double& v = px[(c * height + i) * width + j];
                        v = (1.0 - a) * v + a * fg[c];
                    }
                }
        }

        // dark frame around every image: anchors the composition so spatial
        // augmentations change the distribution instead of relabeling shape
        // positions (shifted frames pick up reflection and resampling marks)
        for (std::size_t c = 0; c < channels; ++c) fg[c] = rng.uniform(0.0, 0.25);
        for (std::size_t c = 0; c < channels; ++c)
            for (std::size_t i = 0; i < height; ++i)
                for (std::size_t j = 0; j < width; ++j)
                    if (i == 0 || j == 0 || i + 1 == height || j + 1 == width)
                        px[(c * height + i) * width + j] = fg[c];
    }
    return d;
}

Dataset load_cifar10(const std::string& path) {
    const std::vector<unsigned char> bytes = read_all(path);
    constexpr std::size_t kRecord = 3073;  // label + 3*32*32
    if (bytes.empty()) throw FormatError("cifar10 '" + path + "': empty file");
    if (bytes.size() % kRecord != 0)
        throw FormatError("cifar10 '" + path + "': size " + std::to_string(bytes.size()) +
                          " is not a multiple of 3073 (stray bytes from offset " +
                          std::to_string(bytes.size() - bytes.size() % kRecord) + ")");
    Dataset d;
    d.channels = 3;
    d.height = 32;
    d.width = 32;
    d.source = path;
    const std::size_t n = bytes.size() / kRecord;
    d.pixels.resize(n * d.image_size());
    for (std::size_t i = 0; i < n; ++i) {
        const unsigned char* rec = bytes.data() + i * kRecord + 1;  // skip label
        double* px = d.pixels.data() + i * d.image_size();
        for (std::size_t k = 0; k < 3072; ++k) px[k] = rec[k] / 255.0;
    }
    return d;
}

Dataset load_idx(const std::string& path, std::size_t channels) {
    if (channels < 1) throw ContractError("load_idx: channels must be positive");
    const std::vector<unsigned char> bytes = read_all(path);
    if (bytes.size() < 16) throw FormatError("idx '" + path + "': truncated header");
    if (be32(bytes.data()) != 0x00000803u)
        throw FormatError("idx '" + path + "': bad magic (want 0x00000803)");
    const std::size_t n = be32(bytes.data() + 4);
    const std::size_t rows = be32(bytes.data() + 8);
    const std::size_t cols = be32(bytes.data() + 12);
    if (bytes.size() != 16 + n * rows * cols)
        throw FormatError("idx '" + path + "': payload size " + std::to_string(bytes.size() - 16) +
                          " does not match dims " + std::to_string(n) + "x" +
                          std::to_string(rows) + "x" + std::to_string(cols));
    if (n == 0 || rows == 0 || cols == 0) throw FormatError("idx '" + path + "': empty dims");
    Dataset d;
    d.channels = channels;
    d.height = rows;
    d.width = cols;
    d.source = path;
    d.pixels.resize(n * d.image_size());
    for (std::size_t i = 0; i < n; ++i) {
        const unsigned char* rec = bytes.data() + 16 + i * rows * cols;
        double* px = d.pixels.data() + i * d.image_size();
        for (std::size_t c = 0; c < channels; ++c)
            for (std::size_t k = 0; k < rows * cols; ++k)
                px[c * rows * cols + k] = rec[k] / 255.0;
    }
    return d;
}

BatchSampler::BatchSampler(const Dataset& data, std::size_t batch, RngStream rng)
    : data_(&data), batch_(batch), pos_(0), perm_(data.size()), rng_(rng) {
    if (data.size() == 0) throw ContractError("BatchSampler: empty dataset");
    if (batch == 0 || batch > data.size())
        throw ContractError("BatchSampler: batch size " + std::to_string(batch) +
                            " out of range for dataset of " + std::to_string(data.size()));
    std::iota(perm_.begin(), perm_.end(), std::size_t{0});
    rng_.shuffle(perm_);
}

std::size_t BatchSampler::next_index() {
    if (pos_ == perm_.size()) {
        rng_.shuffle(perm_);
        pos_ = 0;
    }
    return perm_[pos_++];
}

Tensor BatchSampler::next() {
    std::vector<std::size_t> idx(batch_);
    for (std::size_t& i : idx) i = next_index();
    return data_->gather(idx);
}

}  // namespace ganlab
