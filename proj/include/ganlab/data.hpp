#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ganlab/rng.hpp"
#include "ganlab/tensor.hpp"

namespace ganlab {

// Immutable image store. Pixels are row-major (n, C, H, W), each in [0,1].
struct Dataset {
    std::size_t channels = 0, height = 0, width = 0;
    std::vector<double> pixels;
    std::string source;

    std::size_t image_size() const { return channels * height * width; }
    std::size_t size() const { return image_size() ? pixels.size() / image_size() : 0; }
    Tensor image(std::size_t i) const;
    Tensor gather(const std::vector<std::size_t>& idx) const;
};

// Procedural distribution: anti-aliased colored rectangles and discs on solid
// backgrounds. Spatial structure makes translation/zoom augmentations visible.
Dataset gen_toy(std::size_t n, std::size_t channels, std::size_t height, std::size_t width,
                std::uint64_t seed);

// CIFAR-10 binary format: 3073-byte records (label byte + 3072 channel-major
// pixel bytes). Labels are discarded.
Dataset load_cifar10(const std::string& path);

// IDX image file (magic 0x00000803, big-endian dims, unsigned bytes).
// Grayscale planes are replicated across `channels`.
Dataset load_idx(const std::string& path, std::size_t channels);

// Without-replacement shuffled epochs; the index stream crosses epoch
// boundaries so every index appears exactly once per epoch.
class BatchSampler {
  public:
    BatchSampler(const Dataset& data, std::size_t batch, RngStream rng);
    Tensor next();
    std::size_t next_index();

  private:
    const Dataset* data_;
    std::size_t batch_, pos_;
    std::vector<std::size_t> perm_;
    RngStream rng_;
};

}  // namespace ganlab
