#pragma once

#include <map>
#include <string>
#include <vector>

#include "ganlab/trainer.hpp"

namespace ganlab {

// One sweep axis value: a chain of one or two augmentation kinds, written
// "Translation" or "Translation+Brightness" in configs.
using KindChain = std::vector<AugKind>;

std::string chain_label(const KindChain& c);
KindChain chain_from_label(const std::string& label);

struct DataSpec {
    std::string source = "toy";  // toy | cifar10 | idx
    std::size_t n = 5000;        // toy only
    std::size_t channels = 3, height = 16, width = 16;
    std::uint64_t seed = 0;
    std::string path;  // cifar10/idx only
};

Dataset load_dataset(const DataSpec& spec);

struct SweepConfig {
    TrainConfig base;
    DataSpec data;
    std::uint64_t feat_seed = 0;
    std::size_t feat_hidden = 128, feat_dim = 64;
    std::vector<KindChain> kinds;
    std::vector<double> strengths;
    std::vector<TrainMode> modes;
    std::vector<std::uint64_t> seeds;

    void validate() const;
};

// Parses the JSON config document; unknown keys and out-of-range values are
// rejected with the offending key path. See README for the grammar.
SweepConfig parse_config(const std::string& text);
SweepConfig parse_config_file(const std::string& path);

struct CellResult {
    KindChain kinds;
    double strength = 0.0;
    TrainMode mode = TrainMode::Baseline;
    std::uint64_t seed = 0;
    RunRecord record;
};

// mean of the best ceil(0.15*n) values (lower is better)
double top15(std::vector<double> finals);

struct SweepResult {
    std::vector<CellResult> cells;  // sorted by (kind, strength, mode, seed)
};

// Executes the cross product kinds x strengths x modes x seeds, writes
// runs.csv, aggregate.csv, one SVG per kind, and periodic sample grids under
// out_dir. threads > 1 runs cells concurrently; outputs are identical.
SweepResult run_sweep(const SweepConfig& cfg, const std::string& out_dir,
                      std::size_t threads = 1);

// Binary PPM (P6, maxval 255); images tiled row-major into ceil(B/cols) rows.
void emit_ppm_grid(const Tensor& images, std::size_t cols, const std::string& path);

struct Series {
    std::string name;
    std::vector<std::pair<double, double>> points;
};

void emit_svg_lines(const std::vector<Series>& series, const std::string& x_label,
                    const std::string& y_label, const std::string& path);

std::string runs_csv(const SweepResult& r);
std::string aggregate_csv(const SweepResult& r);

}  // namespace ganlab
