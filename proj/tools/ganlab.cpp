// Command-line front end: single runs, sweeps, proxy-FID evaluation, and the
// augmentation FID-ratio diagnostic.
#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "ganlab/errors.hpp"
#include "ganlab/harness.hpp"

namespace fs = std::filesystem;
using namespace ganlab;

namespace {

// "toy:<n>:<CxHxW>:<seed>" | "cifar10:<path>" | "idx:<path>[:<channels>]"
Dataset parse_source(const std::string& src) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        const std::size_t colon = src.find(':', start);
        parts.push_back(src.substr(start, colon == std::string::npos ? std::string::npos
                                                                     : colon - start));
        if (colon == std::string::npos) break;
        start = colon + 1;
    }
    if (parts[0] == "toy") {
        DataSpec spec;
        if (parts.size() < 2) throw ConfigError("toy source needs a count: toy:<n>[:CxHxW[:seed]]");
        spec.n = std::stoul(parts[1]);
        if (parts.size() > 2) {
            unsigned c, h, w;
            if (std::sscanf(parts[2].c_str(), "%ux%ux%u", &c, &h, &w) != 3)
                throw ConfigError("bad toy dims '" + parts[2] + "', want CxHxW");
            spec.channels = c;
            spec.height = h;
            spec.width = w;
        }
        if (parts.size() > 3) spec.seed = std::stoull(parts[3]);
        return load_dataset(spec);
    }
    if (parts[0] == "cifar10") {
        if (parts.size() != 2) throw ConfigError("cifar10 source: cifar10:<path>");
        return load_cifar10(parts[1]);
    }
    if (parts[0] == "idx") {
        if (parts.size() < 2) throw ConfigError("idx source: idx:<path>[:<channels>]");
        return load_idx(parts[1], parts.size() > 2 ? std::stoul(parts[2]) : 3);
    }
    throw ConfigError("unknown dataset source '" + parts[0] + "'");
}

Tensor all_images(const Dataset& d) {
    std::vector<std::size_t> idx(d.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    return d.gather(idx);
}

int cmd_train(const std::string& config_path, const std::string& out_dir,
              std::int64_t seed_override) {
    SweepConfig cfg = parse_config_file(config_path);
    if (seed_override >= 0) cfg.base.seed = static_cast<std::uint64_t>(seed_override);

    // reuse the sweep writer with a single cell matching the base config
    cfg.kinds = {KindChain{}};
    for (const AugmentSpec& s : cfg.base.chain) cfg.kinds[0].push_back(s.kind);
    cfg.strengths = {cfg.base.chain.empty() ? 0.0 : cfg.base.chain[0].strength};
    cfg.modes = {cfg.base.mode};
    cfg.seeds = {cfg.base.seed};

    SweepResult r = run_sweep(cfg, out_dir, 1);
    const CellResult& cell = r.cells.at(0);
    save_checkpoint(cell.record.state, (fs::path(out_dir) / "final.ckpt").string());
    std::cout << "final proxy-FID: " << cell.record.final_proxy_fid << "\n";
    return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& out_dir, std::size_t threads) {
    SweepConfig cfg = parse_config_file(config_path);
    SweepResult r = run_sweep(cfg, out_dir, threads);
    std::cout << "completed " << r.cells.size() << " runs; artifacts in " << out_dir << "\n";
    return 0;
}

int cmd_eval(const std::string& real_src, const std::string& fake_src, std::uint64_t feat_seed,
             std::size_t feat_dim) {
    Dataset real = parse_source(real_src), fake = parse_source(fake_src);
    FeatureExtractor fx = FeatureExtractor::init(real.image_size(), feat_seed, 128, feat_dim);
    std::cout << "proxy-FID: " << proxy_fid(fx, all_images(real), all_images(fake)) << "\n";
    return 0;
}

int cmd_fid_ratio(const std::string& real_src, const std::string& fake_src,
                  const std::string& out_file, std::uint64_t seed, std::size_t feat_dim) {
    Dataset real = parse_source(real_src), fake = parse_source(fake_src);
    FeatureExtractor fx = FeatureExtractor::init(real.image_size(), seed, 128, feat_dim);
    const Tensor xr = all_images(real), xf = all_images(fake);
    RngStream rng(seed, "ratio");

    std::ostringstream csv;
    csv << "kind,strength,fid_ratio\n";
    for (int k = 0; k < 13; ++k) {
        const AugKind kind = static_cast<AugKind>(k);
        for (double strength : {0.1, 0.2, 0.3}) {
            AugmentSpec spec;
            spec.kind = kind;
            spec.strength = kind == AugKind::Identity ? 0.0 : strength;
            const double ratio = fid_ratio(fx, spec, xr, xf, rng);
            csv << kind_name(kind) << "," << strength << "," << ratio << "\n";
            if (kind == AugKind::Identity) break;  // strength is meaningless
        }
    }
    std::cout << csv.str();
    if (!out_file.empty()) {
        std::ofstream os(out_file);
        if (!os) throw IoError("cannot open '" + out_file + "'");
        os << csv.str();
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"desk-scale GAN augmentation lab"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out", real_src, fake_src, ratio_out;
    std::size_t threads = 1, feat_dim = 64;
    std::int64_t seed_override = -1;
    std::uint64_t feat_seed = 0;

    CLI::App* train = app.add_subcommand("train", "single training run");
    train->add_option("--config", config_path, "JSON config file")->required();
    train->add_option("--out", out_dir, "output directory");
    train->add_option("--seed", seed_override, "override the config seed");

    CLI::App* sweep = app.add_subcommand("sweep", "kind x strength x mode x seed sweep");
    sweep->add_option("--config", config_path, "JSON config file")->required();
    sweep->add_option("--out", out_dir, "output directory");
    sweep->add_option("--threads", threads, "concurrent runs");

    CLI::App* eval = app.add_subcommand("eval", "proxy-FID between two image sources");
    eval->add_option("--real", real_src, "real image source")->required();
    eval->add_option("--fake", fake_src, "fake image source")->required();
    eval->add_option("--feat-seed", feat_seed, "feature extractor seed");
    eval->add_option("--feat-dim", feat_dim, "feature dimension");

    CLI::App* ratio = app.add_subcommand("fid-ratio", "augmented-vs-clean FID ratio report");
    ratio->add_option("--real", real_src, "real image source")->required();
    ratio->add_option("--fake", fake_src, "fake image source")->required();
    ratio->add_option("--out", ratio_out, "CSV output file");
    ratio->add_option("--seed", feat_seed, "extractor and draw seed");
    ratio->add_option("--feat-dim", feat_dim, "feature dimension");

    try {
        app.parse(argc, argv);
        if (train->parsed()) return cmd_train(config_path, out_dir, seed_override);
        if (sweep->parsed()) return cmd_sweep(config_path, out_dir, threads);
        if (eval->parsed()) return cmd_eval(real_src, fake_src, feat_seed, feat_dim);
        if (ratio->parsed())
            return cmd_fid_ratio(real_src, fake_src, ratio_out, feat_seed, feat_dim);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
