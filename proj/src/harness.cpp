#include "ganlab/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <sstream>
#include <thread>

#include "ganlab/errors.hpp"

namespace ganlab {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---- config parsing -----------------------------------------------------

void check_keys(const json& obj, const std::string& path,
                std::initializer_list<const char*> allowed) {
    for (const auto& [key, _] : obj.items()) {
        if (std::find_if(allowed.begin(), allowed.end(),
                         [&](const char* a) { return key == a; }) == allowed.end())
            throw ConfigError("unknown key '" + (path.empty() ? key : path + "." + key) + "'");
    }
}

template <typename T>
T get_or(const json& obj, const std::string& path, const char* key, T fallback) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("bad value for key '" + path + "." + key + "'");
    }
}

AugmentSpec parse_chain_link(const json& link, const std::string& path) {
    if (!link.is_object()) throw ConfigError("'" + path + "' must be an object");
    check_keys(link, path, {"kind", "strength", "channel"});
    if (!link.contains("kind")) throw ConfigError("missing key '" + path + ".kind'");
    AugmentSpec spec;
    try {
        spec.kind = kind_from_name(link.at("kind").get<std::string>());
    } catch (const std::exception&) {
        throw ConfigError("bad value for key '" + path + ".kind'");
    }
    spec.strength = get_or(link, path, "strength", 0.0);
    spec.channel = get_or(link, path, "channel", -1);
    try {
        validate(spec);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("'") + path + "': " + e.what());
    }
    return spec;
}

std::string fmt_num(double x) {
    std::ostringstream os;
    os << std::setprecision(17) << x;
    return os.str();
}

std::string strength_tag(double x) {
    std::ostringstream os;
    os << x;
    std::string s = os.str();
    for (char& c : s)
        if (c == '.') c = 'p';
    return s;
}

// ---- sweep plumbing -----------------------------------------------------

Tensor sample_grid_images(const GanState& state, std::size_t n, std::uint64_t seed) {
    RngStream rng(seed, "grid");
    Tape t;
    GanVars v = load_params(t, state, false, false);
    Var img = generate(t, state.cfg, v.gen, t.constant(sample_latent(state.cfg, n, rng)));
    return t.value(img);
}

struct CellSortKey {
    std::string kind, mode;
    double strength;
    std::uint64_t seed;
    bool operator<(const CellSortKey& o) const {
        if (kind != o.kind) return kind < o.kind;
        if (strength != o.strength) return strength < o.strength;
        if (mode != o.mode) return mode < o.mode;
        return seed < o.seed;
    }
};

CellSortKey key_of(const CellResult& c) {
    return {chain_label(c.kinds), mode_name(c.mode), c.strength, c.seed};
}

}  // namespace

std::string chain_label(const KindChain& c) {
    if (c.empty()) return "Identity";
    std::string out;
    for (std::size_t i = 0; i < c.size(); ++i) {
        if (i) out += '+';
        out += kind_name(c[i]);
    }
    return out;
}

KindChain chain_from_label(const std::string& label) {
    KindChain c;
    std::size_t start = 0;
    while (start <= label.size()) {
        const std::size_t plus = label.find('+', start);
        const std::string part =
            label.substr(start, plus == std::string::npos ? std::string::npos : plus - start);
        try {
            c.push_back(kind_from_name(part));
        } catch (const std::exception& e) {
            throw ConfigError(e.what());
        }
        if (plus == std::string::npos) break;
        start = plus + 1;
    }
    if (c.size() > 2) throw ConfigError("augmentation chain '" + label + "' longer than 2");
    return c;
}

Dataset load_dataset(const DataSpec& spec) {
    if (spec.source == "toy")
        return gen_toy(spec.n, spec.channels, spec.height, spec.width, spec.seed);
    if (spec.source == "cifar10") return load_cifar10(spec.path);
    if (spec.source == "idx") return load_idx(spec.path, spec.channels);
    throw ConfigError("unknown dataset source '" + spec.source + "'");
}

void SweepConfig::validate() const {
    base.validate();
    if (kinds.empty() || strengths.empty() || modes.empty() || seeds.empty())
        throw ConfigError("sweep: empty axis (kinds/strengths/modes/seeds)");
    for (std::size_t i = 0; i < seeds.size(); ++i)
        for (std::size_t j = i + 1; j < seeds.size(); ++j)
            if (seeds[i] == seeds[j])
                throw ConfigError("sweep.seeds: duplicate seed " + std::to_string(seeds[i]));
}

SweepConfig parse_config(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config root must be an object");
    check_keys(doc, "",
               {"dataset", "gan", "train", "bcr", "cntr", "chain", "feat", "sweep"});

    SweepConfig cfg;
    const json feat = doc.value("feat", json::object());
    check_keys(feat, "feat", {"seed", "hidden", "dim"});
    cfg.feat_seed = get_or(feat, "feat", "seed", std::uint64_t{0});
    cfg.feat_hidden = get_or(feat, "feat", "hidden", std::size_t{128});
    cfg.feat_dim = get_or(feat, "feat", "dim", std::size_t{64});

    const json data = doc.value("dataset", json::object());
    check_keys(data, "dataset", {"source", "n", "channels", "height", "width", "seed", "path"});
    cfg.data.source = get_or(data, "dataset", "source", std::string("toy"));
    cfg.data.n = get_or(data, "dataset", "n", std::size_t{5000});
    cfg.data.channels = get_or(data, "dataset", "channels", std::size_t{3});
    cfg.data.height = get_or(data, "dataset", "height", std::size_t{16});
    cfg.data.width = get_or(data, "dataset", "width", std::size_t{16});
    cfg.data.seed = get_or(data, "dataset", "seed", std::uint64_t{0});
    cfg.data.path = get_or(data, "dataset", "path", std::string());

    TrainConfig& b = cfg.base;
    const json gan = doc.value("gan", json::object());
    check_keys(gan, "gan",
               {"latent_dim", "g_hidden", "d_hidden1", "d_hidden2", "proj_hidden", "embed_dim",
                "leaky_slope"});
    b.gan.latent_dim = get_or(gan, "gan", "latent_dim", b.gan.latent_dim);
    b.gan.g_hidden = get_or(gan, "gan", "g_hidden", b.gan.g_hidden);
    b.gan.d_hidden1 = get_or(gan, "gan", "d_hidden1", b.gan.d_hidden1);
    b.gan.d_hidden2 = get_or(gan, "gan", "d_hidden2", b.gan.d_hidden2);
    b.gan.proj_hidden = get_or(gan, "gan", "proj_hidden", b.gan.proj_hidden);
    b.gan.embed_dim = get_or(gan, "gan", "embed_dim", b.gan.embed_dim);
    b.gan.leaky_slope = get_or(gan, "gan", "leaky_slope", b.gan.leaky_slope);
    b.gan.channels = cfg.data.channels;
    b.gan.height = cfg.data.height;
    b.gan.width = cfg.data.width;

    const json train = doc.value("train", json::object());
    check_keys(train, "train",
               {"mode", "batch", "total_steps", "disc_steps", "lr_g", "lr_d", "beta1", "beta2",
                "eps", "anneal", "seed", "eval_interval", "eval_samples"});
    b.mode = mode_from_name(get_or(train, "train", "mode", std::string("baseline")));
    b.batch = get_or(train, "train", "batch", std::size_t{64});
    b.total_steps = get_or(train, "train", "total_steps", std::size_t{2000});
    b.disc_steps = get_or(train, "train", "disc_steps", std::size_t{1});
    b.adam.lr_g = get_or(train, "train", "lr_g", 2e-4);
    b.adam.lr_d = get_or(train, "train", "lr_d", 2e-4);
    b.adam.beta1 = get_or(train, "train", "beta1", 0.0);
    b.adam.beta2 = get_or(train, "train", "beta2", 0.999);
    b.adam.eps = get_or(train, "train", "eps", 1e-8);
    b.anneal = get_or(train, "train", "anneal", false);
    b.seed = get_or(train, "train", "seed", std::uint64_t{0});
    b.eval_interval = get_or(train, "train", "eval_interval", std::size_t{0});
    b.eval_samples = get_or(train, "train", "eval_samples", std::size_t{256});

    const json bcr = doc.value("bcr", json::object());
    check_keys(bcr, "bcr", {"lambda"});
    b.bcr.lambda = get_or(bcr, "bcr", "lambda", 10.0);
    if (b.bcr.lambda < 0.0) throw ConfigError("'bcr.lambda' must be non-negative");
    const json cntr = doc.value("cntr", json::object());
    check_keys(cntr, "cntr", {"lambda", "tau"});
    b.cntr.lambda = get_or(cntr, "cntr", "lambda", 0.1);
    b.cntr.tau = get_or(cntr, "cntr", "tau", 0.1);
    if (b.cntr.lambda < 0.0) throw ConfigError("'cntr.lambda' must be non-negative");
    if (b.cntr.tau <= 0.0) throw ConfigError("'cntr.tau' must be positive");

    if (doc.contains("chain")) {
        const json& chain = doc.at("chain");
        if (!chain.is_array()) throw ConfigError("'chain' must be an array");
        for (std::size_t i = 0; i < chain.size(); ++i)
            b.chain.push_back(
                parse_chain_link(chain[i], "chain[" + std::to_string(i) + "]"));
    }

    if (doc.contains("sweep")) {
        const json& sw = doc.at("sweep");
        check_keys(sw, "sweep", {"kinds", "strengths", "modes", "seeds"});
        for (const auto& k : sw.value("kinds", json::array())) {
            try {
                cfg.kinds.push_back(chain_from_label(k.get<std::string>()));
            } catch (const std::exception& e) {
                throw ConfigError(std::string("'sweep.kinds': ") + e.what());
            }
        }
        for (std::size_t i = 0; i < sw.value("strengths", json::array()).size(); ++i) {
            const double s = sw.at("strengths")[i].get<double>();
            if (s < 0.0)
                throw ConfigError("'sweep.strengths[" + std::to_string(i) +
                                  "]' must be non-negative");
            cfg.strengths.push_back(s);
        }
        for (const auto& m : sw.value("modes", json::array()))
            cfg.modes.push_back(mode_from_name(m.get<std::string>()));
        for (const auto& s : sw.value("seeds", json::array()))
            cfg.seeds.push_back(s.get<std::uint64_t>());
    }

    b.gan.contrastive = mode_uses_cntr(b.mode);
    for (TrainMode m : cfg.modes)
        if (mode_uses_cntr(m)) b.gan.contrastive = true;

    b.validate();
    return cfg;
}

SweepConfig parse_config_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open config '" + path + "'");
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_config(ss.str());
}

double top15(std::vector<double> finals) {
    if (finals.empty()) throw ContractError("top15: empty sample");
    std::sort(finals.begin(), finals.end());
    const std::size_t k =
        static_cast<std::size_t>(std::ceil(0.15 * static_cast<double>(finals.size())));
    double acc = 0.0;
    for (std::size_t i = 0; i < k; ++i) acc += finals[i];
    return acc / static_cast<double>(k);
}

void emit_ppm_grid(const Tensor& images, std::size_t cols, const std::string& path) {
    if (images.shape.size() != 4 || images.shape[0] == 0)
        throw ContractError("emit_ppm_grid: need a non-empty (B,C,H,W) batch");
    if (cols == 0) throw ContractError("emit_ppm_grid: cols must be positive");
    const std::size_t B = images.shape[0], C = images.shape[1], H = images.shape[2],
                      W = images.shape[3];
    const std::size_t rows = (B + cols - 1) / cols;
    std::vector<unsigned char> canvas(rows * H * cols * W * 3, 0);
    for (std::size_t b = 0; b < B; ++b) {
        const std::size_t tile_r = (b / cols) * H, tile_c = (b % cols) * W;
        for (std::size_t i = 0; i < H; ++i)
            for (std::size_t j = 0; j < W; ++j)
                for (std::size_t ch = 0; ch < 3; ++ch) {
                    const std::size_t src_ch = C == 3 ? ch : 0;
                    const double v = images.v[((b * C + src_ch) * H + i) * W + j];
                    const double scaled = std::round(v * 255.0);
                    canvas[((tile_r + i) * cols * W + tile_c + j) * 3 + ch] =
                        static_cast<unsigned char>(std::clamp(scaled, 0.0, 255.0));
                }
    }
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("emit_ppm_grid: cannot open '" + path + "'");
    os << "P6\n" << cols * W << " " << rows * H << "\n255\n";
    os.write(reinterpret_cast<const char*>(canvas.data()),
             static_cast<std::streamsize>(canvas.size()));
    if (!os) throw IoError("emit_ppm_grid: write failed for '" + path + "'");
}

void emit_svg_lines(const std::vector<Series>& series, const std::string& x_label,
                    const std::string& y_label, const std::string& path) {
    if (series.empty()) throw ContractError("emit_svg_lines: no series");
    for (const Series& s : series)
        if (s.points.size() < 2)
            throw ContractError("emit_svg_lines: series '" + s.name + "' has fewer than 2 points");

    double xmin = series[0].points[0].first, xmax = xmin;
    double ymin = series[0].points[0].second, ymax = ymin;
    for (const Series& s : series)
        for (const auto& [x, y] : s.points) {
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    if (xmax == xmin) xmax = xmin + 1.0;
    if (ymax == ymin) ymax = ymin + 1.0;

    // plot rectangle: x in [60,560], y in [20,320] (SVG y grows downward)
    const double X0 = 60, X1 = 560, Y0 = 320, Y1 = 20;
    auto px = [&](double x) { return X0 + (x - xmin) / (xmax - xmin) * (X1 - X0); };
    auto py = [&](double y) { return Y0 + (y - ymin) / (ymax - ymin) * (Y1 - Y0); };

    static const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                     "#ff7f0e", "#8c564b"};
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"720\" height=\"380\">\n";
    os << "<rect x=\"60\" y=\"20\" width=\"500\" height=\"300\" fill=\"none\" "
          "stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double fx = xmin + (xmax - xmin) * k / 4.0;
        const double fy = ymin + (ymax - ymin) * k / 4.0;
        os << "<line x1=\"" << px(fx) << "\" y1=\"320\" x2=\"" << px(fx)
           << "\" y2=\"326\" stroke=\"black\"/>\n";
        os << "<text x=\"" << px(fx) << "\" y=\"340\" font-size=\"11\" "
              "text-anchor=\"middle\">"
           << fx << "</text>\n";
        os << "<line x1=\"54\" y1=\"" << py(fy) << "\" x2=\"60\" y2=\"" << py(fy)
           << "\" stroke=\"black\"/>\n";
        os << "<text x=\"50\" y=\"" << py(fy) + 4 << "\" font-size=\"11\" "
              "text-anchor=\"end\">"
           << fy << "</text>\n";
    }
    os << "<text x=\"310\" y=\"370\" font-size=\"13\" text-anchor=\"middle\">" << x_label
       << "</text>\n";
    os << "<text x=\"15\" y=\"170\" font-size=\"13\" text-anchor=\"middle\" "
          "transform=\"rotate(-90 15 170)\">"
       << y_label << "</text>\n";
    for (std::size_t i = 0; i < series.size(); ++i) {
        const char* color = kPalette[i % 6];
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (const auto& [x, y] : series[i].points) os << px(x) << "," << py(y) << " ";
        os << "\"/>\n";
        const double ly = 30 + 18 * static_cast<double>(i);
        os << "<line x1=\"575\" y1=\"" << ly << "\" x2=\"595\" y2=\"" << ly << "\" stroke=\""
           << color << "\" stroke-width=\"1.5\"/>\n";
        os << "<text x=\"600\" y=\"" << ly + 4 << "\" font-size=\"12\">" << series[i].name
           << "</text>\n";
    }
    os << "</svg>\n";

    std::ofstream f(path);
    if (!f) throw IoError("emit_svg_lines: cannot open '" + path + "'");
    f << os.str();
}

std::string runs_csv(const SweepResult& r) {
    std::ostringstream os;
    os << "kind,strength,mode,seed,step,L_D,L_G,L_bcr,L_cntr,proxy_fid\n";
    for (const CellResult& c : r.cells) {
        const std::string prefix = chain_label(c.kinds) + "," + fmt_num(c.strength) + "," +
                                   mode_name(c.mode) + "," + std::to_string(c.seed) + ",";
        std::size_t ev = 0;
        for (const StepMetrics& m : c.record.steps) {
            os << prefix << m.step + 1 << "," << fmt_num(m.l_d) << "," << fmt_num(m.l_g) << ",";
            if (m.has_bcr) os << fmt_num(m.l_bcr);
            os << ",";
            if (m.has_cntr) os << fmt_num(m.l_cntr);
            os << ",";
            if (ev < c.record.evals.size() && c.record.evals[ev].step == m.step + 1) {
                os << fmt_num(c.record.evals[ev].proxy_fid);
                ++ev;
            }
            os << "\n";
        }
    }
    return os.str();
}

std::string aggregate_csv(const SweepResult& r) {
    std::map<CellSortKey, std::vector<double>> finals;
    for (const CellResult& c : r.cells) {
        CellSortKey k = key_of(c);
        k.seed = 0;  // aggregate over seeds
        finals[k].push_back(c.record.final_proxy_fid);
    }
    std::ostringstream os;
    os << "kind,strength,mode,n_seeds,mean_final_fid,std_final_fid,top15_final_fid\n";
    for (const auto& [k, v] : finals) {
        double mean = 0.0;
        for (double x : v) mean += x;
        mean /= static_cast<double>(v.size());
        double var = 0.0;
        for (double x : v) var += (x - mean) * (x - mean);
        const double sd = v.size() > 1 ? std::sqrt(var / static_cast<double>(v.size() - 1)) : 0.0;
        os << k.kind << "," << fmt_num(k.strength) << "," << k.mode << "," << v.size() << ","
           << fmt_num(mean) << "," << fmt_num(sd) << "," << fmt_num(top15(v)) << "\n";
    }
    return os.str();
}

SweepResult run_sweep(const SweepConfig& cfg, const std::string& out_dir, std::size_t threads) {
    cfg.validate();
    fs::create_directories(out_dir);
    {
        std::ofstream probe(fs::path(out_dir) / ".write_probe");
        if (!probe) throw IoError("output directory '" + out_dir + "' is not writable");
    }
    fs::remove(fs::path(out_dir) / ".write_probe");

    const Dataset data = load_dataset(cfg.data);
    const FeatureExtractor fx =
        FeatureExtractor::init(data.image_size(), cfg.feat_seed, cfg.feat_hidden, cfg.feat_dim);

    std::vector<CellResult> cells;
    for (const KindChain& kinds : cfg.kinds)
        for (double strength : cfg.strengths)
            for (TrainMode mode : cfg.modes)
                for (std::uint64_t seed : cfg.seeds) {
                    CellResult c;
                    c.kinds = kinds;
                    c.strength = strength;
                    c.mode = mode;
                    c.seed = seed;
                    cells.push_back(std::move(c));
                }

    auto run_cell = [&](CellResult& c) {
        TrainConfig tc = cfg.base;
        tc.mode = c.mode;
        tc.seed = c.seed;
        tc.gan.contrastive = cfg.base.gan.contrastive || mode_uses_cntr(c.mode);
        tc.chain.clear();
        for (AugKind k : c.kinds) {
            AugmentSpec s;
            s.kind = k;
            s.strength = c.strength;
            tc.chain.push_back(s);
        }
        const std::string tag = chain_label(c.kinds) + "_" + strength_tag(c.strength) + "_" +
                                mode_name(c.mode) + "_s" + std::to_string(c.seed);
        EvalHook hook = [&](const GanState& state, std::size_t step, double) {
            const Tensor grid = sample_grid_images(state, 64, c.seed);
            emit_ppm_grid(grid, 8,
                          (fs::path(out_dir) / ("samples_" + tag + "_step" +
                                                std::to_string(step) + ".ppm"))
                              .string());
        };
        c.record = run(tc, data, &fx, hook);
    };

    if (threads <= 1) {
        for (CellResult& c : cells) run_cell(c);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < threads; ++w)
            pool.emplace_back([&] {
                for (;;) {
                    const std::size_t i = next.fetch_add(1);
                    if (i >= cells.size()) return;
                    run_cell(cells[i]);
                }
            });
        for (std::thread& th : pool) th.join();
    }

    SweepResult result;
    result.cells = std::move(cells);
    std::sort(result.cells.begin(), result.cells.end(),
              [](const CellResult& a, const CellResult& b) { return key_of(a) < key_of(b); });

    std::ofstream(fs::path(out_dir) / "runs.csv") << runs_csv(result);
    std::ofstream(fs::path(out_dir) / "aggregate.csv") << aggregate_csv(result);

    // one figure per kind: top-15% final proxy-FID vs strength, line per mode
    if (cfg.strengths.size() >= 2) {
        for (const KindChain& kinds : cfg.kinds) {
            std::vector<Series> series;
            for (TrainMode mode : cfg.modes) {
                Series s;
                s.name = mode_name(mode);
                for (double strength : cfg.strengths) {
                    std::vector<double> finals;
                    for (const CellResult& c : result.cells)
                        if (c.kinds == kinds && c.strength == strength && c.mode == mode)
                            finals.push_back(c.record.final_proxy_fid);
                    s.points.emplace_back(strength, top15(finals));
                }
                std::sort(s.points.begin(), s.points.end());
                series.push_back(std::move(s));
            }
            emit_svg_lines(series, "strength", "top-15% final proxy-FID",
                           (fs::path(out_dir) / ("fid_vs_strength_" + chain_label(kinds) + ".svg"))
                               .string());
        }
    }
    return result;
}

}  // namespace ganlab
