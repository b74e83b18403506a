#include "ganlab/gan.hpp"

#include <cstring>
#include <fstream>

#include "ganlab/errors.hpp"

namespace ganlab {

namespace {

constexpr char kMagic[8] = {'G', 'A', 'N', 'L', 'A', 'B', 'C', '1'};

void fnv_mix(std::uint64_t& h, std::uint64_t x) {
    h ^= x;
    h *= 0x100000001b3ULL;
}

ParamTensor make_param(std::string name, Shape shape, double scale, RngStream& rng) {
    Tensor t = Tensor::zeros(shape);
    for (double& x : t.v) x = scale * rng.normal();
    return ParamTensor{std::move(name), t, Tensor::zeros(shape), Tensor::zeros(shape)};
}

ParamTensor make_bias(std::string name, std::size_t n) {
    return ParamTensor{std::move(name), Tensor::zeros({n}), Tensor::zeros({n}),
                       Tensor::zeros({n})};
}

double init_scale(std::size_t fan_in) { return 1.0 / std::sqrt(static_cast<double>(fan_in)); }

// affine layer: x (B,n) -> x W + b, W (n,m), b (m)
Var affine(Tape& t, Var x, Var w, Var b) { return t.add(t.matmul(x, w), b); }

void write_u64(std::ostream& os, std::uint64_t x) {
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(x >> (8 * i));
    os.write(reinterpret_cast<const char*>(buf), 8);
}

std::uint64_t read_u64(std::istream& is) {
    unsigned char buf[8];
    is.read(reinterpret_cast<char*>(buf), 8);
    std::uint64_t x = 0;
    for (int i = 0; i < 8; ++i) x |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return x;
}

void write_params(std::ostream& os, const std::vector<ParamTensor>& ps) {
    write_u64(os, ps.size());
    for (const ParamTensor& p : ps) {
        write_u64(os, p.name.size());
        os.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
        write_u64(os, p.value.shape.size());
        for (std::size_t d : p.value.shape) write_u64(os, d);
        for (const Tensor* t : {&p.value, &p.adam_m, &p.adam_v}) {
            static_assert(sizeof(double) == 8);
            os.write(reinterpret_cast<const char*>(t->v.data()),
                     static_cast<std::streamsize>(t->v.size() * 8));
        }
    }
}

std::vector<ParamTensor> read_params(std::istream& is) {
    std::vector<ParamTensor> ps(read_u64(is));
    for (ParamTensor& p : ps) {
        p.name.resize(read_u64(is));
        is.read(p.name.data(), static_cast<std::streamsize>(p.name.size()));
        Shape shape(read_u64(is));
        for (std::size_t& d : shape) d = read_u64(is);
        for (Tensor* t : {&p.value, &p.adam_m, &p.adam_v}) {
            *t = Tensor::zeros(shape);
            is.read(reinterpret_cast<char*>(t->v.data()),
                    static_cast<std::streamsize>(t->v.size() * 8));
        }
        if (!is) throw FormatError("checkpoint: truncated parameter block '" + p.name + "'");
    }
    return ps;
}

}  // namespace

std::uint64_t GanConfig::fingerprint() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::uint64_t x : {latent_dim, channels, height, width, g_hidden, d_hidden1, d_hidden2,
                            proj_hidden, embed_dim, static_cast<std::size_t>(contrastive)})
        fnv_mix(h, x);
    std::uint64_t slope_bits;
    std::memcpy(&slope_bits, &leaky_slope, 8);
    fnv_mix(h, slope_bits);
    return h;
}

GanState GanState::init(const GanConfig& cfg, std::uint64_t seed) {
    RngStream rng(seed, "init");
    GanState s;
    s.cfg = cfg;
    const std::size_t img = cfg.image_size();
    s.gen.push_back(make_param("g.w0", {cfg.latent_dim, cfg.g_hidden}, init_scale(cfg.latent_dim), rng));
    s.gen.push_back(make_bias("g.b0", cfg.g_hidden));
    s.gen.push_back(make_param("g.w1", {cfg.g_hidden, cfg.g_hidden}, init_scale(cfg.g_hidden), rng));
    s.gen.push_back(make_bias("g.b1", cfg.g_hidden));
    s.gen.push_back(make_param("g.w2", {cfg.g_hidden, img}, init_scale(cfg.g_hidden), rng));
    s.gen.push_back(make_bias("g.b2", img));
    s.disc.push_back(make_param("d.w0", {img, cfg.d_hidden1}, init_scale(img), rng));
    s.disc.push_back(make_bias("d.b0", cfg.d_hidden1));
    s.disc.push_back(make_param("d.w1", {cfg.d_hidden1, cfg.d_hidden2}, init_scale(cfg.d_hidden1), rng));
    s.disc.push_back(make_bias("d.b1", cfg.d_hidden2));
    s.disc.push_back(make_param("d.wl", {cfg.d_hidden2, 1}, init_scale(cfg.d_hidden2), rng));
    s.disc.push_back(make_bias("d.bl", 1));
    if (cfg.contrastive) {
        s.proj.push_back(make_param("p.w0", {cfg.d_hidden2, cfg.proj_hidden},
                                    init_scale(cfg.d_hidden2), rng));
        s.proj.push_back(make_bias("p.b0", cfg.proj_hidden));
        s.proj.push_back(make_param("p.w1", {cfg.proj_hidden, cfg.embed_dim},
                                    init_scale(cfg.proj_hidden), rng));
        s.proj.push_back(make_bias("p.b1", cfg.embed_dim));
    }
    return s;
}

GanVars load_params(Tape& tape, const GanState& state, bool grad_gen, bool grad_disc) {
    GanVars v;
    for (const ParamTensor& p : state.gen) v.gen.push_back(tape.leaf(p.value, grad_gen));
    for (const ParamTensor& p : state.disc) v.disc.push_back(tape.leaf(p.value, grad_disc));
    for (const ParamTensor& p : state.proj) v.proj.push_back(tape.leaf(p.value, grad_disc));
    return v;
}

Tensor sample_latent(const GanConfig& cfg, std::size_t batch, RngStream& rng) {
    Tensor z = Tensor::zeros({batch, cfg.latent_dim});
    for (double& x : z.v) x = rng.normal();
    return z;
}

Var generate(Tape& t, const GanConfig& cfg, const std::vector<Var>& gen, Var z) {
    const Shape zs = t.value(z).shape;
    if (zs.size() != 2 || zs[1] != cfg.latent_dim)
        throw ShapeError("generate: latent batch must be (B," + std::to_string(cfg.latent_dim) +
                         "), got " + shape_str(zs));
    Var h = t.leaky_relu(affine(t, z, gen[0], gen[1]), cfg.leaky_slope);
    h = t.leaky_relu(affine(t, h, gen[2], gen[3]), cfg.leaky_slope);
    Var o = t.tanh_op(affine(t, h, gen[4], gen[5]));
    Var img = t.scalar_add(t.scalar_mul(o, 0.5), 0.5);
    return t.reshape(img, {zs[0], cfg.channels, cfg.height, cfg.width});
}

DiscOut discriminate(Tape& t, const GanConfig& cfg, const std::vector<Var>& disc, Var x) {
    const Shape xs = t.value(x).shape;
    if (xs.size() != 4 || xs[1] != cfg.channels || xs[2] != cfg.height || xs[3] != cfg.width)
        throw ShapeError("discriminate: image batch shape " + shape_str(xs) +
                         " does not match config");
    Var flat = t.reshape(x, {xs[0], cfg.image_size()});
    Var h = t.leaky_relu(affine(t, flat, disc[0], disc[1]), cfg.leaky_slope);
    Var hidden = t.leaky_relu(affine(t, h, disc[2], disc[3]), cfg.leaky_slope);
    Var logits = t.reshape(affine(t, hidden, disc[4], disc[5]), {xs[0]});
    return DiscOut{logits, hidden};
}

Var project(Tape& t, const GanConfig& cfg, const std::vector<Var>& proj, Var hidden) {
    if (proj.empty())
        throw ContractError("project: projection head absent (contrastive mode disabled)");
    Var h = t.leaky_relu(affine(t, hidden, proj[0], proj[1]), cfg.leaky_slope);
    return affine(t, h, proj[2], proj[3]);
}

Var hinge_d_loss(Tape& t, Var real_logits, Var fake_logits) {
    Var real_term = t.mean(t.relu(t.scalar_add(t.scalar_mul(real_logits, -1.0), 1.0)));
    Var fake_term = t.mean(t.relu(t.scalar_add(fake_logits, 1.0)));
    return t.add(real_term, fake_term);
}

Var hinge_g_loss(Tape& t, Var fake_logits) { return t.scalar_mul(t.mean(fake_logits), -1.0); }

void save_checkpoint(const GanState& state, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("checkpoint: cannot open '" + path + "' for writing");
    os.write(kMagic, 8);
    write_u64(os, state.cfg.fingerprint());
    const GanConfig& c = state.cfg;
    for (std::uint64_t x : {c.latent_dim, c.channels, c.height, c.width, c.g_hidden, c.d_hidden1,
                            c.d_hidden2, c.proj_hidden, c.embed_dim,
                            static_cast<std::size_t>(c.contrastive)})
        write_u64(os, x);
    write_u64(os, state.step);
    write_params(os, state.gen);
    write_params(os, state.disc);
    write_params(os, state.proj);
    if (!os) throw IoError("checkpoint: write failed for '" + path + "'");
}

GanState load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("checkpoint: cannot open '" + path + "'");
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kMagic, 8) != 0)
        throw FormatError("checkpoint: bad magic in '" + path + "'");
    const std::uint64_t fp = read_u64(is);
    GanState s;
    GanConfig& c = s.cfg;
    for (std::uint64_t* x :
         {&c.latent_dim, &c.channels, &c.height, &c.width, &c.g_hidden, &c.d_hidden1,
          &c.d_hidden2, &c.proj_hidden, &c.embed_dim})
        *x = read_u64(is);
    c.contrastive = read_u64(is) != 0;
    if (c.fingerprint() != fp) throw FormatError("checkpoint: config fingerprint mismatch");
    s.step = read_u64(is);
    s.gen = read_params(is);
    s.disc = read_params(is);
    s.proj = read_params(is);
    return s;
}

}  // namespace ganlab
