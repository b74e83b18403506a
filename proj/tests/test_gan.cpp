#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>

#include "ganlab/gan.hpp"

using namespace ganlab;

namespace {

GanConfig tiny_config() {
    GanConfig c;
    c.latent_dim = 3;
    c.channels = 3;
    c.height = 4;
    c.width = 4;
    c.g_hidden = 6;
    c.d_hidden1 = 6;
    c.d_hidden2 = 5;
    c.proj_hidden = 4;
    c.embed_dim = 3;
    c.contrastive = true;
    return c;
}

}  // namespace

TEST_CASE("generator output shape and range") {
    GanConfig cfg;  // defaults: 16x16x3, latent 32
    GanState state = GanState::init(cfg, 1);
    RngStream rng(2, "latent");
    Tape t;
    GanVars v = load_params(t, state, false, false);
    Var img = generate(t, cfg, v.gen, t.constant(sample_latent(cfg, 4, rng)));
    const Tensor& out = t.value(img);
    CHECK(out.shape == Shape{4, 3, 16, 16});
    for (double x : out.v) {
        CHECK(x >= 0.0);
        CHECK(x <= 1.0);
    }
}

TEST_CASE("discriminator shapes and per-example independence") {
    GanConfig cfg = tiny_config();
    GanState state = GanState::init(cfg, 3);
    RngStream rng(4);
    Tensor imgs = Tensor::zeros({4, 3, 4, 4});
    for (double& x : imgs.v) x = rng.uniform();
    // duplicate row 0 into row 3
    std::copy_n(imgs.v.begin(), 48, imgs.v.begin() + 3 * 48);

    Tape t;
    GanVars v = load_params(t, state, false, false);
    DiscOut d = discriminate(t, cfg, v.disc, t.constant(imgs));
    CHECK(t.value(d.logits).shape == Shape{4});
    CHECK(t.value(d.hidden).shape == Shape{4, 5});
    CHECK(t.value(d.logits).v[0] == t.value(d.logits).v[3]);

    // permuting batch rows permutes logits identically
    Tape t2;
    GanVars v2 = load_params(t2, state, false, false);
    Var perm = t2.permute_batch(t2.constant(imgs), {2, 0, 3, 1});
    DiscOut dp = discriminate(t2, cfg, v2.disc, perm);
    const std::vector<std::size_t> p = {2, 0, 3, 1};
    for (std::size_t i = 0; i < 4; ++i)
        CHECK(t2.value(dp.logits).v[i] == doctest::Approx(t.value(d.logits).v[p[i]]));
}

TEST_CASE("hinge loss examples") {
    Tape t;
    SUBCASE("one real at 0.5, one fake at -2") {
        Var r = t.constant(Tensor({1}, {0.5}));
        Var f = t.constant(Tensor({1}, {-2.0}));
        CHECK(t.value(hinge_d_loss(t, r, f)).v[0] == doctest::Approx(0.5));
    }
    SUBCASE("satisfied margins give zero") {
        Var r = t.constant(Tensor({2}, {1.0, 2.5}));
        Var f = t.constant(Tensor({2}, {-1.0, -3.0}));
        CHECK(t.value(hinge_d_loss(t, r, f)).v[0] == doctest::Approx(0.0));
    }
    SUBCASE("generator loss averages the negated logits") {
        Var f = t.constant(Tensor({2}, {1.0, -1.0}));
        CHECK(t.value(hinge_g_loss(t, f)).v[0] == doctest::Approx(0.0));
    }
    SUBCASE("hinge d-loss is non-negative") {
        RngStream rng(5);
        for (int rep = 0; rep < 50; ++rep) {
            Tensor r = Tensor::zeros({4}), f = Tensor::zeros({4});
            for (double& x : r.v) x = rng.uniform(-3, 3);
            for (double& x : f.v) x = rng.uniform(-3, 3);
            CHECK(t.value(hinge_d_loss(t, t.constant(r), t.constant(f))).v[0] >= 0.0);
        }
    }
}

TEST_CASE("projection head shape and contract") {
    GanConfig cfg = tiny_config();
    GanState state = GanState::init(cfg, 6);
    Tape t;
    GanVars v = load_params(t, state, false, false);
    RngStream rng(7);
    Tensor hidden = Tensor::zeros({4, 5});
    for (double& x : hidden.v) x = rng.uniform(-1, 1);
    Var e = project(t, cfg, v.proj, t.constant(hidden));
    CHECK(t.value(e).shape == Shape{4, 3});
    CHECK_THROWS_AS(project(t, cfg, {}, t.constant(hidden)), ContractError);
}

TEST_CASE("initialization determinism") {
    GanConfig cfg = tiny_config();
    GanState a = GanState::init(cfg, 42);
    GanState b = GanState::init(cfg, 42);
    GanState c = GanState::init(cfg, 43);
    for (std::size_t i = 0; i < a.gen.size(); ++i) CHECK(a.gen[i].value.v == b.gen[i].value.v);
    for (std::size_t i = 0; i < a.disc.size(); ++i) CHECK(a.disc[i].value.v == b.disc[i].value.v);
    CHECK(a.gen[0].value.v != c.gen[0].value.v);
}

TEST_CASE("gradients through the networks match finite differences") {
    GanConfig cfg = tiny_config();
    GanState state = GanState::init(cfg, 8);
    RngStream rng(9);

    SUBCASE("generator parameters") {
        const Tensor z = sample_latent(cfg, 2, rng);
        for (std::size_t k = 0; k < state.gen.size(); ++k) {
            auto f = [&](Tape& t, Var x) {
                std::vector<Var> gen;
                for (std::size_t i = 0; i < state.gen.size(); ++i)
                    gen.push_back(i == k ? t.reshape(x, state.gen[i].value.shape)
                                         : t.constant(state.gen[i].value));
                return t.mean(generate(t, cfg, gen, t.constant(z)));
            };
            Tensor flat(Shape{state.gen[k].value.size()}, state.gen[k].value.v);
            INFO("gen param " << state.gen[k].name);
            CHECK(finite_diff_check(f, flat, 1e-5) < 1e-4);
        }
    }

    SUBCASE("discriminator logit wrt input") {
        Tensor imgs = Tensor::zeros({2, 3, 4, 4});
        for (double& x : imgs.v) x = rng.uniform(0.2, 0.8);
        auto f = [&](Tape& t, Var x) {
            GanVars v = load_params(t, state, false, false);
            Var img = t.reshape(x, {2, 3, 4, 4});
            return t.mean(discriminate(t, cfg, v.disc, img).logits);
        };
        Tensor flat(Shape{imgs.size()}, imgs.v);
        CHECK(finite_diff_check(f, flat, 1e-5) < 1e-4);
    }

    SUBCASE("projection wrt hidden") {
        Tensor hidden = Tensor::zeros({3, 5});
        for (double& x : hidden.v) x = rng.uniform(-1, 1);
        auto f = [&](Tape& t, Var x) {
            GanVars v = load_params(t, state, false, false);
            Var h = t.reshape(x, {3, 5});
            return t.mean(project(t, cfg, v.proj, h));
        };
        Tensor flat(Shape{hidden.size()}, hidden.v);
        CHECK(finite_diff_check(f, flat, 1e-5) < 1e-4);
    }
}

TEST_CASE("checkpoint round-trip") {
    GanConfig cfg = tiny_config();
    GanState state = GanState::init(cfg, 11);
    state.step = 123;
    const std::string path = "test_ckpt.bin";
    save_checkpoint(state, path);
    GanState loaded = load_checkpoint(path);
    CHECK(loaded.step == 123);
    CHECK(loaded.cfg.fingerprint() == cfg.fingerprint());
    for (std::size_t i = 0; i < state.gen.size(); ++i) {
        CHECK(loaded.gen[i].name == state.gen[i].name);
        CHECK(loaded.gen[i].value.v == state.gen[i].value.v);
    }
    for (std::size_t i = 0; i < state.proj.size(); ++i)
        CHECK(loaded.proj[i].value.v == state.proj[i].value.v);

    // corrupt the magic
    {
        std::FILE* fp = std::fopen(path.c_str(), "r+b");
        std::fputc('X', fp);
        std::fclose(fp);
    }
    CHECK_THROWS_AS(load_checkpoint(path), FormatError);
    std::remove(path.c_str());
}
