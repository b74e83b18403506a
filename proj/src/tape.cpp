#include "ganlab/tape.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace ganlab {

namespace {

// Broadcast patterns supported by add/sub/mul.
enum class Bcast { Same, FullScalar, RowBias, PerImage };

Bcast classify_bcast(const char* op, const Shape& a, const Shape& b) {
    if (a == b) return Bcast::Same;
    if (shape_numel(b) == 1) return Bcast::FullScalar;
    if (a.size() == 2 && b.size() == 1 && b[0] == a[1]) return Bcast::RowBias;
    if (a.size() == 4 && b.size() == 4 && b[0] == a[0] && b[1] == 1 && b[2] == 1 && b[3] == 1)
        return Bcast::PerImage;
    throw ShapeError(std::string(op) + ": incompatible shapes " + shape_str(a) + " and " +
                     shape_str(b));
}

// Index of b's element matching flat index i of a.
std::size_t bcast_index(Bcast bc, const Shape& a, std::size_t i) {
    switch (bc) {
        case Bcast::Same: return i;
        case Bcast::FullScalar: return 0;
        case Bcast::RowBias: return i % a[1];
        case Bcast::PerImage: return i / (a[1] * a[2] * a[3]);
    }
    return 0;
}

double reflect_coord(double t, double n) {
    // Fold a continuous coordinate into [0, n] by mirroring at the borders.
    if (n <= 0.0) return 0.0;
    const double period = 2.0 * n;
    double m = std::fmod(t, period);
    if (m < 0.0) m += period;
    return m <= n ? m : period - m;
}

}  // namespace

void mm(const double* a, const double* b, double* c, std::size_t n, std::size_t k, std::size_t m) {
    std::memset(c, 0, n * m * sizeof(double));
    for (std::size_t i = 0; i < n; ++i) {
        const double* arow = a + i * k;
        double* crow = c + i * m;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = arow[p];
            const double* brow = b + p * m;
            for (std::size_t j = 0; j < m; ++j) crow[j] += av * brow[j];
        }
    }
}

void mm_abt(const double* a, const double* b, double* c, std::size_t n, std::size_t k,
            std::size_t m) {
    for (std::size_t i = 0; i < n; ++i) {
        const double* arow = a + i * k;
        double* crow = c + i * m;
        for (std::size_t j = 0; j < m; ++j) {
            const double* brow = b + j * k;
            double acc = 0.0;
            for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
            crow[j] = acc;
        }
    }
}

void mm_atb(const double* a, const double* b, double* c, std::size_t n, std::size_t k,
            std::size_t m) {
    std::memset(c, 0, n * m * sizeof(double));
    for (std::size_t p = 0; p < k; ++p) {
        const double* arow = a + p * n;
        const double* brow = b + p * m;
        for (std::size_t i = 0; i < n; ++i) {
            const double av = arow[i];
            double* crow = c + i * m;
            for (std::size_t j = 0; j < m; ++j) crow[j] += av * brow[j];
        }
    }
}

Var Tape::leaf(Tensor value, bool requires_grad) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    nodes_.push_back(std::move(n));
    return Var{this, nodes_.size() - 1};
}

Var Tape::record(const char* op, Tensor value, std::vector<std::size_t> parents,
                 std::function<void(Tape&, std::size_t)> backprop) {
    if (!value.all_finite())
        throw NumericalError(std::string(op) + ": non-finite output at node " +
                             std::to_string(nodes_.size()));
    Node n;
    n.value = std::move(value);
    n.parents = std::move(parents);
    n.op = op;
    for (std::size_t p : n.parents)
        if (nodes_[p].requires_grad) n.requires_grad = true;
    n.backprop = std::move(backprop);
    nodes_.push_back(std::move(n));
    return Var{this, nodes_.size() - 1};
}

void Tape::backward(Var root) {
    if (root.tape != this) throw ContractError("backward: root belongs to another tape");
    if (shape_numel(nodes_[root.id].value.shape) != 1)
        throw ContractError("backward: root must be scalar, got shape " +
                            shape_str(nodes_[root.id].value.shape));
    for (std::size_t i = 0; i <= root.id; ++i) nodes_[i].grad = Tensor::zeros(nodes_[i].value.shape);
    nodes_[root.id].grad.v[0] = 1.0;
    for (std::size_t i = root.id + 1; i-- > 0;) {
        Node& n = nodes_[i];
        if (n.backprop && n.requires_grad) n.backprop(*this, i);
    }
}

Var Tape::add(Var a, Var b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    const Bcast bc = classify_bcast("add", ta.shape, tb.shape);
    Tensor out = Tensor::zeros(ta.shape);
    for (std::size_t i = 0; i < out.size(); ++i)
        out.v[i] = ta.v[i] + tb.v[bcast_index(bc, ta.shape, i)];
    return record("add", std::move(out), {a.id, b.id}, [bc](Tape& t, std::size_t self) {
        const Tensor& g = t.node(self).grad;
        const Shape ash = t.node(t.node(self).parents[0]).value.shape;
        const std::size_t pa = t.node(self).parents[0], pb = t.node(self).parents[1];
        for (std::size_t i = 0; i < g.size(); ++i) {
            t.accum(pa, i, g.v[i]);
            t.accum(pb, bcast_index(bc, ash, i), g.v[i]);
        }
    });
}

Var Tape::sub(Var a, Var b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    const Bcast bc = classify_bcast("sub", ta.shape, tb.shape);
    Tensor out = Tensor::zeros(ta.shape);
    for (std::size_t i = 0; i < out.size(); ++i)
        out.v[i] = ta.v[i] - tb.v[bcast_index(bc, ta.shape, i)];
    return record("sub", std::move(out), {a.id, b.id}, [bc](Tape& t, std::size_t self) {
        const Tensor& g = t.node(self).grad;
        const Shape ash = t.node(t.node(self).parents[0]).value.shape;
        const std::size_t pa = t.node(self).parents[0], pb = t.node(self).parents[1];
        for (std::size_t i = 0; i < g.size(); ++i) {
            t.accum(pa, i, g.v[i]);
            t.accum(pb, bcast_index(bc, ash, i), -g.v[i]);
        }
    });
}

Var Tape::mul(Var a, Var b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    const Bcast bc = classify_bcast("mul", ta.shape, tb.shape);
    Tensor out = Tensor::zeros(ta.shape);
    for (std::size_t i = 0; i < out.size(); ++i)
        out.v[i] = ta.v[i] * tb.v[bcast_index(bc, ta.shape, i)];
    return record("mul", std::move(out), {a.id, b.id}, [bc](Tape& t, std::size_t self) {
        const Tensor& g = t.node(self).grad;
        const std::size_t pa = t.node(self).parents[0], pb = t.node(self).parents[1];
        const Tensor& va = t.node(pa).value;
        const Tensor& vb = t.node(pb).value;
        for (std::size_t i = 0; i < g.size(); ++i) {
            const std::size_t j = bcast_index(bc, va.shape, i);
            t.accum(pa, i, g.v[i] * vb.v[j]);
            t.accum(pb, j, g.v[i] * va.v[i]);
        }
    });
}

Var Tape::scalar_mul(Var a, double c) {
    Tensor out = value(a);
    for (double& x : out.v) x *= c;
    return record("scalar_mul", std::move(out), {a.id}, [c](Tape& t, std::size_t self) {
        const Tensor& g = t.node(self).grad;
        const std::size_t p = t.node(self).parents[0];
        for (std::size_t i = 0; i < g.size(); ++i) t.accum(p, i, c * g.v[i]);
    });
}

Var Tape::scalar_add(Var a, double c) {
    Tensor out = value(a);
    for (double& x : out.v) x += c;
    return record("scalar_add", std::move(out), {a.id}, [](Tape& t, std::size_t self) {
        const Tensor& g = t.node(self).grad;
        const std::size_t p = t.node(self).parents[0];
        for (std::size_t i = 0; i < g.size(); ++i) t.accum(p, i, g.v[i]);
    });
}

Var Tape::matmul(Var a, Var b, bool trans_b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    if (ta.shape.size() != 2 || tb.shape.size() != 2)
        throw ShapeError("matmul: both operands must be rank-2, got " + shape_str(ta.shape) +
                         " and " + shape_str(tb.shape));
    const std::size_t n = ta.shape[0], k = ta.shape[1];
    const std::size_t m = trans_b ? tb.shape[0] : tb.shape[1];
    const std::size_t kb = trans_b ? tb.shape[1] : tb.shape[0];
    if (k != kb)
        throw ShapeError("matmul: inner dimensions differ, " + shape_str(ta.shape) + " vs " +
                         shape_str(tb.shape) + (trans_b ? " (transposed)" : ""));
    Tensor out = Tensor::zeros({n, m});
    if (trans_b)
        mm_abt(ta.v.data(), tb.v.data(), out.v.data(), n, k, m);
    else
        mm(ta.v.data(), tb.v.data(), out.v.data(), n, k, m);
    return record("matmul", std::move(out), {a.id, b.id},
                  [n, k, m, trans_b](Tape& t, std::size_t self) {
                      const Tensor& g = t.node(self).grad;
                      const std::size_t pa = t.node(self).parents[0], pb = t.node(self).parents[1];
                      const Tensor& va = t.node(pa).value;
                      const Tensor& vb = t.node(pb).value;
                      std::vector<double> da(n * k), db(vb.size());
                      if (!trans_b) {
                          mm_abt(g.v.data(), vb.v.data(), da.data(), n, m, k);
                          mm_atb(va.v.data(), g.v.data(), db.data(), k, n, m);
                      } else {
                          mm(g.v.data(), vb.v.data(), da.data(), n, m, k);
                          mm_atb(g.v.data(), va.v.data(), db.data(), m, n, k);
                      }
                      for (std::size_t i = 0; i < da.size(); ++i) t.accum(pa, i, da[i]);
                      for (std::size_t i = 0; i < db.size(); ++i) t.accum(pb, i, db[i]);
                  });
}

Var Tape::leaky_relu(Var a, double slope) {
    Tensor out = value(a);
    for (double& x : out.v) x = x >= 0.0 ? x : slope * x;
    return record("leaky_relu", std::move(out), {a.id}, [slope](Tape& t, std::size_t self) {
        const Tensor& g = t.node(self).grad;
        const std::size_t p = t.node(self).parents[0];
        const Tensor& vp = t.node(p).value;
        // gradient at the kink is the left limit (slope)
        for (std::size_t i = 0; i < g.size(); ++i)
            t.accum(p, i, vp.v[i] > 0.0 ? g.v[i] : slope * g.v[i]);
    });
}

Var Tape::tanh_op(Var a) {
    Tensor out = value(a);
    for (double& x : out.v) x = std::tanh(x);
    return record("tanh", std::move(out), {a.id}, [](Tape& t, std::size_t self) {
        const Tensor& g = t.node(self).grad;
        const Tensor& y = t.node(self).value;
        const std::size_t p = t.node(self).parents[0];
        for (std::size_t i = 0; i < g.size(); ++i) t.accum(p, i, g.v[i] * (1.0 - y.v[i] * y.v[i]));
    });
}

Var Tape::exp_op(Var a) {
    Tensor out = value(a);
    for (double& x : out.v) x = std::exp(x);
    return record("exp", std::move(out), {a.id}, [](Tape& t, std::size_t self) {
        const Tensor& g = t.node(self).grad;
        const Tensor& y = t.node(self).value;
        const std::size_t p = t.node(self).parents[0];
        for (std::size_t i = 0; i < g.size(); ++i) t.accum(p, i, g.v[i] * y.v[i]);
    });
}

Var Tape::log_op(Var a) {
    Tensor out = value(a);
    for (double& x : out.v) x = std::log(x);
    return record("log", std::move(out), {a.id}, [](Tape& t, std::size_t self) {
        const Tensor& g = t.node(self).grad;
        const std::size_t p = t.node(self).parents[0];
        const Tensor& vp = t.node(p).value;
        for (std::size_t i = 0; i < g.size(); ++i) t.accum(p, i, g.v[i] / vp.v[i]);
    });
}

Var Tape::mean(Var a) {
    const Tensor& ta = value(a);
    double acc = 0.0;
    for (double x : ta.v) acc += x;
    const double inv = 1.0 / static_cast<double>(ta.size());
    return record("mean", Tensor::scalar(acc * inv), {a.id}, [inv](Tape& t, std::size_t self) {
        const double g = t.node(self).grad.v[0] * inv;
        const std::size_t p = t.node(self).parents[0];
        const std::size_t n = t.node(p).value.size();
        for (std::size_t i = 0; i < n; ++i) t.accum(p, i, g);
    });
}

Var Tape::sum(Var a) {
    const Tensor& ta = value(a);
    double acc = 0.0;
    for (double x : ta.v) acc += x;
    return record("sum", Tensor::scalar(acc), {a.id}, [](Tape& t, std::size_t self) {
        const double g = t.node(self).grad.v[0];
        const std::size_t p = t.node(self).parents[0];
        const std::size_t n = t.node(p).value.size();
        for (std::size_t i = 0; i < n; ++i) t.accum(p, i, g);
    });
}

Var Tape::reduce_image_mean(Var a) {
    const Tensor& ta = value(a);
    if (ta.shape.size() != 4)
        throw ShapeError("reduce_image_mean: expected rank-4 input, got " + shape_str(ta.shape));
    const std::size_t bsz = ta.shape[0], per = ta.size() / bsz;
    Tensor out = Tensor::zeros({bsz, 1, 1, 1});
    for (std::size_t b = 0; b < bsz; ++b) {
        double acc = 0.0;
        for (std::size_t i = 0; i < per; ++i) acc += ta.v[b * per + i];
        out.v[b] = acc / static_cast<double>(per);
    }
    return record("reduce_image_mean", std::move(out), {a.id},
                  [bsz, per](Tape& t, std::size_t self) {
                      const Tensor& g = t.node(self).grad;
                      const std::size_t p = t.node(self).parents[0];
                      const double inv = 1.0 / static_cast<double>(per);
                      for (std::size_t b = 0; b < bsz; ++b) {
                          const double gb = g.v[b] * inv;
                          for (std::size_t i = 0; i < per; ++i) t.accum(p, b * per + i, gb);
                      }
                  });
}

Var Tape::l2_normalize(Var a) {
    const Tensor& ta = value(a);
    if (ta.shape.size() != 2)
        throw ShapeError("l2_normalize: expected rank-2 input, got " + shape_str(ta.shape));
    const std::size_t n = ta.shape[0], d = ta.shape[1];
    Tensor out = Tensor::zeros(ta.shape);
    std::vector<double> norms(n);
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < d; ++j) acc += ta.v[i * d + j] * ta.v[i * d + j];
        const double norm = std::sqrt(acc);
        if (norm < 1e-12)
            throw ContractError("l2_normalize: zero-norm row " + std::to_string(i));
        norms[i] = norm;
        for (std::size_t j = 0; j < d; ++j) out.v[i * d + j] = ta.v[i * d + j] / norm;
    }
    return record("l2_normalize", std::move(out), {a.id},
                  [n, d, norms = std::move(norms)](Tape& t, std::size_t self) {
                      const Tensor& g = t.node(self).grad;
                      const Tensor& y = t.node(self).value;
                      const std::size_t p = t.node(self).parents[0];
                      for (std::size_t i = 0; i < n; ++i) {
                          double dot = 0.0;
                          for (std::size_t j = 0; j < d; ++j) dot += y.v[i * d + j] * g.v[i * d + j];
                          for (std::size_t j = 0; j < d; ++j)
                              t.accum(p, i * d + j,
                                      (g.v[i * d + j] - y.v[i * d + j] * dot) / norms[i]);
                      }
                  });
}

Var Tape::concat(const std::vector<Var>& parts) {
    if (parts.empty()) throw ContractError("concat: no inputs");
    Shape base = value(parts[0]).shape;
    std::size_t total0 = 0;
    for (const Var& p : parts) {
        const Shape& s = value(p).shape;
        if (s.size() != base.size() ||
            !std::equal(s.begin() + 1, s.end(), base.begin() + 1))
            throw ShapeError("concat: trailing dimensions differ, " + shape_str(base) + " vs " +
                             shape_str(s));
        total0 += s[0];
    }
    Shape oshape = base;
    oshape[0] = total0;
    Tensor out = Tensor::zeros(oshape);
    std::vector<std::size_t> ids, offsets;
    std::size_t off = 0;
    for (const Var& p : parts) {
        const Tensor& tp = value(p);
        std::copy(tp.v.begin(), tp.v.end(), out.v.begin() + static_cast<std::ptrdiff_t>(off));
        ids.push_back(p.id);
        offsets.push_back(off);
        off += tp.size();
    }
    return record("concat", std::move(out), std::move(ids),
                  [offsets = std::move(offsets)](Tape& t, std::size_t self) {
                      const Tensor& g = t.node(self).grad;
                      const auto& ps = t.node(self).parents;
                      for (std::size_t pi = 0; pi < ps.size(); ++pi) {
                          const std::size_t n = t.node(ps[pi]).value.size();
                          for (std::size_t i = 0; i < n; ++i)
                              t.accum(ps[pi], i, g.v[offsets[pi] + i]);
                      }
                  });
}

Var Tape::reshape(Var a, Shape s) {
    const Tensor& ta = value(a);
    if (shape_numel(s) != ta.size())
        throw ShapeError("reshape: cannot view " + shape_str(ta.shape) + " as " + shape_str(s));
    Tensor out(std::move(s), ta.v);
    return record("reshape", std::move(out), {a.id}, [](Tape& t, std::size_t self) {
        const Tensor& g = t.node(self).grad;
        const std::size_t p = t.node(self).parents[0];
        for (std::size_t i = 0; i < g.size(); ++i) t.accum(p, i, g.v[i]);
    });
}

Var Tape::clip01(Var a) {
    const Tensor& ta = value(a);
    if (!ta.all_finite()) throw NumericalError("clip01: non-finite input");
    Tensor out = ta;
    for (double& x : out.v) x = std::min(1.0, std::max(0.0, x));
    return record("clip01", std::move(out), {a.id}, [](Tape& t, std::size_t self) {
        const Tensor& g = t.node(self).grad;
        const std::size_t p = t.node(self).parents[0];
        const Tensor& vp = t.node(p).value;
        // subgradient: pass-through strictly inside (0,1), zero outside
        for (std::size_t i = 0; i < g.size(); ++i)
            if (vp.v[i] > 0.0 && vp.v[i] < 1.0) t.accum(p, i, g.v[i]);
    });
}

Var Tape::bilinear_sample(Var x, Tensor grid) {
    const Tensor& tx = value(x);
    if (tx.shape.size() != 4)
        throw ShapeError("bilinear_sample: image must be rank-4, got " + shape_str(tx.shape));
    const std::size_t bsz = tx.shape[0], C = tx.shape[1], H = tx.shape[2], W = tx.shape[3];
    if (grid.shape != Shape{bsz, H, W, 2})
        throw ShapeError("bilinear_sample: grid shape " + shape_str(grid.shape) +
                         " does not match image " + shape_str(tx.shape));
    if (!grid.all_finite()) throw NumericalError("bilinear_sample: non-finite grid coordinate");

    // Precompute the four corner indices and weights per sampling site.
    const std::size_t sites = bsz * H * W;
    std::vector<std::size_t> r0(sites), r1(sites), c0(sites), c1(sites);
    std::vector<double> fr(sites), fc(sites);
    for (std::size_t s = 0; s < sites; ++s) {
        const double rr = reflect_coord(grid.v[2 * s], static_cast<double>(H - 1));
        const double cc = reflect_coord(grid.v[2 * s + 1], static_cast<double>(W - 1));
        const double rf = std::floor(rr), cf = std::floor(cc);
        r0[s] = static_cast<std::size_t>(rf);
        c0[s] = static_cast<std::size_t>(cf);
        r1[s] = std::min(r0[s] + 1, H - 1);
        c1[s] = std::min(c0[s] + 1, W - 1);
        fr[s] = rr - rf;
        fc[s] = cc - cf;
    }
    Tensor out = Tensor::zeros(tx.shape);
    for (std::size_t b = 0; b < bsz; ++b) {
        for (std::size_t ch = 0; ch < C; ++ch) {
            const double* img = tx.v.data() + (b * C + ch) * H * W;
            double* dst = out.v.data() + (b * C + ch) * H * W;
            for (std::size_t hw = 0; hw < H * W; ++hw) {
                const std::size_t s = b * H * W + hw;
                const double a00 = img[r0[s] * W + c0[s]], a01 = img[r0[s] * W + c1[s]];
                const double a10 = img[r1[s] * W + c0[s]], a11 = img[r1[s] * W + c1[s]];
                const double top = a00 + fc[s] * (a01 - a00);
                const double bot = a10 + fc[s] * (a11 - a10);
                dst[hw] = top + fr[s] * (bot - top);
            }
        }
    }
    auto back = [bsz, C, H, W, r0 = std::move(r0), r1 = std::move(r1), c0 = std::move(c0),
                 c1 = std::move(c1), fr = std::move(fr),
                 fc = std::move(fc)](Tape& t, std::size_t self) {
        const Tensor& g = t.node(self).grad;
        const std::size_t p = t.node(self).parents[0];
        Tensor& pg = t.node(p).grad;
        for (std::size_t b = 0; b < bsz; ++b) {
            for (std::size_t ch = 0; ch < C; ++ch) {
                const double* gs = g.v.data() + (b * C + ch) * H * W;
                double* dst = pg.v.data() + (b * C + ch) * H * W;
                for (std::size_t hw = 0; hw < H * W; ++hw) {
                    const std::size_t s = b * H * W + hw;
                    const double gv = gs[hw];
                    const double wr1 = fr[s], wr0 = 1.0 - wr1;
                    const double wc1 = fc[s], wc0 = 1.0 - wc1;
                    dst[r0[s] * W + c0[s]] += gv * wr0 * wc0;
                    dst[r0[s] * W + c1[s]] += gv * wr0 * wc1;
                    dst[r1[s] * W + c0[s]] += gv * wr1 * wc0;
                    dst[r1[s] * W + c1[s]] += gv * wr1 * wc1;
                }
            }
        }
    };
    return record("bilinear_sample", std::move(out), {x.id}, std::move(back));
}

Var Tape::channel_mix(Var x, Tensor m) {
    const Tensor& tx = value(x);
    if (tx.shape.size() != 4)
        throw ShapeError("channel_mix: image must be rank-4, got " + shape_str(tx.shape));
    const std::size_t bsz = tx.shape[0], C = tx.shape[1], HW = tx.shape[2] * tx.shape[3];
    const bool per_image = m.shape.size() == 3;
    if (!(m.shape == Shape{C, C} || m.shape == Shape{bsz, C, C}))
        throw ShapeError("channel_mix: matrix shape " + shape_str(m.shape) +
                         " does not match image " + shape_str(tx.shape));
    Tensor out = Tensor::zeros(tx.shape);
    for (std::size_t b = 0; b < bsz; ++b) {
        const double* mat = m.v.data() + (per_image ? b * C * C : 0);
        for (std::size_t i = 0; i < C; ++i)
            for (std::size_t j = 0; j < C; ++j) {
                const double w = mat[i * C + j];
                if (w == 0.0) continue;
                const double* src = tx.v.data() + (b * C + j) * HW;
                double* dst = out.v.data() + (b * C + i) * HW;
                for (std::size_t k = 0; k < HW; ++k) dst[k] += w * src[k];
            }
    }
    return record("channel_mix", std::move(out), {x.id},
                  [bsz, C, HW, per_image, m = std::move(m)](Tape& t, std::size_t self) {
                      const Tensor& g = t.node(self).grad;
                      const std::size_t p = t.node(self).parents[0];
                      Tensor& pg = t.node(p).grad;
                      for (std::size_t b = 0; b < bsz; ++b) {
                          const double* mat = m.v.data() + (per_image ? b * C * C : 0);
                          for (std::size_t i = 0; i < C; ++i)
                              for (std::size_t j = 0; j < C; ++j) {
                                  const double w = mat[i * C + j];
                                  if (w == 0.0) continue;
                                  const double* gs = g.v.data() + (b * C + i) * HW;
                                  double* dst = pg.v.data() + (b * C + j) * HW;
                                  for (std::size_t k = 0; k < HW; ++k) dst[k] += w * gs[k];
                              }
                      }
                  });
}

Var Tape::permute_batch(Var x, std::vector<std::size_t> perm) {
    const Tensor& tx = value(x);
    if (tx.shape.empty() || perm.size() != tx.shape[0])
        throw ShapeError("permute_batch: permutation size " + std::to_string(perm.size()) +
                         " does not match batch " + shape_str(tx.shape));
    const std::size_t bsz = tx.shape[0], per = tx.size() / bsz;
    Tensor out = Tensor::zeros(tx.shape);
    for (std::size_t b = 0; b < bsz; ++b) {
        if (perm[b] >= bsz) throw ContractError("permute_batch: index out of range");
        std::copy_n(tx.v.begin() + static_cast<std::ptrdiff_t>(perm[b] * per), per,
                    out.v.begin() + static_cast<std::ptrdiff_t>(b * per));
    }
    return record("permute_batch", std::move(out), {x.id},
                  [bsz, per, perm = std::move(perm)](Tape& t, std::size_t self) {
                      const Tensor& g = t.node(self).grad;
                      const std::size_t p = t.node(self).parents[0];
                      for (std::size_t b = 0; b < bsz; ++b)
                          for (std::size_t i = 0; i < per; ++i)
                              t.accum(p, perm[b] * per + i, g.v[b * per + i]);
                  });
}

double finite_diff_check(const std::function<Var(Tape&, Var)>& f, const Tensor& x, double step) {
    if (step <= 0.0) throw ContractError("finite_diff_check: step must be positive");
    Tensor analytic;
    {
        Tape tape;
        Var xv = tape.leaf(x, true);
        Var root = f(tape, xv);
        tape.backward(root);
        analytic = tape.grad(xv);
    }
    auto eval = [&f](const Tensor& at) {
        Tape tape;
        Var xv = tape.leaf(at, false);
        const Tensor& out = tape.value(f(tape, xv));
        if (out.size() != 1 || !std::isfinite(out.v[0]))
            throw NumericalError("finite_diff_check: objective not a finite scalar");
        return out.v[0];
    };
    double worst = 0.0;
    Tensor probe = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        probe.v[i] = x.v[i] + step;
        const double up = eval(probe);
        probe.v[i] = x.v[i] - step;
        const double dn = eval(probe);
        probe.v[i] = x.v[i];
        const double numeric = (up - dn) / (2.0 * step);
        const double err = std::abs(analytic.v[i] - numeric) / std::max(1.0, std::abs(analytic.v[i]));
        worst = std::max(worst, err);
    }
    return worst;
}

}  // namespace ganlab
