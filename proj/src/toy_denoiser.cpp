#include "videdit/toy_denoiser.hpp"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace videdit {

namespace {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------- helpers

inline float silu(float x) {
    const float s = 1.0f / (1.0f + std::exp(-x));
    return x * s;
}

inline float silu_grad(float x) {
    const float s = 1.0f / (1.0f + std::exp(-x));
    return s * (1.0f + x * (1.0f - s));
}

// C (m x n) = A (m x k) * B (k x n), double accumulation.
void mm_nn(const float* a, const float* b, float* c, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int p = 0; p < k; ++p) acc += static_cast<double>(a[i * k + p]) * b[p * n + j];
            c[i * n + j] = static_cast<float>(acc);
        }
    }
}

// C (m x n) += A (m x k) * B^T (n x k).
void mm_nt_acc(const float* a, const float* b, float* c, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int p = 0; p < k; ++p) acc += static_cast<double>(a[i * k + p]) * b[j * k + p];
            c[i * n + j] += static_cast<float>(acc);
        }
    }
}

// C (k x n) += A^T (A is m x k) * B (m x n), into a double buffer.
void mm_tn_acc_d(const float* a, const float* b, double* c, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        for (int p = 0; p < k; ++p) {
            const double av = a[i * k + p];
            if (av == 0.0) continue;
            for (int j = 0; j < n; ++j) c[p * n + j] += av * b[i * n + j];
        }
    }
}

void add_d_into(const std::vector<double>& src, NTensor& dst) {
    for (std::size_t i = 0; i < src.size(); ++i) dst.v[i] += static_cast<float>(src[i]);
}

// Grid cell index map for pooled attention: pixel i of an axis of size n
// falls into cell i*g/n of g cells.
std::vector<int> cell_map(int n, int g) {
    std::vector<int> m(n);
    for (int i = 0; i < n; ++i) m[i] = static_cast<int>(static_cast<long long>(i) * g / n);
    return m;
}

struct PoolGrid {
    int gh = 0, gw = 0;
    std::vector<int> ymap, xmap;
    std::vector<int> counts;  // per token

    PoolGrid(int h, int w, int grid) {
        gh = std::min(grid, h);
        gw = std::min(grid, w);
        ymap = cell_map(h, gh);
        xmap = cell_map(w, gw);
        counts.assign(static_cast<std::size_t>(gh) * gw, 0);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) ++counts[ymap[y] * gw + xmap[x]];
        }
    }
    int tokens() const { return gh * gw; }
};

// (items, C, h, w) -> tokens (items, gh*gw, C), mean per cell.
std::vector<float> pool_tokens(const FrameBatch& fb, const PoolGrid& g) {
    const int tok = g.tokens();
    std::vector<double> acc(static_cast<std::size_t>(fb.n) * tok * fb.c, 0.0);
    for (int n = 0; n < fb.n; ++n) {
        for (int c = 0; c < fb.c; ++c) {
            for (int y = 0; y < fb.h; ++y) {
                const float* row = fb.data.data() + fb.index(n, c, y, 0);
                for (int x = 0; x < fb.w; ++x) {
                    const int r = g.ymap[y] * g.gw + g.xmap[x];
                    acc[(static_cast<std::size_t>(n) * tok + r) * fb.c + c] += row[x];
                }
            }
        }
    }
    std::vector<float> out(acc.size());
    for (int n = 0; n < fb.n; ++n) {
        for (int r = 0; r < tok; ++r) {
            const double inv = 1.0 / g.counts[r];
            for (int c = 0; c < fb.c; ++c) {
                const std::size_t i = (static_cast<std::size_t>(n) * tok + r) * fb.c + c;
                out[i] = static_cast<float>(acc[i] * inv);
            }
        }
    }
    return out;
}

// dst[n,c,y,x] += tokens[n, cell(y,x), c]
void upsample_add(FrameBatch& dst, const std::vector<float>& tokens, const PoolGrid& g) {
    const int tok = g.tokens();
    for (int n = 0; n < dst.n; ++n) {
        for (int c = 0; c < dst.c; ++c) {
            for (int y = 0; y < dst.h; ++y) {
                float* row = dst.data.data() + dst.index(n, c, y, 0);
                const int base = g.ymap[y] * g.gw;
                for (int x = 0; x < dst.w; ++x) {
                    row[x] += tokens[(static_cast<std::size_t>(n) * tok + base + g.xmap[x]) * dst.c + c];
                }
            }
        }
    }
}

// Backward of upsample_add: dtokens[n,r,c] = sum of dpix over cell r.
std::vector<float> upsample_backward(const FrameBatch& dpix, const PoolGrid& g) {
    const int tok = g.tokens();
    std::vector<double> acc(static_cast<std::size_t>(dpix.n) * tok * dpix.c, 0.0);
    for (int n = 0; n < dpix.n; ++n) {
        for (int c = 0; c < dpix.c; ++c) {
            for (int y = 0; y < dpix.h; ++y) {
                const float* row = dpix.data.data() + dpix.index(n, c, y, 0);
                const int base = g.ymap[y] * g.gw;
                for (int x = 0; x < dpix.w; ++x) {
                    acc[(static_cast<std::size_t>(n) * tok + base + g.xmap[x]) * dpix.c + c] += row[x];
                }
            }
        }
    }
    std::vector<float> out(acc.size());
    for (std::size_t i = 0; i < acc.size(); ++i) out[i] = static_cast<float>(acc[i]);
    return out;
}

// Backward of pool_tokens: dpix[n,c,y,x] += dtokens[n, cell, c] / count(cell).
void pool_backward_add(FrameBatch& dpix, const std::vector<float>& dtokens, const PoolGrid& g) {
    const int tok = g.tokens();
    for (int n = 0; n < dpix.n; ++n) {
        for (int c = 0; c < dpix.c; ++c) {
            for (int y = 0; y < dpix.h; ++y) {
                float* row = dpix.data.data() + dpix.index(n, c, y, 0);
                const int base = g.ymap[y] * g.gw;
                for (int x = 0; x < dpix.w; ++x) {
                    const int r = base + g.xmap[x];
                    row[x] += dtokens[(static_cast<std::size_t>(n) * tok + r) * dpix.c + c] /
                              static_cast<float>(g.counts[r]);
                }
            }
        }
    }
}

// ------------------------------------------------------------- convolution

// Same-padded 3x3 convolution, (n, cin, h, w) -> (n, cout, h, w).
FrameBatch conv3x3(const FrameBatch& in, const NTensor& w, const NTensor& b) {
    const int cout = static_cast<int>(w.dims[0]);
    const int cin = static_cast<int>(w.dims[1]);
    if (cin != in.c) throw std::invalid_argument("conv3x3: channel mismatch");
    FrameBatch out(in.n, cout, in.h, in.w);
    for (int n = 0; n < in.n; ++n) {
        for (int o = 0; o < cout; ++o) {
            const float* wk = w.v.data() + static_cast<std::size_t>(o) * cin * 9;
            for (int y = 0; y < in.h; ++y) {
                for (int x = 0; x < in.w; ++x) {
                    double acc = b.v[o];
                    for (int i = 0; i < cin; ++i) {
                        const float* wi = wk + i * 9;
                        for (int dy = 0; dy < 3; ++dy) {
                            const int yy = y + dy - 1;
                            if (yy < 0 || yy >= in.h) continue;
                            const float* row = in.data.data() + in.index(n, i, yy, 0);
                            for (int dx = 0; dx < 3; ++dx) {
                                const int xx = x + dx - 1;
                                if (xx < 0 || xx >= in.w) continue;
                                acc += static_cast<double>(row[xx]) * wi[dy * 3 + dx];
                            }
                        }
                    }
                    out.at(n, o, y, x) = static_cast<float>(acc);
                }
            }
        }
    }
    return out;
}

void conv3x3_backward(const FrameBatch& in, const NTensor& w, const FrameBatch& dout,
                      FrameBatch& din, NTensor& dw, NTensor& db) {
    const int cout = static_cast<int>(w.dims[0]);
    const int cin = static_cast<int>(w.dims[1]);
    std::vector<double> dw_acc(w.v.size(), 0.0);
    std::vector<double> db_acc(cout, 0.0);
    for (int n = 0; n < in.n; ++n) {
        for (int o = 0; o < cout; ++o) {
            for (int y = 0; y < in.h; ++y) {
                for (int x = 0; x < in.w; ++x) {
                    const float g = dout.at(n, o, y, x);
                    if (g == 0.0f) continue;
                    db_acc[o] += g;
                    for (int i = 0; i < cin; ++i) {
                        const float* wi = w.v.data() + (static_cast<std::size_t>(o) * cin + i) * 9;
                        double* dwi = dw_acc.data() + (static_cast<std::size_t>(o) * cin + i) * 9;
                        for (int dy = 0; dy < 3; ++dy) {
                            const int yy = y + dy - 1;
                            if (yy < 0 || yy >= in.h) continue;
                            for (int dx = 0; dx < 3; ++dx) {
                                const int xx = x + dx - 1;
                                if (xx < 0 || xx >= in.w) continue;
                                dwi[dy * 3 + dx] += static_cast<double>(g) * in.at(n, i, yy, xx);
                                din.at(n, i, yy, xx) += g * wi[dy * 3 + dx];
                            }
                        }
                    }
                }
            }
        }
    }
    add_d_into(dw_acc, dw);
    for (int o = 0; o < cout; ++o) db.v[o] += static_cast<float>(db_acc[o]);
}

// --------------------------------------------------------------- attention

struct AttnWeights {
    const NTensor *wq, *wk, *wv, *wo;
};

// Scaled dot-product attention with residual-free output (caller adds).
// xq: (items, rows, dim); xkv: (kv_items, cols, kv_dim); item -> kv item is
// item / kv_ratio. Fills `cache` and returns out (items, rows, dim).
std::vector<float> attention_forward(const AttnWeights& wts, std::vector<float> xq,
                                     std::vector<float> xkv, int items, int rows, int cols,
                                     int dim, int kv_dim, int kv_items, int kv_ratio, int block,
                                     AttnKind kind, AttentionIO* io, AttnCache& cache) {
    cache.items = items;
    cache.rows = rows;
    cache.cols = cols;
    cache.dim = dim;
    cache.kv_dim = kv_dim;
    cache.kv_items = kv_items;
    cache.kv_ratio = kv_ratio;
    cache.xq = std::move(xq);
    cache.xkv = std::move(xkv);

    cache.q.resize(static_cast<std::size_t>(items) * rows * dim);
    mm_nn(cache.xq.data(), wts.wq->v.data(), cache.q.data(), items * rows, dim, dim);
    cache.k.resize(static_cast<std::size_t>(kv_items) * cols * dim);
    cache.v.resize(cache.k.size());
    mm_nn(cache.xkv.data(), wts.wk->v.data(), cache.k.data(), kv_items * cols, kv_dim, dim);
    mm_nn(cache.xkv.data(), wts.wv->v.data(), cache.v.data(), kv_items * cols, kv_dim, dim);

    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dim));
    cache.a.resize(static_cast<std::size_t>(items) * rows * cols);
    for (int it = 0; it < items; ++it) {
        const float* q = cache.q.data() + static_cast<std::size_t>(it) * rows * dim;
        const float* k = cache.k.data() + static_cast<std::size_t>(it / kv_ratio) * cols * dim;
        float* a = cache.a.data() + static_cast<std::size_t>(it) * rows * cols;
        for (int r = 0; r < rows; ++r) {
            // logits then row softmax, double accumulation
            double maxv = -1e300;
            std::vector<double> logit(cols);
            for (int c = 0; c < cols; ++c) {
                double acc = 0.0;
                for (int p = 0; p < dim; ++p) {
                    acc += static_cast<double>(q[r * dim + p]) * k[c * dim + p];
                }
                logit[c] = acc * inv_sqrt;
                maxv = std::max(maxv, logit[c]);
            }
            double denom = 0.0;
            for (int c = 0; c < cols; ++c) {
                logit[c] = std::exp(logit[c] - maxv);
                denom += logit[c];
            }
            for (int c = 0; c < cols; ++c) {
                a[r * cols + c] = static_cast<float>(logit[c] / denom);
            }
        }
    }

    if (io != nullptr && io->record != nullptr) {
        AttnRecord rec;
        rec.block = block;
        rec.kind = kind;
        rec.items = items;
        rec.rows = rows;
        rec.cols = cols;
        rec.probs = cache.a;
        io->record->records.push_back(std::move(rec));
    }

    if (io != nullptr && io->inject != nullptr) {
        if (io->cursor >= static_cast<int>(io->inject->records.size())) {
            throw std::runtime_error("attention trace mismatch: trace exhausted");
        }
        const AttnRecord& rec = io->inject->records[io->cursor++];
        if (rec.block != block || rec.kind != kind || rec.items != items || rec.rows != rows) {
            throw std::runtime_error("attention trace mismatch: layer shape/kind differs");
        }
        const bool whole = (kind == AttnKind::SpatialSelf && io->inject_self) ||
                           (kind == AttnKind::Temporal && io->inject_temporal);
        if (whole) {
            if (rec.cols != cols) throw std::runtime_error("attention trace mismatch: column count");
            cache.a = rec.probs;
        } else if (kind == AttnKind::CrossText && io->inject_cross) {
            const std::vector<int>& map = *io->cross_column_map;
            if (static_cast<int>(map.size()) != cols) {
                throw std::runtime_error("attention trace mismatch: cross column map size");
            }
            for (int it = 0; it < items; ++it) {
                float* a = cache.a.data() + static_cast<std::size_t>(it) * rows * cols;
                const float* src = rec.probs.data() + static_cast<std::size_t>(it) * rows * rec.cols;
                for (int c = 0; c < cols; ++c) {
                    if (map[c] < 0) continue;
                    if (map[c] >= rec.cols) throw std::runtime_error("cross column map out of range");
                    for (int r = 0; r < rows; ++r) a[r * cols + c] = src[r * rec.cols + map[c]];
                }
            }
        }
    }

    cache.ctx.resize(static_cast<std::size_t>(items) * rows * dim);
    for (int it = 0; it < items; ++it) {
        mm_nn(cache.a.data() + static_cast<std::size_t>(it) * rows * cols,
              cache.v.data() + static_cast<std::size_t>(it / kv_ratio) * cols * dim,
              cache.ctx.data() + static_cast<std::size_t>(it) * rows * dim, rows, cols, dim);
    }
    std::vector<float> out(static_cast<std::size_t>(items) * rows * dim);
    mm_nn(cache.ctx.data(), wts.wo->v.data(), out.data(), items * rows, dim, dim);
    return out;
}

struct AttnGradRefs {
    NTensor *dwq, *dwk, *dwv, *dwo;
};

// Returns dXq; accumulates dXkv into `dxkv` (sized kv_items*cols*kv_dim).
std::vector<float> attention_backward(const AttnWeights& wts, const AttnCache& cc,
                                      const std::vector<float>& dout, AttnGradRefs g,
                                      std::vector<float>& dxkv) {
    const int items = cc.items, rows = cc.rows, cols = cc.cols, dim = cc.dim, kv_dim = cc.kv_dim;
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dim));

    // out = ctx * wo
    std::vector<double> dwo_acc(static_cast<std::size_t>(dim) * dim, 0.0);
    mm_tn_acc_d(cc.ctx.data(), dout.data(), dwo_acc.data(), items * rows, dim, dim);
    add_d_into(dwo_acc, *g.dwo);
    std::vector<float> dctx(static_cast<std::size_t>(items) * rows * dim, 0.0f);
    mm_nt_acc(dout.data(), wts.wo->v.data(), dctx.data(), items * rows, dim, dim);

    std::vector<float> dq(static_cast<std::size_t>(items) * rows * dim, 0.0f);
    std::vector<float> dk(static_cast<std::size_t>(cc.kv_items) * cols * dim, 0.0f);
    std::vector<float> dv(dk.size(), 0.0f);

    std::vector<float> da(static_cast<std::size_t>(rows) * cols);
    std::vector<float> dl(da.size());
    for (int it = 0; it < items; ++it) {
        const int kv = it / cc.kv_ratio;
        const float* a = cc.a.data() + static_cast<std::size_t>(it) * rows * cols;
        const float* v = cc.v.data() + static_cast<std::size_t>(kv) * cols * dim;
        const float* q = cc.q.data() + static_cast<std::size_t>(it) * rows * dim;
        const float* k = cc.k.data() + static_cast<std::size_t>(kv) * cols * dim;
        const float* dctx_i = dctx.data() + static_cast<std::size_t>(it) * rows * dim;

        // ctx = A * V
        std::fill(da.begin(), da.end(), 0.0f);
        mm_nt_acc(dctx_i, v, da.data(), rows, dim, cols);
        {
            std::vector<double> dv_acc(static_cast<std::size_t>(cols) * dim, 0.0);
            mm_tn_acc_d(a, dctx_i, dv_acc.data(), rows, cols, dim);
            float* dvp = dv.data() + static_cast<std::size_t>(kv) * cols * dim;
            for (std::size_t i = 0; i < dv_acc.size(); ++i) dvp[i] += static_cast<float>(dv_acc[i]);
        }

        // softmax backward, then logits = Q K^T * inv_sqrt
        for (int r = 0; r < rows; ++r) {
            double dot = 0.0;
            for (int c = 0; c < cols; ++c) {
                dot += static_cast<double>(da[r * cols + c]) * a[r * cols + c];
            }
            for (int c = 0; c < cols; ++c) {
                dl[r * cols + c] = static_cast<float>(
                    static_cast<double>(a[r * cols + c]) *
                    (static_cast<double>(da[r * cols + c]) - dot) * inv_sqrt);
            }
        }
        mm_nn(dl.data(), k, dq.data() + static_cast<std::size_t>(it) * rows * dim, rows, cols, dim);
        {
            std::vector<double> dk_acc(static_cast<std::size_t>(cols) * dim, 0.0);
            mm_tn_acc_d(dl.data(), q, dk_acc.data(), rows, cols, dim);
            float* dkp = dk.data() + static_cast<std::size_t>(kv) * cols * dim;
            for (std::size_t i = 0; i < dk_acc.size(); ++i) dkp[i] += static_cast<float>(dk_acc[i]);
        }
    }

    // Q = Xq * wq ; K = Xkv * wk ; V = Xkv * wv
    std::vector<double> dwq_acc(static_cast<std::size_t>(dim) * dim, 0.0);
    mm_tn_acc_d(cc.xq.data(), dq.data(), dwq_acc.data(), items * rows, dim, dim);
    add_d_into(dwq_acc, *g.dwq);
    std::vector<float> dxq(static_cast<std::size_t>(items) * rows * dim, 0.0f);
    mm_nt_acc(dq.data(), wts.wq->v.data(), dxq.data(), items * rows, dim, dim);

    std::vector<double> dwk_acc(static_cast<std::size_t>(kv_dim) * dim, 0.0);
    mm_tn_acc_d(cc.xkv.data(), dk.data(), dwk_acc.data(), cc.kv_items * cols, kv_dim, dim);
    add_d_into(dwk_acc, *g.dwk);
    std::vector<double> dwv_acc(static_cast<std::size_t>(kv_dim) * dim, 0.0);
    mm_tn_acc_d(cc.xkv.data(), dv.data(), dwv_acc.data(), cc.kv_items * cols, kv_dim, dim);
    add_d_into(dwv_acc, *g.dwv);

    mm_nt_acc(dk.data(), wts.wk->v.data(), dxkv.data(), cc.kv_items * cols, dim, kv_dim);
    mm_nt_acc(dv.data(), wts.wv->v.data(), dxkv.data(), cc.kv_items * cols, dim, kv_dim);
    return dxq;
}

// ----------------------------------------------------------- time features

std::vector<float> sinusoid_row(int t, int width) {
    std::vector<float> row(width);
    const int half = width / 2;
    for (int j = 0; j < half; ++j) {
        const double freq = std::exp(-std::log(10000.0) * static_cast<double>(j) / half);
        row[2 * j] = static_cast<float>(std::sin(t * freq));
        row[2 * j + 1] = static_cast<float>(std::cos(t * freq));
    }
    return row;
}

std::string block_name(int k, const char* suffix) {
    return "block" + std::to_string(k) + "." + suffix;
}

}  // namespace

// ------------------------------------------------------------ NamedTensors

int NamedTensors::find(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == name) return static_cast<int>(i);
    }
    return -1;
}

NTensor& NamedTensors::get(const std::string& name) {
    const int i = find(name);
    if (i < 0) throw std::runtime_error("unknown tensor: " + name);
    return tensors[i];
}

const NTensor& NamedTensors::get(const std::string& name) const {
    const int i = find(name);
    if (i < 0) throw std::runtime_error("unknown tensor: " + name);
    return tensors[i];
}

void NamedTensors::add(const std::string& name, std::vector<std::uint32_t> dims,
                       bool trainable_flag) {
    NTensor t;
    t.dims = std::move(dims);
    std::size_t n = 1;
    for (std::uint32_t d : t.dims) n *= d;
    t.v.assign(n, 0.0f);
    names.push_back(name);
    tensors.push_back(std::move(t));
    trainable.push_back(trainable_flag);
}

// ------------------------------------------------------------- param init

ToyDenoiserParams ToyDenoiserParams::init(const ToyDenoiserConfig& cfg, std::uint64_t seed,
                                          bool zero_init_temporal) {
    if (cfg.time_features % 2 != 0) throw std::invalid_argument("time_features must be even");
    ToyDenoiserParams p;
    p.cfg = cfg;
    const auto W = static_cast<std::uint32_t>(cfg.width);
    const auto D = static_cast<std::uint32_t>(cfg.text_width);
    const auto We = static_cast<std::uint32_t>(cfg.time_features);

    SeededRng rng(seed, SeededRng::stream_of("toy-denoiser-init"));
    auto fill_normal = [&](NTensor& t, float scale) {
        for (float& x : t.v) x = rng.normal_float() * scale;
    };

    for (int k = 0; k < cfg.blocks; ++k) {
        const std::uint32_t cin =
            k == 0 ? static_cast<std::uint32_t>(cfg.in_channels + cfg.cond_channels) : W;
        p.t.add(block_name(k, "conv.w"), {W, cin, 3, 3});
        p.t.add(block_name(k, "conv.b"), {W});
        p.t.add(block_name(k, "time.wscale"), {We, W});
        p.t.add(block_name(k, "time.wshift"), {We, W});
        for (const char* a : {"self.wq", "self.wk", "self.wv", "self.wo"}) {
            p.t.add(block_name(k, a), {W, W});
        }
        p.t.add(block_name(k, "cross.wq"), {W, W});
        p.t.add(block_name(k, "cross.wk"), {D, W});
        p.t.add(block_name(k, "cross.wv"), {D, W});
        p.t.add(block_name(k, "cross.wo"), {W, W});
        for (const char* a : {"temporal.wq", "temporal.wk", "temporal.wv", "temporal.wo"}) {
            p.t.add(block_name(k, a), {W, W});
        }

        fill_normal(p.t.get(block_name(k, "conv.w")),
                    std::sqrt(2.0f / (static_cast<float>(cin) * 9.0f)));
        const float attn_scale = 1.0f / std::sqrt(static_cast<float>(cfg.width));
        for (const char* a : {"self.wq", "self.wk", "self.wv", "self.wo", "cross.wq", "cross.wk",
                              "cross.wv", "cross.wo", "temporal.wq", "temporal.wk",
                              "temporal.wv"}) {
            fill_normal(p.t.get(block_name(k, a)), attn_scale);
        }
        if (!zero_init_temporal) {
            fill_normal(p.t.get(block_name(k, "temporal.wo")), attn_scale);
        }
        // time.wscale / time.wshift stay zero: neutral modulation at init.
    }

    p.t.add("out.w", {static_cast<std::uint32_t>(cfg.in_channels), W, 3, 3});
    p.t.add("out.b", {static_cast<std::uint32_t>(cfg.in_channels)});
    fill_normal(p.t.get("out.w"), std::sqrt(2.0f / (static_cast<float>(cfg.width) * 9.0f)));

    // Fixed sinusoidal timestep table; stored for the bundle, never trained.
    p.t.add("time.table", {static_cast<std::uint32_t>(cfg.timesteps), We}, false);
    NTensor& table = p.t.get("time.table");
    for (int t = 0; t < cfg.timesteps; ++t) {
        const std::vector<float> row = sinusoid_row(t, cfg.time_features);
        std::copy(row.begin(), row.end(), table.v.begin() + static_cast<std::size_t>(t) * We);
    }
    return p;
}

NamedTensors ToyDenoiserParams::zero_grads() const {
    NamedTensors g;
    for (std::size_t i = 0; i < t.count(); ++i) {
        g.add(t.names[i], t.tensors[i].dims, t.trainable[i]);
    }
    return g;
}

// ----------------------------------------------------------------- forward

VideoLatent toy_denoiser_forward(const ToyDenoiserParams& p, const VideoLatent& z_t, int t,
                                 const ConditionPair& cond, AttentionIO* io,
                                 ToyForwardCache* cache) {
    const ToyDenoiserConfig& cfg = p.cfg;
    if (z_t.c != cfg.in_channels) {
        throw std::invalid_argument("toy denoiser: latent channel count mismatch");
    }
    if (t < 0 || t >= cfg.timesteps) throw std::invalid_argument("toy denoiser: t out of range");

    VideoLatent cv = cond.has_video()
                         ? *cond.video
                         : VideoLatent::zeros(z_t.b, cfg.cond_channels, z_t.f, z_t.h, z_t.w);
    if (cv.c != cfg.cond_channels) {
        throw std::invalid_argument("toy denoiser: conditioning channel count mismatch");
    }
    PromptEmbedding text =
        cond.has_text() ? *cond.text : PromptEmbedding::empty_prompt(cfg.text_width);
    if (text.width != cfg.text_width) {
        throw std::invalid_argument("toy denoiser: embedding width mismatch");
    }

    ToyForwardCache local;
    ToyForwardCache& cc = cache != nullptr ? *cache : local;
    cc = ToyForwardCache{};
    cc.b = z_t.b;
    cc.f = z_t.f;
    cc.h = z_t.h;
    cc.w = z_t.w;
    cc.t = t;
    cc.text = text;
    cc.input_concat = concat_condition(z_t, cv);
    cc.blocks.resize(cfg.blocks);
    if (io != nullptr) io->cursor = 0;

    const PoolGrid grid(z_t.h, z_t.w, cfg.attn_grid);
    const NTensor& table = p.t.get("time.table");
    const float* time_row = table.v.data() + static_cast<std::size_t>(t) * cfg.time_features;

    VideoLatent x = cc.input_concat;
    for (int k = 0; k < cfg.blocks; ++k) {
        BlockCache& bc = cc.blocks[k];
        bc.conv_in = reshape_spatial(x);
        bc.conv_out = conv3x3(bc.conv_in, p.t.get(block_name(k, "conv.w")),
                              p.t.get(block_name(k, "conv.b")));

        // Per-channel time modulation: h * (1 + scale_t) + shift_t.
        const NTensor& wscale = p.t.get(block_name(k, "time.wscale"));
        const NTensor& wshift = p.t.get(block_name(k, "time.wshift"));
        std::vector<float> scale(cfg.width), shift(cfg.width);
        for (int c = 0; c < cfg.width; ++c) {
            double sa = 0.0, sb = 0.0;
            for (int j = 0; j < cfg.time_features; ++j) {
                sa += static_cast<double>(time_row[j]) * wscale.v[static_cast<std::size_t>(j) * cfg.width + c];
                sb += static_cast<double>(time_row[j]) * wshift.v[static_cast<std::size_t>(j) * cfg.width + c];
            }
            scale[c] = static_cast<float>(sa);
            shift[c] = static_cast<float>(sb);
        }
        bc.pre_act = bc.conv_out;
        for (int n = 0; n < bc.pre_act.n; ++n) {
            for (int c = 0; c < cfg.width; ++c) {
                float* px = bc.pre_act.data.data() + bc.pre_act.index(n, c, 0, 0);
                const std::size_t plane = static_cast<std::size_t>(bc.pre_act.h) * bc.pre_act.w;
                for (std::size_t i = 0; i < plane; ++i) px[i] = px[i] * (1.0f + scale[c]) + shift[c];
            }
        }
        bc.act = bc.pre_act;
        for (float& v : bc.act.data) v = silu(v);

        const int items = bc.act.n;
        const int tokens = grid.tokens();

        // spatial self-attention on the pooled grid
        bc.self_tokens = pool_tokens(bc.act, grid);
        AttnWeights self_w{&p.t.get(block_name(k, "self.wq")), &p.t.get(block_name(k, "self.wk")),
                           &p.t.get(block_name(k, "self.wv")), &p.t.get(block_name(k, "self.wo"))};
        std::vector<float> self_out =
            attention_forward(self_w, bc.self_tokens, bc.self_tokens, items, tokens, tokens,
                              cfg.width, cfg.width, items, 1, k, AttnKind::SpatialSelf, io,
                              bc.self_attn);
        bc.res_self = bc.act;
        upsample_add(bc.res_self, self_out, grid);

        // cross-attention to the prompt tokens
        bc.cross_tokens = pool_tokens(bc.res_self, grid);
        AttnWeights cross_w{&p.t.get(block_name(k, "cross.wq")), &p.t.get(block_name(k, "cross.wk")),
                            &p.t.get(block_name(k, "cross.wv")), &p.t.get(block_name(k, "cross.wo"))};
        std::vector<float> cross_out =
            attention_forward(cross_w, bc.cross_tokens, text.data, items, tokens, text.length,
                              cfg.width, cfg.text_width, 1, items, k, AttnKind::CrossText, io,
                              bc.cross_attn);
        bc.res_cross = bc.res_self;
        upsample_add(bc.res_cross, cross_out, grid);

        // temporal attention over per-pixel frame sequences
        VideoLatent x5 = inverse_spatial(bc.res_cross, z_t.b, z_t.f);
        bc.temporal_in = reshape_temporal(x5);
        AttnWeights temp_w{&p.t.get(block_name(k, "temporal.wq")),
                           &p.t.get(block_name(k, "temporal.wk")),
                           &p.t.get(block_name(k, "temporal.wv")),
                           &p.t.get(block_name(k, "temporal.wo"))};
        std::vector<float> temp_out = attention_forward(
            temp_w, bc.temporal_in.data, bc.temporal_in.data, bc.temporal_in.n, z_t.f, z_t.f,
            cfg.width, cfg.width, bc.temporal_in.n, 1, k, AttnKind::Temporal, io, bc.temp_attn);
        TokenSeq tt = bc.temporal_in;
        for (std::size_t i = 0; i < tt.data.size(); ++i) tt.data[i] += temp_out[i];
        x = inverse_temporal(tt, z_t.b, z_t.h, z_t.w);
    }

    cc.head_in = reshape_spatial(x);
    FrameBatch out4 = conv3x3(cc.head_in, p.t.get("out.w"), p.t.get("out.b"));
    return inverse_spatial(out4, z_t.b, z_t.f);
}

// ---------------------------------------------------------------- backward

void toy_denoiser_backward(const ToyDenoiserParams& p, const ToyForwardCache& cc,
                           const VideoLatent& dout, NamedTensors& grads) {
    const ToyDenoiserConfig& cfg = p.cfg;
    const PoolGrid grid(cc.h, cc.w, cfg.attn_grid);
    const NTensor& table = p.t.get("time.table");
    const float* time_row = table.v.data() + static_cast<std::size_t>(cc.t) * cfg.time_features;

    // output head
    FrameBatch dout4 = reshape_spatial(dout);
    FrameBatch dhead(cc.head_in.n, cc.head_in.c, cc.head_in.h, cc.head_in.w);
    conv3x3_backward(cc.head_in, p.t.get("out.w"), dout4, dhead, grads.get("out.w"),
                     grads.get("out.b"));
    VideoLatent dx = inverse_spatial(dhead, cc.b, cc.f);

    for (int k = cfg.blocks - 1; k >= 0; --k) {
        const BlockCache& bc = cc.blocks[k];
        const int items = bc.act.n;

        // x_{k+1} = inverse_temporal(temporal_in + attn_out)
        TokenSeq dtt = reshape_temporal(dx);
        AttnWeights temp_w{&p.t.get(block_name(k, "temporal.wq")),
                           &p.t.get(block_name(k, "temporal.wk")),
                           &p.t.get(block_name(k, "temporal.wv")),
                           &p.t.get(block_name(k, "temporal.wo"))};
        AttnGradRefs temp_g{&grads.get(block_name(k, "temporal.wq")),
                            &grads.get(block_name(k, "temporal.wk")),
                            &grads.get(block_name(k, "temporal.wv")),
                            &grads.get(block_name(k, "temporal.wo"))};
        std::vector<float> dkv_temp(bc.temporal_in.data.size(), 0.0f);
        std::vector<float> dxq_temp =
            attention_backward(temp_w, bc.temp_attn, dtt.data, temp_g, dkv_temp);
        TokenSeq d_temporal_in = dtt;
        for (std::size_t i = 0; i < d_temporal_in.data.size(); ++i) {
            d_temporal_in.data[i] += dxq_temp[i] + dkv_temp[i];
        }
        VideoLatent d_x5 = inverse_temporal(d_temporal_in, cc.b, cc.h, cc.w);
        FrameBatch d_res_cross = reshape_spatial(d_x5);

        // res_cross = res_self + upsample(cross_out)
        std::vector<float> d_cross_out = upsample_backward(d_res_cross, grid);
        AttnWeights cross_w{&p.t.get(block_name(k, "cross.wq")), &p.t.get(block_name(k, "cross.wk")),
                            &p.t.get(block_name(k, "cross.wv")), &p.t.get(block_name(k, "cross.wo"))};
        AttnGradRefs cross_g{&grads.get(block_name(k, "cross.wq")),
                             &grads.get(block_name(k, "cross.wk")),
                             &grads.get(block_name(k, "cross.wv")),
                             &grads.get(block_name(k, "cross.wo"))};
        std::vector<float> d_text(cc.text.data.size(), 0.0f);  // prompt embedding is an input
        std::vector<float> d_cross_tokens =
            attention_backward(cross_w, bc.cross_attn, d_cross_out, cross_g, d_text);
        FrameBatch d_res_self = d_res_cross;
        pool_backward_add(d_res_self, d_cross_tokens, grid);

        // res_self = act + upsample(self_out)
        std::vector<float> d_self_out = upsample_backward(d_res_self, grid);
        AttnWeights self_w{&p.t.get(block_name(k, "self.wq")), &p.t.get(block_name(k, "self.wk")),
                           &p.t.get(block_name(k, "self.wv")), &p.t.get(block_name(k, "self.wo"))};
        AttnGradRefs self_g{&grads.get(block_name(k, "self.wq")),
                            &grads.get(block_name(k, "self.wk")),
                            &grads.get(block_name(k, "self.wv")),
                            &grads.get(block_name(k, "self.wo"))};
        std::vector<float> dkv_self(bc.self_tokens.size(), 0.0f);
        std::vector<float> dxq_self =
            attention_backward(self_w, bc.self_attn, d_self_out, self_g, dkv_self);
        for (std::size_t i = 0; i < dxq_self.size(); ++i) dxq_self[i] += dkv_self[i];
        FrameBatch d_act = d_res_self;
        pool_backward_add(d_act, dxq_self, grid);

        // silu
        FrameBatch d_pre = d_act;
        for (std::size_t i = 0; i < d_pre.data.size(); ++i) {
            d_pre.data[i] = d_act.data[i] * silu_grad(bc.pre_act.data[i]);
        }

        // time modulation backward
        const NTensor& wscale = p.t.get(block_name(k, "time.wscale"));
        std::vector<float> scale(cfg.width);
        for (int c = 0; c < cfg.width; ++c) {
            double sa = 0.0;
            for (int j = 0; j < cfg.time_features; ++j) {
                sa += static_cast<double>(time_row[j]) * wscale.v[static_cast<std::size_t>(j) * cfg.width + c];
            }
            scale[c] = static_cast<float>(sa);
        }
        std::vector<double> dscale(cfg.width, 0.0), dshift(cfg.width, 0.0);
        FrameBatch d_conv_out = d_pre;
        const std::size_t plane = static_cast<std::size_t>(d_pre.h) * d_pre.w;
        for (int n = 0; n < items; ++n) {
            for (int c = 0; c < cfg.width; ++c) {
                const float* dp = d_pre.data.data() + d_pre.index(n, c, 0, 0);
                const float* co = bc.conv_out.data.data() + bc.conv_out.index(n, c, 0, 0);
                float* dco = d_conv_out.data.data() + d_conv_out.index(n, c, 0, 0);
                for (std::size_t i = 0; i < plane; ++i) {
                    dscale[c] += static_cast<double>(dp[i]) * co[i];
                    dshift[c] += dp[i];
                    dco[i] = dp[i] * (1.0f + scale[c]);
                }
            }
        }
        NTensor& dwscale = grads.get(block_name(k, "time.wscale"));
        NTensor& dwshift = grads.get(block_name(k, "time.wshift"));
        for (int j = 0; j < cfg.time_features; ++j) {
            for (int c = 0; c < cfg.width; ++c) {
                dwscale.v[static_cast<std::size_t>(j) * cfg.width + c] +=
                    static_cast<float>(time_row[j] * dscale[c]);
                dwshift.v[static_cast<std::size_t>(j) * cfg.width + c] +=
                    static_cast<float>(time_row[j] * dshift[c]);
            }
        }

        // conv backward
        FrameBatch d_conv_in(bc.conv_in.n, bc.conv_in.c, bc.conv_in.h, bc.conv_in.w);
        conv3x3_backward(bc.conv_in, p.t.get(block_name(k, "conv.w")), d_conv_out, d_conv_in,
                         grads.get(block_name(k, "conv.w")), grads.get(block_name(k, "conv.b")));
        if (k > 0) dx = inverse_spatial(d_conv_in, cc.b, cc.f);
    }
}

// ---------------------------------------------------------------- training

double noise_mse(const VideoLatent& eps, const VideoLatent& pred) {
    check_same_shape(eps, pred, "noise_mse");
    double acc = 0.0;
    for (std::size_t i = 0; i < eps.data.size(); ++i) {
        const double d = static_cast<double>(eps.data[i]) - pred.data[i];
        acc += d * d;
    }
    return acc / static_cast<double>(eps.data.size());
}

TrainState TrainState::init(const ToyDenoiserConfig& cfg, std::uint64_t seed) {
    TrainState st;
    st.params = ToyDenoiserParams::init(cfg, seed);
    st.m = st.params.zero_grads();
    st.v = st.params.zero_grads();
    return st;
}

double train_step(TrainState& state, const std::vector<TrainSample>& batch, SeededRng& rng,
                  const NoiseSchedule& s, const AdamConfig& opt) {
    if (batch.empty()) throw std::invalid_argument("train_step: empty batch");
    if (s.T != state.params.cfg.timesteps) {
        throw std::invalid_argument("train_step: schedule/table length mismatch");
    }
    NamedTensors grads = state.params.zero_grads();
    double loss_sum = 0.0;
    const double inv_batch = 1.0 / static_cast<double>(batch.size());

    for (const TrainSample& sample : batch) {
        const int t = rng.uniform_int(0, s.T - 1);
        ConditionPair cond;
        cond.video = sample.input;
        cond.text = sample.text;
        cond = condition_dropout(cond, rng, opt.dropout_video, opt.dropout_text);

        VideoLatent eps(sample.edited.b, sample.edited.c, sample.edited.f, sample.edited.h,
                        sample.edited.w);
        rng.fill_normal(eps.data);
        const VideoLatent z_t = forward_diffuse(sample.edited, eps, t, s);

        ToyForwardCache cache;
        const VideoLatent pred = toy_denoiser_forward(state.params, z_t, t, cond, nullptr, &cache);
        loss_sum += noise_mse(eps, pred);

        VideoLatent dout = pred;
        const float c = static_cast<float>(2.0 * inv_batch / static_cast<double>(pred.data.size()));
        for (std::size_t i = 0; i < dout.data.size(); ++i) {
            dout.data[i] = c * (pred.data[i] - eps.data[i]);
        }
        toy_denoiser_backward(state.params, cache, dout, grads);
    }

    ++state.step;
    const float b1 = opt.beta1, b2 = opt.beta2;
    const float bias1 = 1.0f - std::pow(b1, static_cast<float>(state.step));
    const float bias2 = 1.0f - std::pow(b2, static_cast<float>(state.step));
    for (std::size_t i = 0; i < state.params.t.count(); ++i) {
        if (!state.params.t.trainable[i]) continue;
        NTensor& theta = state.params.t.tensors[i];
        NTensor& m = state.m.tensors[i];
        NTensor& v = state.v.tensors[i];
        const NTensor& g = grads.tensors[i];
        for (std::size_t j = 0; j < theta.v.size(); ++j) {
            m.v[j] = b1 * m.v[j] + (1.0f - b1) * g.v[j];
            v.v[j] = b2 * v.v[j] + (1.0f - b2) * g.v[j] * g.v[j];
            const float mhat = m.v[j] / bias1;
            const float vhat = v.v[j] / bias2;
            theta.v[j] -= opt.lr * mhat / (std::sqrt(vhat) + opt.eps);
        }
    }
    return loss_sum * inv_batch;
}

// ------------------------------------------------------------ serialization

void save_params_bundle(const std::string& dir, const ToyDenoiserParams& p) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    json manifest;
    manifest["format"] = "videdit-params-v1";
    manifest["config"] = {
        {"in_channels", p.cfg.in_channels},   {"cond_channels", p.cfg.cond_channels},
        {"width", p.cfg.width},               {"blocks", p.cfg.blocks},
        {"text_width", p.cfg.text_width},     {"timesteps", p.cfg.timesteps},
        {"time_features", p.cfg.time_features}, {"attn_grid", p.cfg.attn_grid},
    };
    json tensors = json::array();
    for (std::size_t i = 0; i < p.t.count(); ++i) {
        std::string file = p.t.names[i];
        for (char& ch : file) {
            if (ch == '/' || ch == '.') ch = '_';
        }
        file += ".vten";
        write_vten((fs::path(dir) / file).string(), p.t.tensors[i]);
        tensors.push_back({{"name", p.t.names[i]},
                           {"file", file},
                           {"trainable", static_cast<bool>(p.t.trainable[i])}});
    }
    manifest["tensors"] = tensors;
    std::ofstream out(fs::path(dir) / "manifest.json");
    if (!out) throw std::runtime_error("save_params_bundle: cannot write manifest in " + dir);
    out << manifest.dump(2) << "\n";
}

ToyDenoiserParams load_params_bundle(const std::string& dir) {
    namespace fs = std::filesystem;
    std::ifstream in(fs::path(dir) / "manifest.json");
    if (!in) throw std::runtime_error("load_params_bundle: missing manifest in " + dir);
    json manifest = json::parse(in);
    if (manifest.at("format") != "videdit-params-v1") {
        throw std::runtime_error("load_params_bundle: unknown format");
    }
    ToyDenoiserParams p;
    const json& c = manifest.at("config");
    p.cfg.in_channels = c.at("in_channels");
    p.cfg.cond_channels = c.at("cond_channels");
    p.cfg.width = c.at("width");
    p.cfg.blocks = c.at("blocks");
    p.cfg.text_width = c.at("text_width");
    p.cfg.timesteps = c.at("timesteps");
    p.cfg.time_features = c.at("time_features");
    p.cfg.attn_grid = c.at("attn_grid");
    for (const json& t : manifest.at("tensors")) {
        NTensor nt = read_vten((fs::path(dir) / t.at("file").get<std::string>()).string());
        p.t.names.push_back(t.at("name"));
        p.t.tensors.push_back(std::move(nt));
        p.t.trainable.push_back(t.at("trainable").get<bool>());
    }
    return p;
}

}  // namespace videdit
