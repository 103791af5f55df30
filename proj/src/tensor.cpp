#include "videdit/tensor.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace videdit {

namespace {

std::size_t checked_size(int b, int c, int f, int h, int w) {
    if (b <= 0 || c <= 0 || f <= 0 || h <= 0 || w <= 0) {
        throw std::invalid_argument("tensor dims must be positive");
    }
    return static_cast<std::size_t>(b) * c * f * h * w;
}

}  // namespace

VideoLatent::VideoLatent(int b_, int c_, int f_, int h_, int w_)
    : b(b_), c(c_), f(f_), h(h_), w(w_), data(checked_size(b_, c_, f_, h_, w_), 0.0f) {}

VideoLatent VideoLatent::full(int b, int c, int f, int h, int w, float value) {
    VideoLatent v(b, c, f, h, w);
    std::fill(v.data.begin(), v.data.end(), value);
    return v;
}

VideoLatent VideoLatent::random_normal(int b, int c, int f, int h, int w, SeededRng& rng) {
    VideoLatent v(b, c, f, h, w);
    rng.fill_normal(v.data);
    return v;
}

bool VideoLatent::all_finite() const {
    for (float x : data) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

std::string VideoLatent::shape_str() const {
    std::ostringstream os;
    os << "(" << b << "," << c << "," << f << "," << h << "," << w << ")";
    return os.str();
}

FrameBatch::FrameBatch(int n_, int c_, int h_, int w_)
    : n(n_), c(c_), h(h_), w(w_),
      data(static_cast<std::size_t>(n_) * c_ * h_ * w_, 0.0f) {
    if (n_ <= 0 || c_ <= 0 || h_ <= 0 || w_ <= 0) {
        throw std::invalid_argument("frame batch dims must be positive");
    }
}

TokenSeq::TokenSeq(int n_, int f_, int c_)
    : n(n_), f(f_), c(c_),
      data(static_cast<std::size_t>(n_) * f_ * c_, 0.0f) {
    if (n_ <= 0 || f_ <= 0 || c_ <= 0) {
        throw std::invalid_argument("token seq dims must be positive");
    }
}

FrameBatch reshape_spatial(const VideoLatent& v) {
    FrameBatch fb(v.b * v.f, v.c, v.h, v.w);
    const std::size_t plane = static_cast<std::size_t>(v.h) * v.w;
    for (int bi = 0; bi < v.b; ++bi) {
        for (int ci = 0; ci < v.c; ++ci) {
            for (int fi = 0; fi < v.f; ++fi) {
                const float* src = v.data.data() + v.index(bi, ci, fi, 0, 0);
                float* dst = fb.data.data() + fb.index(bi * v.f + fi, ci, 0, 0);
                std::copy(src, src + plane, dst);
            }
        }
    }
    return fb;
}

VideoLatent inverse_spatial(const FrameBatch& fb, int b, int f) {
    if (b * f != fb.n) throw std::invalid_argument("inverse_spatial: b*f != item count");
    VideoLatent v(b, fb.c, f, fb.h, fb.w);
    const std::size_t plane = static_cast<std::size_t>(fb.h) * fb.w;
    for (int bi = 0; bi < b; ++bi) {
        for (int ci = 0; ci < fb.c; ++ci) {
            for (int fi = 0; fi < f; ++fi) {
                const float* src = fb.data.data() + fb.index(bi * f + fi, ci, 0, 0);
                float* dst = v.data.data() + v.index(bi, ci, fi, 0, 0);
                std::copy(src, src + plane, dst);
            }
        }
    }
    return v;
}

TokenSeq reshape_temporal(const VideoLatent& v) {
    TokenSeq ts(v.b * v.h * v.w, v.f, v.c);
    for (int bi = 0; bi < v.b; ++bi) {
        for (int ci = 0; ci < v.c; ++ci) {
            for (int fi = 0; fi < v.f; ++fi) {
                for (int hi = 0; hi < v.h; ++hi) {
                    const float* src = v.data.data() + v.index(bi, ci, fi, hi, 0);
                    for (int wi = 0; wi < v.w; ++wi) {
                        ts.at((bi * v.h + hi) * v.w + wi, fi, ci) = src[wi];
                    }
                }
            }
        }
    }
    return ts;
}

VideoLatent inverse_temporal(const TokenSeq& ts, int b, int h, int w) {
    if (b * h * w != ts.n) throw std::invalid_argument("inverse_temporal: b*h*w != item count");
    VideoLatent v(b, ts.c, ts.f, h, w);
    for (int bi = 0; bi < b; ++bi) {
        for (int ci = 0; ci < ts.c; ++ci) {
            for (int fi = 0; fi < ts.f; ++fi) {
                for (int hi = 0; hi < h; ++hi) {
                    float* dst = v.data.data() + v.index(bi, ci, fi, hi, 0);
                    for (int wi = 0; wi < w; ++wi) {
                        dst[wi] = ts.at((bi * h + hi) * w + wi, fi, ci);
                    }
                }
            }
        }
    }
    return v;
}

VideoLatent concat_condition(const VideoLatent& z, const VideoLatent& cond) {
    if (z.b != cond.b || z.f != cond.f || z.h != cond.h || z.w != cond.w) {
        throw std::invalid_argument("concat_condition: shape mismatch " + z.shape_str() +
                                    " vs " + cond.shape_str());
    }
    VideoLatent out(z.b, z.c + cond.c, z.f, z.h, z.w);
    const std::size_t block = static_cast<std::size_t>(z.f) * z.h * z.w;
    for (int bi = 0; bi < z.b; ++bi) {
        for (int ci = 0; ci < z.c; ++ci) {
            std::copy_n(z.data.data() + z.index(bi, ci, 0, 0, 0), block,
                        out.data.data() + out.index(bi, ci, 0, 0, 0));
        }
        for (int ci = 0; ci < cond.c; ++ci) {
            std::copy_n(cond.data.data() + cond.index(bi, ci, 0, 0, 0), block,
                        out.data.data() + out.index(bi, z.c + ci, 0, 0, 0));
        }
    }
    return out;
}

VideoLatent concat_frames(const VideoLatent& a, const VideoLatent& b) {
    if (a.b != b.b || a.c != b.c || a.h != b.h || a.w != b.w) {
        throw std::invalid_argument("concat_frames: shape mismatch " + a.shape_str() + " vs " +
                                    b.shape_str());
    }
    VideoLatent out(a.b, a.c, a.f + b.f, a.h, a.w);
    const std::size_t plane = static_cast<std::size_t>(a.h) * a.w;
    for (int bi = 0; bi < a.b; ++bi) {
        for (int ci = 0; ci < a.c; ++ci) {
            for (int fi = 0; fi < a.f; ++fi) {
                std::copy_n(a.data.data() + a.index(bi, ci, fi, 0, 0), plane,
                            out.data.data() + out.index(bi, ci, fi, 0, 0));
            }
            for (int fi = 0; fi < b.f; ++fi) {
                std::copy_n(b.data.data() + b.index(bi, ci, fi, 0, 0), plane,
                            out.data.data() + out.index(bi, ci, a.f + fi, 0, 0));
            }
        }
    }
    return out;
}

VideoLatent slice_frames(const VideoLatent& v, int f0, int count) {
    if (f0 < 0 || count <= 0 || f0 + count > v.f) {
        throw std::invalid_argument("slice_frames: range out of bounds");
    }
    VideoLatent out(v.b, v.c, count, v.h, v.w);
    const std::size_t plane = static_cast<std::size_t>(v.h) * v.w;
    for (int bi = 0; bi < v.b; ++bi) {
        for (int ci = 0; ci < v.c; ++ci) {
            for (int fi = 0; fi < count; ++fi) {
                std::copy_n(v.data.data() + v.index(bi, ci, f0 + fi, 0, 0), plane,
                            out.data.data() + out.index(bi, ci, fi, 0, 0));
            }
        }
    }
    return out;
}

void check_same_shape(const VideoLatent& a, const VideoLatent& b, const char* what) {
    if (!a.same_shape(b)) {
        throw std::invalid_argument(std::string(what) + ": shape mismatch " + a.shape_str() +
                                    " vs " + b.shape_str());
    }
}

}  // namespace videdit
