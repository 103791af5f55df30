#include "videdit/toyworld.hpp"

#include <cmath>
#include <stdexcept>

namespace videdit {

namespace {

struct Palette {
    std::array<float, 3> a, b;
};

Palette texture_palette(TextureKind t) {
    switch (t) {
        case TextureKind::Plain:    return {{0.50f, 0.50f, 0.55f}, {0.50f, 0.50f, 0.55f}};
        case TextureKind::Checker:  return {{0.20f, 0.20f, 0.22f}, {0.75f, 0.75f, 0.80f}};
        case TextureKind::HStripes: return {{0.15f, 0.30f, 0.50f}, {0.50f, 0.70f, 0.85f}};
        case TextureKind::VStripes: return {{0.55f, 0.30f, 0.20f}, {0.80f, 0.70f, 0.45f}};
    }
    return {};
}

std::array<float, 3> background_at(TextureKind t, int y, int x) {
    const Palette p = texture_palette(t);
    switch (t) {
        case TextureKind::Plain:
            return p.a;
        case TextureKind::Checker:
            return ((y / 8 + x / 8) % 2 == 0) ? p.a : p.b;
        case TextureKind::HStripes:
            return ((y / 4) % 2 == 0) ? p.a : p.b;
        case TextureKind::VStripes:
            return ((x / 4) % 2 == 0) ? p.a : p.b;
    }
    return p.a;
}

bool inside_shape(ShapeKind shape, float dx, float dy, float r) {
    switch (shape) {
        case ShapeKind::Square:
            return std::max(std::abs(dx), std::abs(dy)) <= r;
        case ShapeKind::Circle:
            return dx * dx + dy * dy <= r * r;
        case ShapeKind::Triangle: {
            if (dy < -r || dy > r) return false;
            const float halfwidth = (dy + r) * 0.5f;
            return std::abs(dx) <= halfwidth;
        }
        case ShapeKind::Cross:
            return (std::abs(dx) <= r / 3.0f && std::abs(dy) <= r) ||
                   (std::abs(dy) <= r / 3.0f && std::abs(dx) <= r);
    }
    return false;
}

inline int wrap(int v, int n) {
    const int m = v % n;
    return m < 0 ? m + n : m;
}

}  // namespace

void SceneSpec::validate(int h, int w) const {
    if (frames < 1) throw std::invalid_argument("scene: need at least one frame");
    if (allow_exit) return;
    const float r = radius * static_cast<float>(std::min(h, w));
    for (int k = 0; k < frames; ++k) {
        const float ox = cx * w + k * vx;
        const float oy = cy * h + k * vy;
        if (ox - r < 1.0f || oy - r < 1.0f || ox + r > w - 1.0f || oy + r > h - 1.0f) {
            throw std::invalid_argument("scene: object trajectory leaves the frame at step " +
                                        std::to_string(k));
        }
    }
}

VideoLatent render_scene(const SceneSpec& spec, int h, int w) {
    spec.validate(h, w);
    VideoLatent out(1, 3, spec.frames, h, w);
    const float r = spec.radius * static_cast<float>(std::min(h, w));
    for (int k = 0; k < spec.frames; ++k) {
        // world frame: static background, object at its step-k position
        const float ox = spec.cx * w + k * spec.vx;
        const float oy = spec.cy * h + k * spec.vy;
        const int shift_x = static_cast<int>(std::lround(k * spec.pan_x));
        const int shift_y = static_cast<int>(std::lround(k * spec.pan_y));
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                // camera pan = integer world translation with wraparound
                const int wy = wrap(y - shift_y, h);
                const int wx = wrap(x - shift_x, w);
                std::array<float, 3> px = background_at(spec.texture, wy, wx);
                if (inside_shape(spec.shape, static_cast<float>(wx) - ox,
                                 static_cast<float>(wy) - oy, r)) {
                    px = spec.color;
                }
                for (int ci = 0; ci < 3; ++ci) out.at(0, ci, k, y, x) = px[ci];
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------- vocabulary

std::vector<std::string> tokenize(const std::string& prompt) {
    std::vector<std::string> tokens;
    std::string cur;
    for (char ch : prompt) {
        if (std::isalnum(static_cast<unsigned char>(ch)) || ch == '-') {
            cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
        } else if (!cur.empty()) {
            tokens.push_back(cur);
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(cur);
    return tokens;
}

const std::vector<std::string>& color_words() {
    static const std::vector<std::string> v = {"red", "green", "blue", "yellow", "orange", "purple"};
    return v;
}
const std::vector<std::string>& shape_words() {
    static const std::vector<std::string> v = {"square", "circle", "triangle", "cross"};
    return v;
}
const std::vector<std::string>& texture_words() {
    static const std::vector<std::string> v = {"plain", "checker", "hstripes", "vstripes"};
    return v;
}
const std::vector<std::string>& pan_words() {
    static const std::vector<std::string> v = {"left", "right", "up", "down", "static"};
    return v;
}

std::array<float, 3> color_of(const std::string& word) {
    if (word == "red") return {1.00f, 0.15f, 0.15f};
    if (word == "green") return {0.15f, 0.95f, 0.20f};
    if (word == "blue") return {0.20f, 0.35f, 1.00f};
    if (word == "yellow") return {1.00f, 0.90f, 0.15f};
    if (word == "orange") return {1.00f, 0.60f, 0.10f};
    if (word == "purple") return {0.65f, 0.20f, 0.90f};
    throw std::invalid_argument("unknown color word: " + word);
}

ShapeKind shape_of(const std::string& word) {
    if (word == "square") return ShapeKind::Square;
    if (word == "circle") return ShapeKind::Circle;
    if (word == "triangle") return ShapeKind::Triangle;
    if (word == "cross") return ShapeKind::Cross;
    throw std::invalid_argument("unknown shape word: " + word);
}

TextureKind texture_of(const std::string& word) {
    if (word == "plain") return TextureKind::Plain;
    if (word == "checker") return TextureKind::Checker;
    if (word == "hstripes") return TextureKind::HStripes;
    if (word == "vstripes") return TextureKind::VStripes;
    throw std::invalid_argument("unknown texture word: " + word);
}

SceneSpec scene_from_tokens(const std::vector<std::string>& tokens, int frames) {
    SceneSpec spec;
    spec.frames = frames;
    for (const std::string& tok : tokens) {
        for (const std::string& wrd : color_words()) {
            if (tok == wrd) spec.color = color_of(wrd);
        }
        for (const std::string& wrd : shape_words()) {
            if (tok == wrd) spec.shape = shape_of(wrd);
        }
        for (const std::string& wrd : texture_words()) {
            if (tok == wrd) spec.texture = texture_of(wrd);
        }
        if (tok == "left") { spec.pan_x = -1.0f; spec.pan_y = 0.0f; }
        if (tok == "right") { spec.pan_x = 1.0f; spec.pan_y = 0.0f; }
        if (tok == "up") { spec.pan_x = 0.0f; spec.pan_y = -1.0f; }
        if (tok == "down") { spec.pan_x = 0.0f; spec.pan_y = 1.0f; }
        if (tok == "static") { spec.pan_x = 0.0f; spec.pan_y = 0.0f; }
    }
    return spec;
}

// ------------------------------------------------------------------ embedder

namespace {

constexpr float kPoolWeight = 0.3f;

int hist_bin(const std::array<float, 3>& rgb) {
    int bin = 0;
    for (int ci = 0; ci < 3; ++ci) {
        // total on arbitrary inputs: out-of-range values land in the edge bins
        int q = static_cast<int>(rgb[ci] * 3.0f);
        q = std::max(0, std::min(q, 2));
        bin = bin * 3 + q;
    }
    return bin;
}

// Feature layout: [27 histogram bins | 4x4 pool grid x 3 channels].
std::vector<float> image_feature(const Image& frame) {
    std::vector<float> feat(27 + 48, 0.0f);
    const float inv_count = 1.0f / static_cast<float>(frame.h * frame.w);
    for (int y = 0; y < frame.h; ++y) {
        for (int x = 0; x < frame.w; ++x) {
            std::array<float, 3> rgb{};
            for (int ci = 0; ci < std::min(3, frame.c); ++ci) rgb[ci] = frame.at(ci, y, x);
            feat[hist_bin(rgb)] += inv_count;
        }
    }
    for (int ci = 0; ci < std::min(3, frame.c); ++ci) {
        for (int gy = 0; gy < 4; ++gy) {
            for (int gx = 0; gx < 4; ++gx) {
                double acc = 0.0;
                int cnt = 0;
                for (int y = gy * frame.h / 4; y < (gy + 1) * frame.h / 4; ++y) {
                    for (int x = gx * frame.w / 4; x < (gx + 1) * frame.w / 4; ++x) {
                        acc += frame.at(ci, y, x);
                        ++cnt;
                    }
                }
                feat[27 + (ci * 4 + gy) * 4 + gx] =
                    cnt > 0 ? static_cast<float>(acc / cnt) * kPoolWeight : 0.0f;
            }
        }
    }
    return feat;
}

void add_color_proto(std::vector<float>& feat, const std::array<float, 3>& rgb, float weight) {
    feat[hist_bin(rgb)] += weight;
}

std::vector<float> word_prototype(const std::string& word) {
    std::vector<float> feat(27 + 48, 0.0f);
    for (const std::string& wrd : color_words()) {
        if (word == wrd) {
            add_color_proto(feat, color_of(wrd), 1.0f);
            return feat;
        }
    }
    for (const std::string& wrd : shape_words()) {
        if (word != wrd) continue;
        // coarse 4x4 silhouette of the shape, channel-uniform
        const ShapeKind kind = shape_of(wrd);
        for (int ci = 0; ci < 3; ++ci) {
            for (int gy = 0; gy < 4; ++gy) {
                for (int gx = 0; gx < 4; ++gx) {
                    const float dx = (gx + 0.5f) - 2.0f;
                    const float dy = (gy + 0.5f) - 2.0f;
                    const bool in = inside_shape(kind, dx, dy, 1.6f);
                    feat[27 + (ci * 4 + gy) * 4 + gx] = (in ? 0.5f : 0.1f) * kPoolWeight;
                }
            }
        }
        return feat;
    }
    for (const std::string& wrd : texture_words()) {
        if (word != wrd) continue;
        const Palette p = texture_palette(texture_of(wrd));
        add_color_proto(feat, p.a, 0.5f);
        add_color_proto(feat, p.b, 0.5f);
        for (int ci = 0; ci < 3; ++ci) {
            for (int g = 0; g < 16; ++g) {
                feat[27 + ci * 16 + g] = 0.5f * (p.a[ci] + p.b[ci]) * kPoolWeight;
            }
        }
        return feat;
    }
    // function words, pan words, out-of-vocabulary: tiny deterministic vector
    SeededRng rng(SeededRng::stream_of(word.c_str()), SeededRng::stream_of("word-proto"));
    for (float& x : feat) x = rng.normal_float() * 0.03f;
    return feat;
}

void normalize(std::vector<float>& v) {
    double n = 0.0;
    for (float x : v) n += static_cast<double>(x) * x;
    if (n == 0.0) return;  // the empty prompt stays the zero vector
    const float inv = static_cast<float>(1.0 / std::sqrt(n));
    for (float& x : v) x *= inv;
}

}  // namespace

ToyEmbedder::ToyEmbedder() {
    SeededRng rng(0xC0FFEEu, SeededRng::stream_of("toy-embedder-projection"));
    projection_.resize(static_cast<std::size_t>(kWidth) * kFeatureDim);
    const float scale = 1.0f / std::sqrt(static_cast<float>(kFeatureDim));
    for (float& x : projection_) x = rng.normal_float() * scale;

    for (const auto& family : {color_words(), shape_words(), texture_words(), pan_words()}) {
        for (const std::string& wrd : family) vocab_.push_back(wrd);
    }
    for (const std::string& wrd : vocab_) {
        std::vector<float> e = project(word_prototype(wrd));
        normalize(e);
        vocab_embeddings_.push_back(std::move(e));
    }
}

std::vector<float> ToyEmbedder::project(const std::vector<float>& feature) const {
    std::vector<float> out(kWidth, 0.0f);
    for (int i = 0; i < kWidth; ++i) {
        double acc = 0.0;
        for (int j = 0; j < kFeatureDim; ++j) {
            acc += static_cast<double>(projection_[static_cast<std::size_t>(i) * kFeatureDim + j]) *
                   feature[j];
        }
        out[i] = static_cast<float>(acc);
    }
    return out;
}

std::vector<float> ToyEmbedder::embed_image(const Image& frame) const {
    std::vector<float> e = project(image_feature(frame));
    normalize(e);
    return e;
}

std::vector<float> ToyEmbedder::embed_text(const std::vector<std::string>& tokens) const {
    std::vector<float> feat(kFeatureDim, 0.0f);
    if (tokens.empty()) return std::vector<float>(kWidth, 0.0f);
    const float inv = 1.0f / static_cast<float>(tokens.size());
    for (const std::string& tok : tokens) {
        const std::vector<float> proto = word_prototype(tok);
        for (int j = 0; j < kFeatureDim; ++j) feat[j] += proto[j] * inv;
    }
    std::vector<float> e = project(feat);
    normalize(e);
    return e;
}

PromptEmbedding ToyEmbedder::embed_prompt(const std::vector<std::string>& tokens) const {
    if (tokens.empty()) return PromptEmbedding::empty_prompt(kWidth);
    PromptEmbedding out(static_cast<int>(tokens.size()), kWidth);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        std::vector<float> e = project(word_prototype(tokens[i]));
        normalize(e);
        for (int d = 0; d < kWidth; ++d) out.at(static_cast<int>(i), d) = e[d];
    }
    return out;
}

std::string ToyEmbedder::decode_token(const std::vector<float>& embedding) const {
    // vocabulary self-matches score exactly 1; anything below is noise
    double best = 0.9;
    std::string word;
    for (std::size_t i = 0; i < vocab_.size(); ++i) {
        const double c = cosine(embedding, vocab_embeddings_[i]);
        if (c > best) {
            best = c;
            word = vocab_[i];
        }
    }
    return word;
}

SceneSpec ToyEmbedder::decode_scene(const PromptEmbedding& text, int frames) const {
    std::vector<std::string> tokens;
    for (int l = 0; l < text.length; ++l) {
        std::vector<float> e(text.width);
        for (int d = 0; d < text.width; ++d) e[d] = text.at(l, d);
        const std::string word = decode_token(e);
        if (!word.empty()) tokens.push_back(word);
    }
    return scene_from_tokens(tokens, frames);
}

// ------------------------------------------------------------------ catalog

std::vector<PromptTriplet> builtin_catalog() {
    const auto& colors = color_words();
    const auto& shapes = shape_words();
    const auto& textures = texture_words();
    const std::vector<std::string> pans = {"left", "right", "up", "down"};

    auto motion_phrase = [](int i) -> std::string {
        const std::vector<std::string> pans_local = {"left", "right", "up", "down"};
        if (i % 3 != 2) return "static camera";
        return "camera panning " + pans_local[i % 4];
    };
    auto input_prompt = [&](const std::string& color, const std::string& shape,
                            const std::string& texture, int i) {
        return "a " + color + " " + shape + " on a " + texture + " background " + motion_phrase(i);
    };

    std::vector<PromptTriplet> catalog;
    for (int i = 0; i < 24; ++i) {  // color edits
        const std::string from = colors[i % colors.size()];
        const std::string to = colors[(i + 1 + i / 6) % colors.size()];
        if (from == to) continue;
        const std::string shape = shapes[i % shapes.size()];
        const std::string texture = textures[(i / 2) % textures.size()];
        PromptTriplet t;
        t.input_prompt = input_prompt(from, shape, texture, i);
        t.edit_prompt = "turn the " + shape + " " + to;
        t.edited_prompt = input_prompt(to, shape, texture, i);
        catalog.push_back(t);
    }
    for (int i = 0; i < 20; ++i) {  // shape edits (4 degenerate combos skipped)
        const std::string from = shapes[i % shapes.size()];
        const std::string to = shapes[(i + 1 + i / 4) % shapes.size()];
        if (from == to) continue;
        const std::string color = colors[i % colors.size()];
        const std::string texture = textures[(i / 3) % textures.size()];
        PromptTriplet t;
        t.input_prompt = input_prompt(color, from, texture, i);
        t.edit_prompt = "turn the " + from + " into a " + to;
        t.edited_prompt = input_prompt(color, to, texture, i);
        catalog.push_back(t);
    }
    for (int i = 0; i < 12; ++i) {  // background edits
        const std::string from = textures[i % textures.size()];
        const std::string to = textures[(i + 1 + i / 4) % textures.size()];
        if (from == to) continue;
        const std::string color = colors[(i + 2) % colors.size()];
        const std::string shape = shapes[(i + 1) % shapes.size()];
        PromptTriplet t;
        t.input_prompt = input_prompt(color, shape, from, i);
        t.edit_prompt = "change the background to " + to;
        t.edited_prompt = input_prompt(color, shape, to, i);
        catalog.push_back(t);
    }
    for (int i = 0; i < 8; ++i) {  // camera pan edits
        const std::string dir = pans[i % pans.size()];
        const std::string color = colors[(i + 4) % colors.size()];
        const std::string shape = shapes[(i + 2) % shapes.size()];
        const std::string texture = textures[(i + 1) % textures.size()];
        PromptTriplet t;
        t.input_prompt = "a " + color + " " + shape + " on a " + texture +
                         " background static camera";
        t.edit_prompt = "make the camera pan " + dir;
        t.edited_prompt = "a " + color + " " + shape + " on a " + texture +
                          " background camera panning " + dir;
        catalog.push_back(t);
    }
    return catalog;
}

}  // namespace videdit
