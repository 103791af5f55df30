#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "videdit/denoiser.hpp"
#include "videdit/flow.hpp"
#include "videdit/tensor.hpp"

namespace videdit {

enum class ShapeKind { Square, Circle, Triangle, Cross };
enum class TextureKind { Plain, Checker, HStripes, VStripes };

/// Procedural scene: one colored object over a textured background with an
/// optional camera pan. Pan is a periodic content shift: frame k equals the
/// frame-0 world translated by k * (pan_x, pan_y) pixels with wraparound.
struct SceneSpec {
    ShapeKind shape = ShapeKind::Square;
    std::array<float, 3> color = {1.0f, 0.2f, 0.2f};
    TextureKind texture = TextureKind::Plain;
    float cx = 0.45f, cy = 0.5f;      // object center, fraction of (w, h)
    float radius = 0.22f;             // object half-size, fraction of min(h, w)
    float vx = 0.0f, vy = 0.0f;       // object velocity, px/frame
    float pan_x = 0.0f, pan_y = 0.0f; // camera pan, px/frame
    int frames = 16;
    bool allow_exit = false;

    /// Throws unless the object trajectory stays >= 1 px inside the frame
    /// for all timesteps (skipped when allow_exit is set).
    void validate(int h, int w) const;
};

/// Deterministic rasterization, values in [0, 1], channels = 3.
VideoLatent render_scene(const SceneSpec& spec, int h, int w);

// --------------------------------------------------------------- vocabulary

/// Lower-cased whitespace tokenization with punctuation stripped.
std::vector<std::string> tokenize(const std::string& prompt);

/// Token names recognized by the scene decoder, grouped by attribute family.
const std::vector<std::string>& color_words();
const std::vector<std::string>& shape_words();
const std::vector<std::string>& texture_words();
const std::vector<std::string>& pan_words();

std::array<float, 3> color_of(const std::string& word);
ShapeKind shape_of(const std::string& word);
TextureKind texture_of(const std::string& word);

/// Scene described by a token sequence: the last word of each attribute
/// family wins; anything unstated keeps the SceneSpec defaults.
SceneSpec scene_from_tokens(const std::vector<std::string>& tokens, int frames);

// ----------------------------------------------------------------- embedder

/// Deterministic stand-in for a learned joint image/text embedding space.
/// Images embed a coarse color histogram plus a 4x4 average-pool grid through
/// a fixed seeded projection; words embed hand-built prototype features of
/// the scenes they describe through the same projection. All outputs are
/// unit-norm (the empty prompt embeds as the zero vector).
class ToyEmbedder {
public:
    static constexpr int kWidth = 16;

    ToyEmbedder();

    std::vector<float> embed_image(const Image& frame) const;
    std::vector<float> embed_text(const std::vector<std::string>& tokens) const;

    /// Per-token unit-norm embedding sequence for denoiser conditioning.
    PromptEmbedding embed_prompt(const std::vector<std::string>& tokens) const;

    /// Nearest vocabulary word of a single token embedding (cosine argmax);
    /// empty when nothing clears 0.5.
    std::string decode_token(const std::vector<float>& embedding) const;

    /// Scene recovered from a conditioning embedding sequence (token-wise
    /// decode, then scene_from_tokens).
    SceneSpec decode_scene(const PromptEmbedding& text, int frames) const;

private:
    std::vector<float> project(const std::vector<float>& feature) const;
    static constexpr int kFeatureDim = 27 + 48;  // 3^3 histogram + 4x4x3 pool

    std::vector<float> projection_;  // kWidth x kFeatureDim
    std::vector<std::string> vocab_;
    std::vector<std::vector<float>> vocab_embeddings_;
};

// ------------------------------------------------------------------ catalog

struct PromptTriplet {
    std::string input_prompt;
    std::string edit_prompt;
    std::string edited_prompt;
};

/// Fixed ~60-triplet catalog of color / shape / background / pan edits over
/// the scene attribute vocabulary.
std::vector<PromptTriplet> builtin_catalog();

}  // namespace videdit
