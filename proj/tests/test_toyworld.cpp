#include <cmath>
#include <set>
#include <stdexcept>

#include "doctest.h"
#include "videdit/toyworld.hpp"

using namespace videdit;

TEST_CASE("zero velocities give identical frames") {
    SceneSpec spec;
    spec.frames = 6;
    const VideoLatent v = render_scene(spec, 24, 24);
    for (int fi = 1; fi < v.f; ++fi) {
        for (int ci = 0; ci < 3; ++ci) {
            for (int y = 0; y < v.h; ++y) {
                for (int x = 0; x < v.w; ++x) {
                    REQUIRE(v.at(0, ci, fi, y, x) == v.at(0, ci, 0, y, x));
                }
            }
        }
    }
}

TEST_CASE("camera pan shifts frames exactly with wraparound") {
    SceneSpec spec;
    spec.texture = TextureKind::Checker;
    spec.pan_x = 1.0f;
    spec.pan_y = 0.0f;
    spec.frames = 5;
    const VideoLatent v = render_scene(spec, 32, 32);
    for (int k = 1; k < v.f; ++k) {
        for (int ci = 0; ci < 3; ++ci) {
            for (int y = 0; y < v.h; ++y) {
                for (int x = 0; x < v.w; ++x) {
                    const int sx = ((x - k) % v.w + v.w) % v.w;
                    REQUIRE(v.at(0, ci, k, y, x) == v.at(0, ci, 0, y, sx));
                }
            }
        }
    }
}

TEST_CASE("values stay in [0,1]") {
    SceneSpec spec;
    spec.shape = ShapeKind::Triangle;
    spec.texture = TextureKind::VStripes;
    spec.pan_y = 1.0f;
    spec.frames = 8;
    const VideoLatent v = render_scene(spec, 20, 20);
    for (float x : v.data) {
        REQUIRE(x >= 0.0f);
        REQUIRE(x <= 1.0f);
    }
}

TEST_CASE("object leaving the frame is rejected unless intentional") {
    SceneSpec spec;
    spec.frames = 16;
    spec.vx = 2.0f;  // walks out of a 24px frame
    CHECK_THROWS_AS(render_scene(spec, 24, 24), std::invalid_argument);
    spec.allow_exit = true;
    CHECK_NOTHROW(render_scene(spec, 24, 24));
}

TEST_CASE("tokenize lowercases and strips punctuation") {
    const auto tokens = tokenize("Turn the Square, blue!");
    REQUIRE(tokens.size() == 4);
    CHECK(tokens[0] == "turn");
    CHECK(tokens[3] == "blue");
}

TEST_CASE("embedder determinism and unit norms") {
    ToyEmbedder e;
    SceneSpec spec;
    spec.frames = 1;
    const VideoLatent v = render_scene(spec, 16, 16);
    const auto a = e.embed_image(frame_image(v, 0, 0));
    const auto b = e.embed_image(frame_image(v, 0, 0));
    REQUIRE(a == b);
    double n = 0.0;
    for (float x : a) n += static_cast<double>(x) * x;
    CHECK(std::abs(n - 1.0) < 1e-6);

    const auto t = e.embed_text(tokenize("a red square"));
    n = 0.0;
    for (float x : t) n += static_cast<double>(x) * x;
    CHECK(std::abs(n - 1.0) < 1e-6);

    const PromptEmbedding pe = e.embed_prompt(tokenize("a red square"));
    REQUIRE(pe.length == 3);
    for (int l = 0; l < pe.length; ++l) {
        double pn = 0.0;
        for (int d = 0; d < pe.width; ++d) pn += static_cast<double>(pe.at(l, d)) * pe.at(l, d);
        CHECK(std::abs(pn - 1.0) < 1e-6);
    }
}

TEST_CASE("empty prompt embeds as the zero vector") {
    ToyEmbedder e;
    const auto t = e.embed_text({});
    for (float x : t) CHECK(x == 0.0f);
    const PromptEmbedding pe = e.embed_prompt({});
    REQUIRE(pe.length == 1);
    for (float x : pe.data) CHECK(x == 0.0f);
}

TEST_CASE("color words beat the corpus-median unrelated cosine") {
    ToyEmbedder e;
    // corpus: one frame per color; unrelated pairs = frame vs other colors' words
    std::vector<std::vector<float>> frames;
    for (const std::string& color : color_words()) {
        SceneSpec spec = scene_from_tokens({"a", color, "square"}, 1);
        spec.radius = 0.3f;
        const VideoLatent v = render_scene(spec, 32, 32);
        frames.push_back(e.embed_image(frame_image(v, 0, 0)));
    }
    std::vector<double> unrelated;
    for (std::size_t i = 0; i < frames.size(); ++i) {
        for (std::size_t j = 0; j < frames.size(); ++j) {
            if (i == j) continue;
            unrelated.push_back(cosine(frames[i], e.embed_text({color_words()[j]})));
        }
    }
    std::sort(unrelated.begin(), unrelated.end());
    const double median = unrelated[unrelated.size() / 2];
    for (std::size_t i = 0; i < frames.size(); ++i) {
        const double matched = cosine(frames[i], e.embed_text({color_words()[i]}));
        INFO(color_words()[i], " matched ", matched, " median unrelated ", median);
        CHECK(matched > median);
    }
}

TEST_CASE("token decode inverts the vocabulary embedding") {
    ToyEmbedder e;
    for (const std::string& word : {"red", "blue", "circle", "checker", "left"}) {
        const PromptEmbedding pe = e.embed_prompt({word});
        std::vector<float> emb(pe.width);
        for (int d = 0; d < pe.width; ++d) emb[d] = pe.at(0, d);
        CHECK(e.decode_token(emb) == word);
    }
}

TEST_CASE("scene decode recovers attributes from a prompt embedding") {
    ToyEmbedder e;
    const auto tokens = tokenize("a green triangle on a checker background camera panning right");
    const SceneSpec direct = scene_from_tokens(tokens, 4);
    const SceneSpec decoded = e.decode_scene(e.embed_prompt(tokens), 4);
    CHECK(decoded.shape == direct.shape);
    CHECK(decoded.texture == direct.texture);
    CHECK(decoded.color == direct.color);
    CHECK(decoded.pan_x == direct.pan_x);
    CHECK(decoded.pan_y == direct.pan_y);
}

TEST_CASE("builtin catalog has ~60 well-formed triplets") {
    const auto catalog = builtin_catalog();
    CHECK(catalog.size() >= 55);
    CHECK(catalog.size() <= 65);
    std::set<std::string> inputs;
    for (const PromptTriplet& t : catalog) {
        REQUIRE(!t.input_prompt.empty());
        REQUIRE(!t.edit_prompt.empty());
        REQUIRE(!t.edited_prompt.empty());
        REQUIRE(t.edited_prompt != t.input_prompt);
        inputs.insert(t.input_prompt + "|" + t.edited_prompt);
    }
    CHECK(inputs.size() == catalog.size());  // no duplicate pairs
}
