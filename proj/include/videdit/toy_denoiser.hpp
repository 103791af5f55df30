#pragma once

#include <string>
#include <vector>

#include "videdit/denoiser.hpp"
#include "videdit/vten_io.hpp"

namespace videdit {

/// Architecture of the toy video denoiser. Small on purpose: two blocks of
/// conv + spatial self-attention + text cross-attention + temporal attention,
/// sized for minutes-scale CPU training.
struct ToyDenoiserConfig {
    int in_channels = 3;    // channels of z_t (and of the prediction)
    int cond_channels = 3;  // channels of the conditioning video
    int width = 16;         // feature channels
    int blocks = 2;
    int text_width = 16;    // prompt token embedding width
    int timesteps = 1000;   // rows of the timestep embedding table
    int time_features = 32; // sinusoidal feature width of that table
    int attn_grid = 8;      // spatial attention runs on an at-most grid x grid token map

    bool operator==(const ToyDenoiserConfig&) const = default;
};

/// Ordered named parameter/gradient container.
struct NamedTensors {
    std::vector<std::string> names;
    std::vector<NTensor> tensors;
    std::vector<bool> trainable;

    int find(const std::string& name) const;
    NTensor& get(const std::string& name);
    const NTensor& get(const std::string& name) const;
    void add(const std::string& name, std::vector<std::uint32_t> dims, bool trainable_flag = true);
    std::size_t count() const { return tensors.size(); }
};

struct ToyDenoiserParams {
    ToyDenoiserConfig cfg;
    NamedTensors t;

    /// Fresh parameter set. Temporal attention output projections (and the
    /// output conv) start at zero so the video model initially reproduces the
    /// per-frame model; pass zero_init_temporal=false to randomize them.
    static ToyDenoiserParams init(const ToyDenoiserConfig& cfg, std::uint64_t seed,
                                  bool zero_init_temporal = true);

    NamedTensors zero_grads() const;
};

enum class AttnKind { SpatialSelf, CrossText, Temporal };

/// Post-softmax probability matrices of one attention application:
/// `items` independent (rows x cols) row-stochastic matrices.
struct AttnRecord {
    int block = 0;
    AttnKind kind = AttnKind::SpatialSelf;
    int items = 0, rows = 0, cols = 0;
    std::vector<float> probs;
};

/// All attention records of one denoiser invocation, in layer order.
struct StepTrace {
    std::vector<AttnRecord> records;
};

/// Record/replay control for one forward call. When `inject` is set, each
/// attention application consumes the matching record: spatial self and
/// temporal matrices are substituted wholesale; cross-attention substitutes
/// per-token probability columns through `cross_column_map` (target column ->
/// source column, -1 keeps the computed column).
struct AttentionIO {
    StepTrace* record = nullptr;
    const StepTrace* inject = nullptr;
    bool inject_self = false;
    bool inject_temporal = false;
    bool inject_cross = false;
    const std::vector<int>* cross_column_map = nullptr;
    int cursor = 0;
};

struct AttnCache {
    int items = 0, rows = 0, cols = 0, dim = 0, kv_dim = 0, kv_items = 0, kv_ratio = 1;
    std::vector<float> xq, xkv, q, k, v, a, ctx;
};

struct BlockCache {
    FrameBatch conv_in;
    FrameBatch conv_out;   // before time modulation
    FrameBatch pre_act;    // after time modulation, input of silu
    FrameBatch act;        // silu output
    std::vector<float> self_tokens, cross_tokens;  // pooled token maps
    AttnCache self_attn, cross_attn, temp_attn;
    FrameBatch res_self;   // act + upsampled self-attention output
    FrameBatch res_cross;  // res_self + upsampled cross-attention output
    TokenSeq temporal_in;  // reshaped res_cross
};

struct ToyForwardCache {
    int b = 0, f = 0, h = 0, w = 0, t = 0;
    VideoLatent input_concat;
    PromptEmbedding text;
    std::vector<BlockCache> blocks;
    FrameBatch head_in;
};

/// One full forward pass eps = net(z_t, t, cond). Null conditions encode as
/// an all-zero video / the empty-prompt embedding. `io` enables attention
/// recording or injection; `cache` retains intermediates for the backward
/// pass (never combine injection with a training cache).
VideoLatent toy_denoiser_forward(const ToyDenoiserParams& p, const VideoLatent& z_t, int t,
                                 const ConditionPair& cond, AttentionIO* io = nullptr,
                                 ToyForwardCache* cache = nullptr);

/// Reverse-mode gradients of a scalar loss with upstream derivative `dout`
/// (same shape as the prediction); accumulates into `grads`.
void toy_denoiser_backward(const ToyDenoiserParams& p, const ToyForwardCache& cache,
                           const VideoLatent& dout, NamedTensors& grads);

/// Mean squared error between target noise and prediction, accumulated in
/// double (the training objective for one sample).
double noise_mse(const VideoLatent& eps, const VideoLatent& pred);

struct TrainSample {
    VideoLatent edited;  // the generation target z0
    VideoLatent input;   // conditioning video c_V
    PromptEmbedding text;
};

struct AdamConfig {
    float lr = 1e-3f;
    float beta1 = 0.9f;
    float beta2 = 0.999f;
    float eps = 1e-8f;
    float dropout_video = 0.05f;
    float dropout_text = 0.05f;
};

struct TrainState {
    ToyDenoiserParams params;
    NamedTensors m, v;
    long step = 0;

    static TrainState init(const ToyDenoiserConfig& cfg, std::uint64_t seed);
};

/// One optimization step of the noise-prediction objective: per sample draws
/// t ~ U[0,T), applies condition dropout, draws eps ~ N(0,I), diffuses the
/// target, and backpropagates mean ||eps - net(z_t,t,cond)||^2. Returns the
/// batch loss. lr = 0 leaves parameters bitwise unchanged.
double train_step(TrainState& state, const std::vector<TrainSample>& batch, SeededRng& rng,
                  const NoiseSchedule& s, const AdamConfig& opt);

/// Parameter bundle on disk: directory with manifest.json plus one .vten per
/// named tensor.
void save_params_bundle(const std::string& dir, const ToyDenoiserParams& p);
ToyDenoiserParams load_params_bundle(const std::string& dir);

/// Denoiser that can additionally record or replay attention matrices.
class TracedDenoiser : public Denoiser {
public:
    virtual VideoLatent predict_traced(const VideoLatent& z_t, int t, const ConditionPair& cond,
                                       AttentionIO& io) const = 0;
    VideoLatent predict(const VideoLatent& z_t, int t, const ConditionPair& cond) const override {
        AttentionIO io;
        return predict_traced(z_t, t, cond, io);
    }
};

class ToyDenoiser : public TracedDenoiser {
public:
    explicit ToyDenoiser(ToyDenoiserParams params) : params_(std::move(params)) {}

    VideoLatent predict_traced(const VideoLatent& z_t, int t, const ConditionPair& cond,
                               AttentionIO& io) const override {
        return toy_denoiser_forward(params_, z_t, t, cond, &io);
    }

    const ToyDenoiserParams& params() const { return params_; }

private:
    ToyDenoiserParams params_;
};

}  // namespace videdit
