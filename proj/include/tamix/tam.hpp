#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "tamix/backbone.hpp"
#include "tamix/nn/layernorm.hpp"
#include "tamix/nn/linear.hpp"

namespace tamix {

enum class MixAxis { temporal, spatial, channel };

inline const char* mix_axis_name(MixAxis a) {
    switch (a) {
        case MixAxis::temporal: return "temporal";
        case MixAxis::spatial: return "spatial";
        case MixAxis::channel: return "channel";
    }
    return "?";
}

inline MixAxis parse_mix_axis(const std::string& s) {
    if (s == "temporal") return MixAxis::temporal;
    if (s == "spatial") return MixAxis::spatial;
    if (s == "channel") return MixAxis::channel;
    throw config_error("unknown mixing axis '" + s + "'");
}

//! Hyperparameters of the temporal aggregation module: which pyramid levels
//! get a mixer stack, embedding width, per-level depth, MLP expansions and
//! the sublayer order inside each block.
struct MixerConfig {
    std::vector<int> levels{1, 2, 3};
    std::size_t embed_dim = 64;
    std::vector<std::size_t> depths{2, 2, 2}; // parallel to levels
    double temporal_expansion = 2.0;
    double token_expansion = 2.0;
    double channel_expansion = 2.0;
    std::vector<MixAxis> mixing_order{MixAxis::temporal, MixAxis::spatial,
                                      MixAxis::channel};

    void validate() const {
        if (levels.empty()) throw config_error("mixer.levels must be non-empty");
        for (std::size_t i = 0; i < levels.size(); ++i) {
            if (levels[i] < 1 || levels[i] > 3)
                throw config_error("mixer.levels entries must be in {1,2,3}");
            for (std::size_t j = i + 1; j < levels.size(); ++j)
                if (levels[i] == levels[j])
                    throw config_error("mixer.levels entries must be unique");
        }
        if (embed_dim == 0) throw config_error("mixer.embed_dim must be positive");
        if (depths.size() != levels.size())
            throw config_error("mixer.depths must have one entry per level");
        for (std::size_t d : depths)
            if (d == 0) throw config_error("mixer depth must be at least 1");
        if (temporal_expansion < 1 || token_expansion < 1 || channel_expansion < 1)
            throw config_error("mixer expansions must be >= 1");
        if (mixing_order.empty())
            throw config_error("mixer.mixing_order must be non-empty");
        for (std::size_t i = 0; i < mixing_order.size(); ++i)
            for (std::size_t j = i + 1; j < mixing_order.size(); ++j)
                if (mixing_order[i] == mixing_order[j])
                    throw config_error("mixer.mixing_order entries must be unique");
    }

    double expansion_for(MixAxis a) const {
        switch (a) {
            case MixAxis::temporal: return temporal_expansion;
            case MixAxis::spatial: return token_expansion;
            case MixAxis::channel: return channel_expansion;
        }
        return 1.0;
    }

    std::size_t depth_for_level(int level) const {
        for (std::size_t i = 0; i < levels.size(); ++i)
            if (levels[i] == level) return depths[i];
        throw config_error("level " + std::to_string(level) + " not configured");
    }
};

//! Two-layer MLP acting along one axis of a (B, T, S, D) token grid, with the
//! weights shared across every other index.
template <typename T>
struct AxisMlp {
    MixAxis axis = MixAxis::channel;
    std::size_t len = 0, hidden = 0;
    nn::Linear<T> fc1, fc2;
    nn::Gelu<T> act;

    struct State {
        typename nn::Linear<T>::State fc1_state, fc2_state;
        typename nn::Gelu<T>::State act_state;
        Shape grid_shape;
    };

    void setup(const std::string& name, MixAxis a, std::size_t axis_len,
               double expansion, std::uint64_t seed) {
        axis = a;
        len = axis_len;
        hidden = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::llround(expansion * static_cast<double>(axis_len))));
        fc1.setup(name + ".fc1", len, hidden, seed);
        fc2.setup(name + ".fc2", hidden, len, seed);
    }

    void collect(nn::ParamRefs<T>& into) {
        fc1.collect(into);
        fc2.collect(into);
    }

    static std::array<int, 4> perm_for(MixAxis a) {
        switch (a) {
            case MixAxis::temporal: return {0, 2, 3, 1}; // (B,S,D,T)
            case MixAxis::spatial: return {0, 1, 3, 2};  // (B,T,D,S)
            case MixAxis::channel: return {0, 1, 2, 3};
        }
        return {0, 1, 2, 3};
    }

    Tensor<T> forward(const Tensor<T>& grid, State* st) const {
        const auto perm = perm_for(axis);
        Tensor<T> v = axis == MixAxis::channel ? grid : permute4(grid, perm);
        if (st) st->grid_shape = grid.shape();
        Tensor<T> h = fc1.forward(v, st ? &st->fc1_state : nullptr);
        h = act.forward(h, st ? &st->act_state : nullptr);
        Tensor<T> y = fc2.forward(h, st ? &st->fc2_state : nullptr);
        if (axis != MixAxis::channel) y = unpermute4(y, perm, st ? st->grid_shape : grid.shape());
        return y;
    }

    Tensor<T> backward(const Tensor<T>& gy, const State& st) {
        const auto perm = perm_for(axis);
        Tensor<T> g = axis == MixAxis::channel ? gy : permute4(gy, perm);
        g = fc2.backward(g, st.fc2_state);
        g = act.backward(g, st.act_state);
        g = fc1.backward(g, st.fc1_state);
        if (axis != MixAxis::channel) g = unpermute4(g, perm, st.grid_shape);
        return g;
    }
};

//! One residual mixing sublayer: x + MLP_axis(norm(x)).
template <typename T>
struct MixerSublayer {
    nn::LayerNorm<T> norm;
    AxisMlp<T> mlp;

    struct State {
        typename nn::LayerNorm<T>::State norm_state;
        typename AxisMlp<T>::State mlp_state;
    };

    void setup(const std::string& name, MixAxis axis, std::size_t axis_len,
               std::size_t embed_dim, double expansion, std::uint64_t seed) {
        norm.setup(name + ".norm", embed_dim);
        mlp.setup(name, axis, axis_len, expansion, seed);
    }

    void collect(nn::ParamRefs<T>& into) {
        norm.collect(into);
        mlp.collect(into);
    }

    Tensor<T> forward(const Tensor<T>& x, State* st) const {
        Tensor<T> u = norm.forward(x, st ? &st->norm_state : nullptr);
        Tensor<T> y = mlp.forward(u, st ? &st->mlp_state : nullptr);
        y += x;
        return y;
    }

    Tensor<T> backward(const Tensor<T>& gy, const State& st) {
        Tensor<T> g = mlp.backward(gy, st.mlp_state);
        g = norm.backward(g, st.norm_state);
        g += gy; // residual path
        return g;
    }
};

//! One mixer block: the configured sequence of axis sublayers.
template <typename T>
struct MixerBlock {
    std::vector<MixerSublayer<T>> subs;

    struct State {
        std::vector<typename MixerSublayer<T>::State> subs;
    };

    void setup(const std::string& name, const MixerConfig& cfg, std::size_t t_len,
               std::size_t s_len, std::uint64_t seed) {
        subs.clear();
        for (MixAxis a : cfg.mixing_order) {
            const std::size_t axis_len = a == MixAxis::temporal ? t_len
                                         : a == MixAxis::spatial ? s_len
                                                                 : cfg.embed_dim;
            MixerSublayer<T> sub;
            sub.setup(name + "." + mix_axis_name(a), a, axis_len, cfg.embed_dim,
                      cfg.expansion_for(a), seed);
            subs.push_back(std::move(sub));
        }
    }

    void collect(nn::ParamRefs<T>& into) {
        for (auto& s : subs) s.collect(into);
    }

    Tensor<T> forward(const Tensor<T>& x, State* st) const {
        if (st) st->subs.resize(subs.size());
        Tensor<T> y = x;
        for (std::size_t i = 0; i < subs.size(); ++i)
            y = subs[i].forward(y, st ? &st->subs[i] : nullptr);
        return y;
    }

    Tensor<T> backward(const Tensor<T>& gy, const State& st) {
        Tensor<T> g = gy;
        for (std::size_t i = subs.size(); i-- > 0;) g = subs[i].backward(g, st.subs[i]);
        return g;
    }
};

//! Zero the token rows of padded frames so downstream mixing cannot observe
//! padding content. `valid` holds B*T flags; empty means all valid.
template <typename T>
void mask_padded_tokens(Tensor<T>& grid, const std::vector<std::uint8_t>& valid) {
    if (valid.empty()) return;
    const std::size_t b = grid.dim(0), t = grid.dim(1);
    const std::size_t row = grid.dim(2) * grid.dim(3);
    if (valid.size() != b * t)
        throw compute_error("frame validity mask has wrong length");
    for (std::size_t i = 0; i < b * t; ++i)
        if (!valid[i]) std::fill_n(grid.data() + i * row, row, T(0));
}

//! Mixer stack for one pyramid level: token projection, N blocks, spatial
//! mean-pool down to a per-frame embedding.
template <typename T>
class LevelMixer {
public:
    struct State {
        typename nn::Linear<T>::State proj_state;
        std::vector<typename MixerBlock<T>::State> blocks;
        Shape feature_shape; // (N, C, Hl, Wl)
        std::size_t b = 0, t = 0;
        std::vector<std::uint8_t> valid;
    };

    void setup(int level, const MixerConfig& cfg, std::size_t in_ch,
               std::size_t grid_h, std::size_t grid_w, std::size_t t_len,
               std::uint64_t seed) {
        level_ = level;
        in_ch_ = in_ch;
        grid_h_ = grid_h;
        grid_w_ = grid_w;
        t_len_ = t_len;
        embed_dim_ = cfg.embed_dim;
        const std::string name = "tam.level" + std::to_string(level);
        proj_.setup(name + ".proj", in_ch, cfg.embed_dim, seed);
        blocks_.clear();
        const std::size_t depth = cfg.depth_for_level(level);
        for (std::size_t i = 0; i < depth; ++i) {
            MixerBlock<T> blk;
            blk.setup(name + ".blk" + std::to_string(i), cfg, t_len,
                      grid_h * grid_w, seed);
            blocks_.push_back(std::move(blk));
        }
    }

    std::size_t tokens() const { return grid_h_ * grid_w_; }
    std::size_t embed_dim() const { return embed_dim_; }
    std::size_t input_channels() const { return in_ch_; }
    std::size_t clip_len() const { return t_len_; }
    std::size_t depth() const { return blocks_.size(); }
    int level() const { return level_; }

    //! Row-major flatten of the spatial grid into S tokens, then the learned
    //! projection into the embedding space: (N,C,Hl,Wl) -> (B,T,S,D).
    Tensor<T> tokenize(const Tensor<T>& feats, std::size_t b, std::size_t t,
                       State* st) const {
        if (feats.rank() != 4 || feats.dim(1) != in_ch_ || feats.dim(2) != grid_h_ ||
            feats.dim(3) != grid_w_)
            throw compute_error("level " + std::to_string(level_) +
                                " features " + shape_str(feats.shape()) +
                                " do not match grid (" + std::to_string(in_ch_) + "," +
                                std::to_string(grid_h_) + "," + std::to_string(grid_w_) + ")");
        if (feats.dim(0) != b * t)
            throw compute_error("tokenize: N != B*T");
        const std::size_t n = feats.dim(0), s = tokens();
        Tensor<T> flat = feats;
        flat.reshape({n, in_ch_, s, 1});
        Tensor<T> by_token = permute4(flat, {0, 2, 1, 3}); // (N,S,C,1)
        by_token.reshape({n * s, in_ch_});
        if (st) st->feature_shape = feats.shape();
        Tensor<T> proj = proj_.forward(by_token, st ? &st->proj_state : nullptr);
        proj.reshape({b, t, s, embed_dim_});
        return proj;
    }

    Tensor<T> forward(const Tensor<T>& feats, std::size_t b, std::size_t t,
                      const std::vector<std::uint8_t>& valid, State* st) const {
        Tensor<T> grid = tokenize(feats, b, t, st);
        mask_padded_tokens(grid, valid);
        if (st) {
            st->b = b;
            st->t = t;
            st->valid = valid;
            st->blocks.resize(blocks_.size());
        }
        for (std::size_t i = 0; i < blocks_.size(); ++i)
            grid = blocks_[i].forward(grid, st ? &st->blocks[i] : nullptr);
        if (!grid.all_finite())
            throw compute_error("non-finite activations in level " +
                                std::to_string(level_) + " mixer");
        return pool_tokens(grid);
    }

    //! gy: (B,T,D) gradient of the pooled embedding; returns gradient w.r.t.
    //! the level's input feature maps.
    Tensor<T> backward(const Tensor<T>& gy, const State& st) {
        const std::size_t b = st.b, t = st.t, s = tokens();
        Tensor<T> g({b, t, s, embed_dim_});
        const T scale = T(1) / static_cast<T>(s);
        for (std::size_t bt = 0; bt < b * t; ++bt)
            for (std::size_t si = 0; si < s; ++si)
                for (std::size_t di = 0; di < embed_dim_; ++di)
                    g[(bt * s + si) * embed_dim_ + di] =
                        gy[bt * embed_dim_ + di] * scale;
        for (std::size_t i = blocks_.size(); i-- > 0;)
            g = blocks_[i].backward(g, st.blocks[i]);
        mask_padded_tokens(g, st.valid);
        g.reshape({b * t * s, embed_dim_});
        Tensor<T> gtok = proj_.backward(g, st.proj_state);
        gtok.reshape({b * t, s, in_ch_, 1});
        Tensor<T> gfeat = permute4(gtok, {0, 2, 1, 3}); // (N,C,S,1)
        gfeat.reshape(st.feature_shape);
        return gfeat;
    }

    Tensor<T> pool_tokens(const Tensor<T>& grid) const {
        const std::size_t b = grid.dim(0), t = grid.dim(1), s = grid.dim(2),
                          d = grid.dim(3);
        Tensor<T> out({b, t, d});
        const T scale = T(1) / static_cast<T>(s);
        for (std::size_t bt = 0; bt < b * t; ++bt)
            for (std::size_t si = 0; si < s; ++si) {
                const T* row = grid.data() + (bt * s + si) * d;
                T* o = out.data() + bt * d;
                for (std::size_t di = 0; di < d; ++di) o[di] += row[di] * scale;
            }
        return out;
    }

    void collect(nn::ParamRefs<T>& into) {
        proj_.collect(into);
        for (auto& blk : blocks_) blk.collect(into);
    }

    nn::Linear<T>& projection() { return proj_; }
    std::vector<MixerBlock<T>>& blocks() { return blocks_; }

private:
    int level_ = 0;
    std::size_t in_ch_ = 0, grid_h_ = 0, grid_w_ = 0, t_len_ = 0, embed_dim_ = 0;
    nn::Linear<T> proj_;
    std::vector<MixerBlock<T>> blocks_;
};

//! Fused multi-level representation: per-frame concat of the level embeddings
//! and its temporal mean over valid frames.
template <typename T>
struct AggregatedFeatures {
    Tensor<T> per_frame;    // (B, T, D * levels)
    Tensor<T> per_sequence; // (B, D * levels)
};

//! The full temporal aggregation module: one LevelMixer per configured level,
//! spatial-pool-then-concat fusion and the temporal mean for sequence tasks.
template <typename T>
class TamModule {
public:
    struct State {
        std::vector<typename LevelMixer<T>::State> levels;
        std::vector<std::uint8_t> valid;
        std::vector<std::size_t> valid_counts;  // per clip
        Shape pyramid_shapes[3];
        std::size_t b = 0, t = 0;
    };

    //! Image-path construction: grids derive from the input resolution.
    void setup(const MixerConfig& cfg, std::size_t input_h, std::size_t input_w,
               const std::array<std::size_t, 3>& level_channels, std::size_t t_len,
               std::uint64_t seed) {
        cfg.validate();
        if (input_h % 32 != 0 || input_w % 32 != 0)
            throw config_error("input height/width must be divisible by 32");
        cfg_ = cfg;
        levels_.clear();
        for (int lvl : cfg.levels) {
            const std::size_t div = divisor_for(lvl);
            LevelMixer<T> mixer;
            mixer.setup(lvl, cfg, level_channels[static_cast<std::size_t>(lvl - 1)],
                        input_h / div, input_w / div, t_len, seed);
            levels_.push_back(std::move(mixer));
        }
    }

    //! Feature-path construction: one level over a 1x1 pseudo grid; the token
    //! projection doubles as the feature adapter.
    void setup_features(const MixerConfig& cfg, std::size_t feature_dim,
                        std::size_t t_len, std::uint64_t seed) {
        cfg.validate();
        cfg_ = cfg;
        levels_.clear();
        MixerConfig single = cfg;
        single.levels = {cfg.levels.front()};
        single.depths = {cfg.depths.front()};
        LevelMixer<T> mixer;
        mixer.setup(single.levels.front(), single, feature_dim, 1, 1, t_len, seed);
        levels_.push_back(std::move(mixer));
    }

    static std::size_t divisor_for(int level) {
        return level == 1 ? 8 : level == 2 ? 16 : 32;
    }

    const MixerConfig& config() const { return cfg_; }
    std::size_t fused_dim() const { return cfg_.embed_dim * levels_.size(); }
    std::vector<LevelMixer<T>>& levels() { return levels_; }
    const std::vector<LevelMixer<T>>& levels() const { return levels_; }

    AggregatedFeatures<T> forward(const FeaturePyramid<T>& pyr, std::size_t b,
                                  std::size_t t,
                                  const std::vector<std::uint8_t>& valid,
                                  State* st) const {
        if (st) {
            st->levels.resize(levels_.size());
            st->valid = valid;
            st->b = b;
            st->t = t;
            for (int l = 1; l <= 3; ++l)
                st->pyramid_shapes[l - 1] = pyr.level(l).empty() ? Shape{} : pyr.level(l).shape();
        }
        const std::size_t d = cfg_.embed_dim;
        AggregatedFeatures<T> agg;
        agg.per_frame = Tensor<T>({b, t, fused_dim()});
        for (std::size_t li = 0; li < levels_.size(); ++li) {
            const Tensor<T>& feats = pyr.level(levels_[li].level());
            if (feats.empty())
                throw compute_error("pyramid level " +
                                    std::to_string(levels_[li].level()) +
                                    " missing from input");
            Tensor<T> emb =
                levels_[li].forward(feats, b, t, valid, st ? &st->levels[li] : nullptr);
            for (std::size_t bt = 0; bt < b * t; ++bt)
                std::copy_n(emb.data() + bt * d, d,
                            agg.per_frame.data() + bt * fused_dim() + li * d);
        }
        agg.per_sequence = temporal_mean(agg.per_frame, valid,
                                         st ? &st->valid_counts : nullptr);
        return agg;
    }

    FeaturePyramid<T> backward(const Tensor<T>& g_frame, const Tensor<T>& g_seq,
                               const State& st) {
        const std::size_t b = st.b, t = st.t, d = cfg_.embed_dim;
        // fold the sequence-mean gradient back into the frame gradient
        Tensor<T> gf = g_frame;
        for (std::size_t bi = 0; bi < b; ++bi) {
            const std::size_t nv = st.valid_counts[bi];
            if (nv == 0) continue;
            const T scale = T(1) / static_cast<T>(nv);
            for (std::size_t ti = 0; ti < t; ++ti) {
                if (!st.valid.empty() && !st.valid[bi * t + ti]) continue;
                T* dst = gf.data() + (bi * t + ti) * fused_dim();
                const T* src = g_seq.data() + bi * fused_dim();
                for (std::size_t k = 0; k < fused_dim(); ++k) dst[k] += src[k] * scale;
            }
        }
        FeaturePyramid<T> grads;
        for (int l = 1; l <= 3; ++l)
            if (!st.pyramid_shapes[l - 1].empty())
                grads.level(l) = Tensor<T>(st.pyramid_shapes[l - 1]);
        for (std::size_t li = 0; li < levels_.size(); ++li) {
            Tensor<T> g_emb({b, t, d});
            for (std::size_t bt = 0; bt < b * t; ++bt)
                std::copy_n(gf.data() + bt * fused_dim() + li * d, d,
                            g_emb.data() + bt * d);
            Tensor<T> g_level = levels_[li].backward(g_emb, st.levels[li]);
            grads.level(levels_[li].level()) += g_level;
        }
        return grads;
    }

    //! Mean over valid frames; rows with no valid frame yield zeros.
    Tensor<T> temporal_mean(const Tensor<T>& per_frame,
                            const std::vector<std::uint8_t>& valid,
                            std::vector<std::size_t>* counts_out) const {
        const std::size_t b = per_frame.dim(0), t = per_frame.dim(1),
                          f = per_frame.dim(2);
        Tensor<T> out({b, f});
        if (counts_out) counts_out->assign(b, 0);
        for (std::size_t bi = 0; bi < b; ++bi) {
            std::size_t nv = 0;
            for (std::size_t ti = 0; ti < t; ++ti) {
                if (!valid.empty() && !valid[bi * t + ti]) continue;
                ++nv;
                const T* src = per_frame.data() + (bi * t + ti) * f;
                T* dst = out.data() + bi * f;
                for (std::size_t k = 0; k < f; ++k) dst[k] += src[k];
            }
            if (nv > 0) {
                const T scale = T(1) / static_cast<T>(nv);
                T* dst = out.data() + bi * f;
                for (std::size_t k = 0; k < f; ++k) dst[k] *= scale;
            }
            if (counts_out) (*counts_out)[bi] = nv;
        }
        return out;
    }

    void collect(nn::ParamRefs<T>& into) {
        for (auto& lvl : levels_) lvl.collect(into);
    }

private:
    MixerConfig cfg_;
    std::vector<LevelMixer<T>> levels_;
};

} // namespace tamix
