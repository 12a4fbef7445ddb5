#pragma once

#include <string>
#include <vector>

#include "tamix/heads.hpp"
#include "tamix/losses.hpp"
#include "tamix/tam.hpp"

namespace tamix {

struct ModelDims {
    enum class InputKind { images, features };
    InputKind input_kind = InputKind::images;
    std::size_t height = 32, width = 32; // image mode
    std::size_t feature_dim = 0;         // feature mode
    std::size_t clip_len = 16;

    void validate() const {
        if (clip_len == 0) throw config_error("clip length must be >= 1");
        if (input_kind == InputKind::images) {
            if (height % 32 != 0 || width % 32 != 0)
                throw config_error("input height/width must be divisible by 32");
        } else if (feature_dim == 0) {
            throw config_error("feature_dim must be positive in feature mode");
        }
    }
};

//! One forward batch. Images arrive flattened to (B*T, 3, H, W) and already
//! normalized; feature sequences arrive as (B, T, feature_dim).
template <typename T>
struct ModelInput {
    Tensor<T> images;
    Tensor<T> features;
    std::size_t batch = 0, clip_len = 0;
    std::vector<std::uint8_t> frame_valid; // B*T flags; empty = all valid
};

template <typename T>
struct ParamGroup {
    std::string name;
    nn::ParamRefs<T> params;
};

//! Backbone + temporal aggregation + task heads as one trainable unit.
template <typename T>
class Model {
public:
    struct State {
        typename ToyBackbone<T>::State backbone;
        typename TamModule<T>::State tam;
        typename Heads<T>::State heads;
        AggregatedFeatures<T> agg;
    };

    void setup(const ModelDims& dims, const BackboneConfig& bb_cfg,
               const MixerConfig& mixer_cfg, std::uint64_t seed) {
        dims.validate();
        bb_cfg.validate();
        mixer_cfg.validate();
        dims_ = dims;
        bb_cfg_ = bb_cfg;
        if (dims.input_kind == ModelDims::InputKind::images) {
            if (bb_cfg.kind == BackboneKind::toy) backbone_.setup(bb_cfg, seed);
            tam_.setup(mixer_cfg, dims.height, dims.width, bb_cfg.channels,
                       dims.clip_len, seed);
        } else {
            tam_.setup_features(mixer_cfg, dims.feature_dim, dims.clip_len, seed);
        }
        heads_.setup(tam_.fused_dim(), seed);
    }

    void set_external_backbone(ExternalBackbone<T> ext) { external_ = std::move(ext); }

    const ModelDims& dims() const { return dims_; }
    const BackboneConfig& backbone_config() const { return bb_cfg_; }
    ToyBackbone<T>& backbone() { return backbone_; }
    TamModule<T>& tam() { return tam_; }
    Heads<T>& heads() { return heads_; }

    AggregatedFeatures<T> aggregate(const ModelInput<T>& in, State* st) const {
        validate_input(in);
        FeaturePyramid<T> pyr = make_pyramid(in, st);
        return tam_.forward(pyr, in.batch, in.clip_len, in.frame_valid,
                            st ? &st->tam : nullptr);
    }

    TaskOutput<T> forward(const ModelInput<T>& in, State* st) const {
        AggregatedFeatures<T> agg = aggregate(in, st);
        TaskOutput<T> out = heads_.forward(agg, st ? &st->heads : nullptr);
        if (st) st->agg = std::move(agg);
        return out;
    }

    void backward(const TaskOutputGrad<T>& g, const State& st) {
        auto [g_frame, g_seq] = heads_.backward(g, st.heads);
        FeaturePyramid<T> pyr_grads = tam_.backward(g_frame, g_seq, st.tam);
        if (dims_.input_kind == ModelDims::InputKind::images &&
            bb_cfg_.kind == BackboneKind::toy)
            backbone_.backward(pyr_grads, st.backbone);
        // external and feature paths stop here: no upstream trainables
    }

    nn::ParamRefs<T> params() {
        nn::ParamRefs<T> out;
        if (dims_.input_kind == ModelDims::InputKind::images &&
            bb_cfg_.kind == BackboneKind::toy) {
            auto bb = backbone_.params();
            out.insert(out.end(), bb.begin(), bb.end());
        }
        tam_.collect(out);
        heads_.collect(out);
        return out;
    }

    void zero_grad() {
        for (auto* p : params()) p->zero_grad();
    }

    std::size_t param_count() {
        std::size_t n = 0;
        for (auto* p : params()) n += p->value.size();
        return n;
    }

    //! Logical parameter groups for gradient checking and reporting: one per
    //! backbone stage, per (level, mixing axis), per level projection, per head.
    std::vector<ParamGroup<T>> param_groups() {
        std::vector<ParamGroup<T>> groups;
        auto find = [&](const std::string& key) -> ParamGroup<T>& {
            for (auto& g : groups)
                if (g.name == key) return g;
            groups.push_back({key, {}});
            return groups.back();
        };
        for (auto* p : params()) find(group_key(p->name)).params.push_back(p);
        return groups;
    }

    static std::string group_key(const std::string& param_name) {
        std::vector<std::string> tok;
        std::size_t start = 0;
        while (start <= param_name.size()) {
            const std::size_t dot = param_name.find('.', start);
            if (dot == std::string::npos) {
                tok.push_back(param_name.substr(start));
                break;
            }
            tok.push_back(param_name.substr(start, dot - start));
            start = dot + 1;
        }
        if (tok.size() >= 4 && tok[0] == "tam" && tok[2].rfind("blk", 0) == 0)
            return tok[0] + "." + tok[1] + "." + tok[3];
        if (tok.size() >= 3 && tok[0] == "tam") return tok[0] + "." + tok[1] + "." + tok[2];
        if (tok.size() >= 2) return tok[0] + "." + tok[1];
        return param_name;
    }

private:
    void validate_input(const ModelInput<T>& in) const {
        if (in.batch == 0) throw compute_error("empty batch");
        if (in.clip_len != dims_.clip_len)
            throw compute_error("batch clip length " + std::to_string(in.clip_len) +
                                " != configured " + std::to_string(dims_.clip_len));
        if (!in.frame_valid.empty() && in.frame_valid.size() != in.batch * in.clip_len)
            throw compute_error("frame_valid has wrong length");
        if (dims_.input_kind == ModelDims::InputKind::images) {
            const Shape& s = in.images.shape();
            if (s.size() != 4 || s[0] != in.batch * in.clip_len || s[1] != 3 ||
                s[2] != dims_.height || s[3] != dims_.width)
                throw compute_error("image batch " + shape_str(s) +
                                    " does not match configured input size");
        } else {
            const Shape& s = in.features.shape();
            if (s.size() != 3 || s[0] != in.batch || s[1] != in.clip_len ||
                s[2] != dims_.feature_dim)
                throw compute_error("feature batch " + shape_str(s) +
                                    " does not match configured input size");
        }
    }

    FeaturePyramid<T> make_pyramid(const ModelInput<T>& in, State* st) const {
        if (dims_.input_kind == ModelDims::InputKind::features) {
            FeaturePyramid<T> pyr;
            Tensor<T> feats = in.features;
            feats.reshape({in.batch * in.clip_len, dims_.feature_dim, 1, 1});
            pyr.level(tam_.levels().front().level()) = std::move(feats);
            return pyr;
        }
        if (bb_cfg_.kind == BackboneKind::external_adapter) {
            if (!external_.valid())
                throw config_error("external backbone requested but none installed");
            return external_.forward(in.images);
        }
        return backbone_.forward(in.images, st ? &st->backbone : nullptr);
    }

    ModelDims dims_;
    BackboneConfig bb_cfg_;
    ToyBackbone<T> backbone_;
    ExternalBackbone<T> external_;
    TamModule<T> tam_;
    Heads<T> heads_;
};

} // namespace tamix
