#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "tamix/core/tensor.hpp"
#include "tamix/nn/activation.hpp"
#include "tamix/nn/conv2d.hpp"

namespace tamix {

//! Multi-resolution feature maps. Each level holds (N, C_l, H_l, W_l) with
//! grids H/8, H/16 and H/32 of the input frames.
template <typename T>
struct FeaturePyramid {
    Tensor<T> level1, level2, level3;

    const Tensor<T>& level(int idx) const {
        switch (idx) {
            case 1: return level1;
            case 2: return level2;
            case 3: return level3;
        }
        throw compute_error("pyramid level out of range: " + std::to_string(idx));
    }
    Tensor<T>& level(int idx) {
        return const_cast<Tensor<T>&>(static_cast<const FeaturePyramid&>(*this).level(idx));
    }
};

enum class BackboneKind { toy, external_adapter };

struct BackboneConfig {
    BackboneKind kind = BackboneKind::toy;
    std::array<std::size_t, 2> stem_channels{16, 24};
    std::array<std::size_t, 3> channels{32, 64, 96}; // pyramid widths C1..C3
    std::size_t trainable_suffix = kStageCount;
    std::array<double, 3> norm_mean{0.5, 0.5, 0.5};
    std::array<double, 3> norm_std{0.5, 0.5, 0.5};

    static constexpr std::size_t kStageCount = 5;

    void validate() const {
        if (trainable_suffix > kStageCount)
            throw config_error("backbone.trainable_suffix must be in [0, " +
                               std::to_string(kStageCount) + "]");
        for (std::size_t c : stem_channels)
            if (c == 0) throw config_error("backbone.stem_channels must be positive");
        for (std::size_t c : channels)
            if (c == 0) throw config_error("backbone.channels must be positive");
        for (double s : norm_std)
            if (s <= 0) throw config_error("backbone.norm_std must be positive");
    }

    std::size_t stage_out_channels(std::size_t stage) const {
        // stage in [0,5): two stem stages then the three pyramid taps
        return stage < 2 ? stem_channels[stage] : channels[stage - 2];
    }
};

struct FreezeReport {
    std::size_t frozen_params = 0;
    std::size_t trainable_params = 0;
    std::vector<std::pair<std::string, bool>> stages; // (name, frozen)
    std::size_t total() const { return frozen_params + trainable_params; }
};

inline void check_frame_input(const Shape& s) {
    if (s.size() != 4 || s[1] != 3)
        throw compute_error("frame input must be (N,3,H,W), got " + shape_str(s));
    if (s[2] % 32 != 0 || s[3] % 32 != 0)
        throw compute_error("frame height/width must be divisible by 32, got " +
                            shape_str(s));
    if (s[0] == 0) throw compute_error("frame input must contain at least one frame");
}

//! Reference backbone: five stride-2 3x3 conv stages (H -> H/2 ... H/32) with
//! taps after stages 3, 4 and 5. Small enough to train on a CPU while honoring
//! the pyramid contract; a pretrained network can replace it through
//! ExternalBackbone.
template <typename T>
class ToyBackbone {
public:
    struct State {
        std::array<typename nn::Conv2d<T>::State, BackboneConfig::kStageCount> conv;
        std::array<typename nn::Gelu<T>::State, BackboneConfig::kStageCount> act;
    };

    void setup(const BackboneConfig& cfg, std::uint64_t seed) {
        cfg.validate();
        cfg_ = cfg;
        std::size_t in_ch = 3;
        for (std::size_t i = 0; i < BackboneConfig::kStageCount; ++i) {
            const std::size_t out_ch = cfg.stage_out_channels(i);
            stages_[i].setup("backbone.stage" + std::to_string(i + 1), in_ch, out_ch,
                             3, 2, 1, seed);
            in_ch = out_ch;
        }
        apply_freeze_policy();
    }

    const BackboneConfig& config() const { return cfg_; }

    FeaturePyramid<T> forward(const Tensor<T>& images, State* st) const {
        check_frame_input(images.shape());
        if (!images.all_finite())
            throw compute_error("non-finite values in frame input");
        FeaturePyramid<T> pyr;
        Tensor<T> x = images;
        for (std::size_t i = 0; i < BackboneConfig::kStageCount; ++i) {
            Tensor<T> pre = stages_[i].forward(x, st ? &st->conv[i] : nullptr);
            x = act_.forward(pre, st ? &st->act[i] : nullptr);
            if (i == 2) pyr.level1 = x;
            if (i == 3) pyr.level2 = x;
            if (i == 4) pyr.level3 = std::move(x);
        }
        return pyr;
    }

    //! Gradients arrive per pyramid level; returns the gradient w.r.t. the
    //! input images (rarely consumed, but completes the chain).
    Tensor<T> backward(const FeaturePyramid<T>& grads, const State& st) {
        Tensor<T> g = grads.level3;
        for (std::size_t ri = BackboneConfig::kStageCount; ri-- > 0;) {
            if (ri == 3) g += grads.level2;
            if (ri == 2) g += grads.level1;
            g = act_.backward(g, st.act[ri]);
            g = stages_[ri].backward(g, st.conv[ri]);
        }
        return g;
    }

    nn::ParamRefs<T> params() {
        nn::ParamRefs<T> out;
        for (auto& s : stages_) s.collect(out);
        return out;
    }

    //! Stages before the trailing trainable_suffix are frozen.
    FreezeReport apply_freeze_policy() {
        FreezeReport rep;
        const std::size_t first_trainable =
            BackboneConfig::kStageCount - cfg_.trainable_suffix;
        for (std::size_t i = 0; i < BackboneConfig::kStageCount; ++i) {
            const bool frozen = i < first_trainable;
            stages_[i].weight.frozen = frozen;
            stages_[i].bias.frozen = frozen;
            const std::size_t n = stages_[i].weight.value.size() +
                                  stages_[i].bias.value.size();
            (frozen ? rep.frozen_params : rep.trainable_params) += n;
            rep.stages.emplace_back("stage" + std::to_string(i + 1), frozen);
        }
        return rep;
    }

    nn::Conv2d<T>& stage(std::size_t i) { return stages_[i]; }

private:
    BackboneConfig cfg_;
    std::array<nn::Conv2d<T>, BackboneConfig::kStageCount> stages_;
    nn::Gelu<T> act_;
};

//! Adapter seam: any callable producing a FeaturePyramid from (N,3,H,W)
//! frames can stand in for the reference backbone (e.g. a real pretrained
//! network). The adapter owns no parameters here and is frozen by definition.
template <typename T>
class ExternalBackbone {
public:
    using Fn = std::function<FeaturePyramid<T>(const Tensor<T>&)>;

    ExternalBackbone() = default;
    ExternalBackbone(Fn fn, std::array<std::size_t, 3> channels)
        : fn_(std::move(fn)), channels_(channels) {}

    FeaturePyramid<T> forward(const Tensor<T>& images) const {
        check_frame_input(images.shape());
        if (!images.all_finite())
            throw compute_error("non-finite values in frame input");
        FeaturePyramid<T> pyr = fn_(images);
        const std::size_t n = images.dim(0), h = images.dim(2), w = images.dim(3);
        const std::size_t divisors[3] = {8, 16, 32};
        for (int l = 1; l <= 3; ++l) {
            const Tensor<T>& lvl = pyr.level(l);
            const Shape want{n, channels_[static_cast<std::size_t>(l - 1)],
                             h / divisors[l - 1], w / divisors[l - 1]};
            if (lvl.shape() != want)
                throw compute_error("external backbone level " + std::to_string(l) +
                                    " shape " + shape_str(lvl.shape()) +
                                    " violates contract " + shape_str(want));
        }
        return pyr;
    }

    bool valid() const { return static_cast<bool>(fn_); }
    const std::array<std::size_t, 3>& channels() const { return channels_; }

private:
    Fn fn_;
    std::array<std::size_t, 3> channels_{};
};

} // namespace tamix
