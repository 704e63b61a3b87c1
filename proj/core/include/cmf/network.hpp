#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cmf/layers.hpp"

namespace cmf {

/// Architecture knobs. The default is the published CT3/MR4 combination with
/// base width 16 and 5^3 backbone convolutions (which lands the single-branch
/// parameter counts near the reference sizes); the cross-modal branch always
/// uses 3^3 convolutions.
struct NetworkConfig {
    int num_classes = 2;
    int ct_depth = 3;           // encoder conv stages, 3..6
    int mr_depth = 4;
    int base_channels = 16;
    int branch_kernel = 5;      // 3 or 5, modality branches only
    double dropout_rate = 0.5;  // two deepest encoder stages + bottleneck
    bool enable_cff = true;
    bool enable_cfe = true;
    bool single_modality = false;  // duplicate CT into the MR branch

    int ct_downsamples() const { return ct_depth == 3 ? 3 : 4; }
    int mr_downsamples() const { return mr_depth == 3 ? 3 : 4; }
    int max_downsamples() const {
        return ct_downsamples() > mr_downsamples() ? ct_downsamples() : mr_downsamples();
    }
    /// Inputs must be divisible by this per axis (see pad_to_multiple).
    int divisor() const { return 1 << max_downsamples(); }

    void validate() const;
    bool operator==(const NetworkConfig&) const = default;
};

/// Conv + InstanceNorm + PReLU (norm optional).
struct ConvBlock {
    Conv3d conv;
    InstanceNorm3d norm;
    PReLU act;
    bool use_norm = true;

    ConvBlock() = default;
    ConvBlock(const std::string& name, int cin, int cout, int kernel, bool norm_on);
    Tensor forward(const Tensor& x, bool cache);
    Tensor backward(const Tensor& dy);
    void collect(std::vector<ParamBlock*>& out);
};

/// Two-conv residual stage: PReLU(IN(conv2(block1(x))) + skip(x)), with a
/// 1x1x1 projection on the skip when the channel count changes.
struct ResStage {
    ConvBlock block1;
    Conv3d conv2;
    InstanceNorm3d norm2;
    std::optional<Conv3d> proj;
    PReLU out_act;

    ResStage() = default;
    ResStage(const std::string& name, int cin, int cout, int kernel);
    Tensor forward(const Tensor& x, bool cache);
    Tensor backward(const Tensor& dy);
    void collect(std::vector<ParamBlock*>& out);
};

/// One modality-specific encoder-decoder. Feature channels double per
/// down-sampling level; the pyramid exposes the stage outputs after each
/// down-sampling (f^1..f^downsamples, the deepest being the bottleneck).
class Branch {
  public:
    Branch() = default;
    Branch(const std::string& prefix, int depth, int num_classes, int base_channels,
           int kernel, double dropout_rate);

    struct Out {
        Tensor logits;
        std::vector<Tensor> pyramid;  // index l = f^l, l in 1..downsamples (index 0 unused)
    };
    Out forward(const Tensor& x, bool train, std::uint64_t drop_seed);

    /// d_pyramid entries (indexed by level, may be null) are external gradient
    /// contributions on the pyramid features; returns the input gradient.
    Tensor backward(const Tensor& dlogits, const std::vector<const Tensor*>& d_pyramid);

    void collect(std::vector<ParamBlock*>& out);
    int downsamples() const { return downs_; }

  private:
    int depth_ = 0, downs_ = 0, base_ = 0;
    ConvBlock in_block_;
    std::vector<ResStage> enc_;
    std::vector<Conv3d> down_;
    std::vector<ResStage> extra_;
    ResStage bottleneck_;
    std::vector<TransposedConv3d> up_;
    std::vector<ResStage> dec_;
    Conv3d head_;
    std::vector<Dropout> drops_;  // [deep-1, deep-2, bottleneck]

    struct Cache {
        std::vector<Dims3> sizes;
        bool valid = false;
    } cache_;

    int stage_order_index(int level) const;
    int n_stages() const { return downs_ + int(extra_.size()); }
};

/// The three per-voxel class-probability maps.
struct BranchOutputs {
    Tensor y_ct, y_mr, y_mm;
};

struct ForwardResult {
    Tensor logits_ct, logits_mr, logits_mm;
    BranchOutputs probs;
    // populated when keep_pyramids: per level 1..downsamples (index 0 unused)
    std::vector<Tensor> f_ct, f_mr, f_mm;
};

/// Triple-branch cross-modal segmentation model.
class CmfModel {
  public:
    explicit CmfModel(const NetworkConfig& cfg);

    /// Inputs are (n, 1, d, h, w) with spatial dims divisible by
    /// cfg.divisor(); throws ShapeError otherwise (pad_to_multiple first).
    /// In single_modality mode the mr argument is ignored.
    ForwardResult forward(const Tensor& ct, const Tensor& mr, bool train = false,
                          std::uint64_t step_seed = 0, bool keep_pyramids = false);

    void backward(const Tensor& d_ct_logits, const Tensor& d_mr_logits,
                  const Tensor& d_mm_logits);

    std::vector<ParamBlock*> params();
    void init_params(std::uint64_t seed);
    void zero_grads();
    const NetworkConfig& config() const { return cfg_; }

    /// Parameter counts, total and per part ("ct", "mr", "mm").
    std::size_t count_params();
    std::size_t count_params(const std::string& part);

  private:
    NetworkConfig cfg_;
    Branch ct_, mr_;

    struct FuseConv {  // conv (+bias) + PReLU, no norm
        Conv3d conv;
        PReLU act;
        FuseConv() = default;
        FuseConv(const std::string& name, int cin, int cout, int kernel, bool down);
        Tensor forward(const Tensor& x, bool cache);
        Tensor backward(const Tensor& dy);
        void collect(std::vector<ParamBlock*>& out);
    };

    std::vector<std::unique_ptr<FuseConv>> cff_;  // index 1..3 (0 unused)
    struct Cfe {
        FuseConv down;                 // stride-2
        std::vector<FuseConv> refine;  // three conv modules
    };
    std::unique_ptr<Cfe> cfe_;
    struct MflFuse {
        std::vector<Conv3d> ct_align;  // stride-2 alignment to the deepest level
        std::vector<Conv3d> mr_align;
        FuseConv fuse;
    };
    std::unique_ptr<MflFuse> mfl_;

    int mm_start_ = 0;  // decoder start level
    std::vector<TransposedConv3d> mm_up_;  // index l: level l+1 -> l
    std::vector<ResStage> mm_dec_;
    Conv3d mm_head_;

    struct Cache {
        std::vector<Dims3> sizes;  // per level
        bool valid = false;
    } cache_;

    bool mm_skip_at(int level) const;
    int channels(int level) const { return cfg_.base_channels << level; }

    std::vector<ParamBlock*> part_params(const std::string& part);
};

/// Element count over all parameter blocks (Table-style "Params" number).
std::size_t count_params(CmfModel& model);

Dims3 halve_dims(Dims3 in);

}  // namespace cmf
