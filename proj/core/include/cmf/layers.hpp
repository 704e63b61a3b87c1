#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cmf/tensor.hpp"

namespace cmf {

/// One named weight block with its gradient and Adam state. Names are stable
/// across runs for checkpoint compatibility.
struct ParamBlock {
    std::string name;
    std::vector<int> shape;
    std::vector<float> w;
    std::vector<float> g;
    std::vector<float> adam_m;
    std::vector<float> adam_v;

    enum class Init { kHeNormal, kZeros, kOnes, kConst };
    Init init = Init::kZeros;
    double init_arg = 0.0;  // fan_in for He, constant value for kConst

    std::size_t count() const { return w.size(); }
    void setup(std::string nm, std::vector<int> shp, Init kind, double arg);
    void init_values(std::uint64_t seed);
    void zero_grad() { std::fill(g.begin(), g.end(), 0.0f); }
};

/// 3D convolution. Two geometries are supported:
///  - odd kernel (1/3/5), stride 1, zero "same" padding
///  - kernel 2, stride 2 (down-sampling); an axis of size 1 degrades to
///    stride 1 on that axis using the first kernel tap
class Conv3d {
  public:
    Conv3d() = default;
    Conv3d(std::string name, int cin, int cout, int kernel, bool down, bool bias);

    Tensor forward(const Tensor& x, bool cache);
    Tensor backward(const Tensor& dy);

    void collect(std::vector<ParamBlock*>& out);
    Dims3 out_dims(Dims3 in) const;

    int cin() const { return cin_; }
    int cout() const { return cout_; }

  private:
    int cin_ = 0, cout_ = 0, kernel_ = 3;
    bool down_ = false, has_bias_ = true;
    ParamBlock wgt_, bias_;
    Tensor x_cache_;
};

/// Transposed convolution with kernel 2, stride 2, used to undo one
/// down-sampling. The target spatial size selects per-axis doubling or the
/// degenerate (identity-size) path, mirroring the matching down-conv.
class TransposedConv3d {
  public:
    TransposedConv3d() = default;
    TransposedConv3d(std::string name, int cin, int cout, bool bias);

    Tensor forward(const Tensor& x, Dims3 target, bool cache);
    Tensor backward(const Tensor& dy);

    void collect(std::vector<ParamBlock*>& out);

  private:
    int cin_ = 0, cout_ = 0;
    bool has_bias_ = true;
    ParamBlock wgt_, bias_;
    Tensor x_cache_;
    Dims3 target_{};
};

/// Instance normalization: per (sample, channel) statistics over space.
class InstanceNorm3d {
  public:
    InstanceNorm3d() = default;
    InstanceNorm3d(std::string name, int channels);

    Tensor forward(const Tensor& x, bool cache);
    Tensor backward(const Tensor& dy);

    void collect(std::vector<ParamBlock*>& out);

  private:
    int channels_ = 0;
    ParamBlock gamma_, beta_;
    Tensor xhat_cache_;
    std::vector<float> inv_std_cache_;
};

/// Channelwise PReLU.
class PReLU {
  public:
    PReLU() = default;
    PReLU(std::string name, int channels);

    Tensor forward(const Tensor& x, bool cache);
    Tensor backward(const Tensor& dy);

    void collect(std::vector<ParamBlock*>& out);

  private:
    int channels_ = 0;
    ParamBlock alpha_;
    Tensor x_cache_;
};

/// Inverted dropout; identity when rate is 0 or in eval mode.
class Dropout {
  public:
    Dropout() = default;
    explicit Dropout(double rate) : rate_(rate) {}

    Tensor forward(const Tensor& x, bool train, std::uint64_t seed);
    Tensor backward(const Tensor& dy);

  private:
    double rate_ = 0.0;
    Tensor mask_cache_;
};

/// Channel concatenation of two tensors and its split for backprop.
Tensor concat_channels(const Tensor& a, const Tensor& b);
void split_channels(const Tensor& dy, int ca, Tensor& da, Tensor& db);

/// y += x, shapes must match.
void add_inplace(Tensor& y, const Tensor& x);

}  // namespace cmf
