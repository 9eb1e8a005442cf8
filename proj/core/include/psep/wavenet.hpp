#pragma once

#include <string>
#include <vector>

#include "psep/params.hpp"

namespace psep {

struct WaveNetSpec {
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;
  std::size_t width = 16;
  std::size_t blocks = 1;  // dilations restart at 1 in every block
  std::size_t layers = 6;  // dilation 2^l within a block
  std::size_t kernel = 3;
  ad::ConvMode mode = ad::ConvMode::Centered;
  bool zero_output = false;  // start the output projection at zero
};

/// Gated dilated convolution stack with residual and skip connections:
///
///   h   = conv1x1(x)
///   per layer: u = tanh(a) * sigmoid(b), [a; b] = dilated_conv(h)
///              [r; s] = conv1x1(u);  h += r;  skip += s
///   out = conv1x1(tanh(skip))
///
/// Shared by the flow conditioner (centered convs) and the autoregressive
/// prior (causal convs).
class WaveNetStack {
 public:
  WaveNetStack() = default;
  WaveNetStack(ParameterSet& params, const std::string& prefix, const WaveNetSpec& spec, Rng& rng);

  ad::Var forward(ParamBinder& bind, ad::Var x) const;

  const WaveNetSpec& spec() const { return spec_; }
  std::size_t output_weight() const { return out_w_; }
  std::size_t output_bias() const { return out_b_; }

 private:
  struct Layer {
    std::size_t dilation;
    std::size_t conv_w, conv_b, res_w, res_b;
  };

  WaveNetSpec spec_;
  std::size_t in_w_ = 0, in_b_ = 0, out_w_ = 0, out_b_ = 0;
  std::vector<Layer> layers_;
};

}  // namespace psep
