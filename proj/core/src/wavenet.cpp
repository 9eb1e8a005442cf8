#include "psep/wavenet.hpp"

#include "psep/errors.hpp"

namespace psep {

WaveNetStack::WaveNetStack(ParameterSet& params, const std::string& prefix, const WaveNetSpec& spec, Rng& rng)
    : spec_(spec) {
  if (spec.width == 0 || spec.layers == 0 || spec.blocks == 0 || spec.kernel == 0) {
    throw ConfigError("wavenet: width, layers, blocks and kernel must be positive");
  }
  const std::size_t W = spec.width;
  in_w_ = params.add(prefix + ".in.w", uniform_init({W, spec.in_channels, 1}, spec.in_channels, rng));
  in_b_ = params.add(prefix + ".in.b", Tensor({W}));
  for (std::size_t b = 0; b < spec.blocks; ++b) {
    for (std::size_t l = 0; l < spec.layers; ++l) {
      const std::string p = prefix + ".b" + std::to_string(b) + ".l" + std::to_string(l);
      Layer layer{};
      layer.dilation = std::size_t{1} << l;
      layer.conv_w = params.add(p + ".conv.w", uniform_init({2 * W, W, spec.kernel}, W * spec.kernel, rng));
      layer.conv_b = params.add(p + ".conv.b", Tensor({2 * W}));
      layer.res_w = params.add(p + ".res.w", uniform_init({2 * W, W, 1}, W, rng));
      layer.res_b = params.add(p + ".res.b", Tensor({2 * W}));
      layers_.push_back(layer);
    }
  }
  const std::size_t O = spec.out_channels;
  out_w_ = params.add(prefix + ".out.w", spec.zero_output ? Tensor({O, W, 1}) : uniform_init({O, W, 1}, W, rng));
  out_b_ = params.add(prefix + ".out.b", Tensor({O}));
}

ad::Var WaveNetStack::forward(ParamBinder& bind, ad::Var x) const {
  ad::Graph& g = bind.graph();
  const std::size_t W = spec_.width;
  ad::Var h = g.conv1d(x, bind(in_w_), bind(in_b_), 1, spec_.mode);
  ad::Var skip{};
  bool have_skip = false;
  for (const Layer& layer : layers_) {
    const ad::Var pre = g.conv1d(h, bind(layer.conv_w), bind(layer.conv_b), layer.dilation, spec_.mode);
    const ad::Var gated = g.mul(g.tanh(g.channel_range(pre, 0, W)), g.sigmoid(g.channel_range(pre, W, W)));
    const ad::Var rs = g.conv1d(gated, bind(layer.res_w), bind(layer.res_b), 1, spec_.mode);
    h = g.add(h, g.channel_range(rs, 0, W));
    const ad::Var s = g.channel_range(rs, W, W);
    skip = have_skip ? g.add(skip, s) : s;
    have_skip = true;
  }
  return g.conv1d(g.tanh(skip), bind(out_w_), bind(out_b_), 1, spec_.mode);
}

}  // namespace psep
