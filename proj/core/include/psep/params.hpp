#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "psep/autodiff.hpp"
#include "psep/signal.hpp"
#include "psep/tensor.hpp"

namespace psep {

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
};

/// Ordered, named parameter storage with gradient buffers.
class ParameterSet {
 public:
  std::size_t add(std::string name, Tensor init);

  std::size_t size() const { return params_.size(); }
  Parameter& operator[](std::size_t i) { return params_[i]; }
  const Parameter& operator[](std::size_t i) const { return params_[i]; }
  Parameter& get(const std::string& name);
  const Parameter& get(const std::string& name) const;
  std::vector<Parameter>& all() { return params_; }
  const std::vector<Parameter>& all() const { return params_; }

  std::size_t scalar_count() const;
  void zero_grad();
  /// Rounds every value to float precision (the checkpoint storage type).
  void round_to_f32();
  bool all_finite() const;

 private:
  std::vector<Parameter> params_;
};

/// U(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialization.
Tensor uniform_init(Tensor::Shape shape, std::size_t fan_in, Rng& rng);

/// Binds parameters into a single graph evaluation. Leaves are created lazily
/// and their gradients can be added back into the set after backward().
class ParamBinder {
 public:
  ParamBinder(ad::Graph& graph, const ParameterSet& params, bool requires_grad);

  ad::Var operator()(std::size_t index);
  ad::Graph& graph() { return graph_; }
  void accumulate_grads(ParameterSet& params, double scale = 1.0) const;

 private:
  ad::Graph& graph_;
  const ParameterSet& params_;
  bool requires_grad_;
  std::vector<ad::Var> vars_;
  std::vector<bool> bound_;
};

}  // namespace psep
