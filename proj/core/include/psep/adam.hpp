#pragma once

#include <vector>

#include "psep/params.hpp"

namespace psep {

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with bias-corrected moments:
///   m = β1 m + (1-β1) g,  v = β2 v + (1-β2) g²
///   w -= lr * m̂ / (sqrt(v̂) + ε)
class Adam {
 public:
  explicit Adam(const ParameterSet& params, AdamOptions options = {});

  /// Applies one update using each parameter's .grad buffer.
  void step(ParameterSet& params, double lr);

  std::size_t steps_taken() const { return t_; }
  const std::vector<Tensor>& first_moments() const { return m_; }
  const std::vector<Tensor>& second_moments() const { return v_; }

 private:
  AdamOptions opt_;
  std::size_t t_ = 0;
  std::vector<Tensor> m_, v_;
};

}  // namespace psep
