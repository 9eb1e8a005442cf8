#include "psep/adam.hpp"

#include <cmath>

#include "psep/errors.hpp"

namespace psep {

Adam::Adam(const ParameterSet& params, AdamOptions options) : opt_(options) {
  for (const Parameter& p : params.all()) {
    m_.emplace_back(p.value.shape());
    v_.emplace_back(p.value.shape());
  }
}

void Adam::step(ParameterSet& params, double lr) {
  if (params.size() != m_.size()) throw ShapeError("adam: parameter count changed");
  ++t_;
  const double c1 = 1.0 - std::pow(opt_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(opt_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = params[i];
    if (!p.grad.same_shape(p.value) || !m_[i].same_shape(p.value)) {
      throw ShapeError("adam: gradient shape mismatch for " + p.name);
    }
    double* w = p.value.data();
    const double* g = p.grad.data();
    double* m = m_[i].data();
    double* v = v_[i].data();
    for (std::size_t j = 0; j < p.value.size(); ++j) {
      m[j] = opt_.beta1 * m[j] + (1.0 - opt_.beta1) * g[j];
      v[j] = opt_.beta2 * v[j] + (1.0 - opt_.beta2) * g[j] * g[j];
      w[j] -= lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + opt_.epsilon);
    }
  }
}

}  // namespace psep
