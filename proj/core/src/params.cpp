#include "psep/params.hpp"

#include <cmath>

#include "psep/errors.hpp"

namespace psep {

std::size_t ParameterSet::add(std::string name, Tensor init) {
  for (const Parameter& p : params_) {
    if (p.name == name) throw Error("duplicate parameter name " + name);
  }
  Tensor grad(init.shape());
  params_.push_back(Parameter{std::move(name), std::move(init), std::move(grad)});
  return params_.size() - 1;
}

Parameter& ParameterSet::get(const std::string& name) {
  for (Parameter& p : params_) {
    if (p.name == name) return p;
  }
  throw Error("no parameter named " + name);
}

const Parameter& ParameterSet::get(const std::string& name) const {
  return const_cast<ParameterSet*>(this)->get(name);
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const Parameter& p : params_) n += p.value.size();
  return n;
}

void ParameterSet::zero_grad() {
  for (Parameter& p : params_) p.grad.fill(0.0);
}

void ParameterSet::round_to_f32() {
  for (Parameter& p : params_) {
    for (double& v : p.value.values()) v = static_cast<double>(static_cast<float>(v));
  }
}

bool ParameterSet::all_finite() const {
  for (const Parameter& p : params_) {
    if (!p.value.all_finite()) return false;
  }
  return true;
}

Tensor uniform_init(Tensor::Shape shape, std::size_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = dist(rng);
  return t;
}

ParamBinder::ParamBinder(ad::Graph& graph, const ParameterSet& params, bool requires_grad)
    : graph_(graph), params_(params), requires_grad_(requires_grad), vars_(params.size()), bound_(params.size()) {}

ad::Var ParamBinder::operator()(std::size_t index) {
  if (!bound_.at(index)) {
    vars_[index] = graph_.input(params_[index].value, requires_grad_);
    bound_[index] = true;
  }
  return vars_[index];
}

void ParamBinder::accumulate_grads(ParameterSet& params, double scale) const {
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    if (!bound_[i]) continue;
    const Tensor g = graph_.grad(vars_[i]);
    Tensor& dst = params[i].grad;
    for (std::size_t j = 0; j < g.size(); ++j) dst[j] += scale * g[j];
  }
}

}  // namespace psep
