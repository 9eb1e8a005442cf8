#include "vmath.hpp"

#include <Eigen/Core>

namespace psep::vmath {

namespace {

using CMap = Eigen::Map<const Eigen::ArrayXd>;
using Map = Eigen::Map<Eigen::ArrayXd>;

CMap view(const double* p, std::size_t n) { return CMap(p, static_cast<Eigen::Index>(n)); }
Map view(double* p, std::size_t n) { return Map(p, static_cast<Eigen::Index>(n)); }

}  // namespace

void exp(const double* in, double* out, std::size_t n) { view(out, n) = view(in, n).exp(); }

void tanh(const double* in, double* out, std::size_t n) {
  const CMap x = view(in, n);
  Map y = view(out, n);
  // (1 - e) / (1 + e) with e = exp(-2|x|) cancels near zero; a short odd
  // series covers |x| < 2^-8 to full precision.
  const Eigen::ArrayXd ax = x.abs();
  const Eigen::ArrayXd e = (-2.0 * ax).exp();
  const Eigen::ArrayXd big = (1.0 - e) / (1.0 + e);
  const Eigen::ArrayXd x2 = x.square();
  const Eigen::ArrayXd small = ax * (1.0 - x2 * (1.0 / 3.0 - x2 * (2.0 / 15.0 - x2 * (17.0 / 315.0))));
  y = (ax < 0.00390625).select(small, big);
  y = (x < 0.0).select(-y, y);
}

void sigmoid(const double* in, double* out, std::size_t n) {
  const CMap x = view(in, n);
  Map y = view(out, n);
  const Eigen::ArrayXd e = (-x.abs()).exp();
  const Eigen::ArrayXd inv = 1.0 / (1.0 + e);
  y = (x >= 0.0).select(inv, e * inv);
}

}  // namespace psep::vmath
