#include "wardrop/latency.hpp"

#include <cmath>

namespace wardrop {

LatencySpec LatencySpec::constant_fn(double c) {
  LatencySpec s;
  s.family = LatencyFamily::constant;
  s.intercept = c;
  return s;
}

LatencySpec LatencySpec::affine_fn(double slope, double intercept) {
  LatencySpec s;
  s.family = LatencyFamily::affine;
  s.slope = slope;
  s.intercept = intercept;
  return s;
}

LatencySpec LatencySpec::mm1_fn(double capacity) {
  LatencySpec s;
  s.family = LatencyFamily::mm1;
  s.capacity = capacity;
  return s;
}

LatencySpec LatencySpec::monomial_fn(double coef, double exponent) {
  LatencySpec s;
  s.family = LatencyFamily::monomial;
  s.coef = coef;
  s.exponent = exponent;
  return s;
}

double LatencySpec::value(double y) const {
  if (marginalized) return marginal(y);
  switch (family) {
    case LatencyFamily::constant:
      return intercept;
    case LatencyFamily::affine:
      return slope * y + intercept;
    case LatencyFamily::mm1:
      return 1.0 / (capacity - y);
    case LatencyFamily::monomial:
      return coef * std::pow(y, exponent);
  }
  return 0.0;
}

double LatencySpec::derivative(double y) const {
  if (marginalized) {
    // d/dy [phi + y phi'] = 2 phi' + y phi''
    switch (family) {
      case LatencyFamily::constant:
        return 0.0;
      case LatencyFamily::affine:
        return 2.0 * slope;
      case LatencyFamily::mm1: {
        const double d = capacity - y;
        return 2.0 * capacity / (d * d * d);
      }
      case LatencyFamily::monomial:
        return coef * (exponent + 1.0) * exponent * std::pow(y, exponent - 1.0);
    }
    return 0.0;
  }
  switch (family) {
    case LatencyFamily::constant:
      return 0.0;
    case LatencyFamily::affine:
      return slope;
    case LatencyFamily::mm1: {
      const double d = capacity - y;
      return 1.0 / (d * d);
    }
    case LatencyFamily::monomial:
      return coef * exponent * std::pow(y, exponent - 1.0);
  }
  return 0.0;
}

double LatencySpec::primitive(double y) const {
  if (marginalized) {
    // integral of phi + w phi' from 0 to y is y*phi(y)
    LatencySpec base = *this;
    base.marginalized = false;
    return y * base.value(y);
  }
  switch (family) {
    case LatencyFamily::constant:
      return intercept * y;
    case LatencyFamily::affine:
      return 0.5 * slope * y * y + intercept * y;
    case LatencyFamily::mm1:
      return std::log(capacity / (capacity - y));
    case LatencyFamily::monomial:
      return coef * std::pow(y, exponent + 1.0) / (exponent + 1.0);
  }
  return 0.0;
}

double LatencySpec::marginal(double y) const {
  LatencySpec base = *this;
  base.marginalized = false;
  return base.value(y) + y * base.derivative(y);
}

double LatencySpec::max_load() const {
  if (family == LatencyFamily::mm1) return capacity;
  return std::numeric_limits<double>::infinity();
}

bool LatencySpec::feasible(double y) const {
  if (family == LatencyFamily::mm1) return y < capacity - kDomainGuard;
  return true;
}

void LatencySpec::check_feasible(double y, const std::string& edge_id) const {
  if (!feasible(y)) throw infeasible_load(edge_id, y, capacity);
}

double LatencySpec::min_derivative_on(double ymax) const {
  (void)ymax;  // all four families have their smallest slope at y = 0
  switch (family) {
    case LatencyFamily::constant:
      return 0.0;
    case LatencyFamily::affine:
      return marginalized ? 2.0 * slope : slope;
    case LatencyFamily::mm1:
      return marginalized ? 2.0 / (capacity * capacity) : 1.0 / (capacity * capacity);
    case LatencyFamily::monomial:
      if (exponent > 1.0) return 0.0;
      return marginalized ? 2.0 * coef : coef;  // exponent == 1
  }
  return 0.0;
}

bool LatencySpec::strictly_increasing() const {
  switch (family) {
    case LatencyFamily::constant:
      return false;
    case LatencyFamily::affine:
      return slope > 0.0;
    case LatencyFamily::mm1:
      return true;
    case LatencyFamily::monomial:
      return coef > 0.0;
  }
  return false;
}

bool LatencySpec::marginal_nondecreasing() const {
  switch (family) {
    case LatencyFamily::constant:
      return true;  // flat
    case LatencyFamily::affine:
      return slope >= 0.0;
    case LatencyFamily::mm1:
      return true;
    case LatencyFamily::monomial:
      return coef >= 0.0 && exponent >= 1.0;
  }
  return false;
}

LatencySpec LatencySpec::marginalized_copy() const {
  LatencySpec s = *this;
  s.marginalized = true;
  return s;
}

std::string LatencySpec::describe() const {
  std::string body;
  switch (family) {
    case LatencyFamily::constant:
      body = "constant(" + std::to_string(intercept) + ")";
      break;
    case LatencyFamily::affine:
      body = "affine(" + std::to_string(slope) + "*y+" + std::to_string(intercept) + ")";
      break;
    case LatencyFamily::mm1:
      body = "mm1(mu=" + std::to_string(capacity) + ")";
      break;
    case LatencyFamily::monomial:
      body = "monomial(" + std::to_string(coef) + "*y^" + std::to_string(exponent) + ")";
      break;
  }
  return marginalized ? "marginal:" + body : body;
}

double marginal_latency(const LatencySpec& spec, double y) {
  spec.check_feasible(y, "(marginal evaluation)");
  return spec.marginal(y);
}

}  // namespace wardrop
