#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dtce {

/**
 * One-dimensional building blocks for schedule disutilities.
 *
 * Every solver in this library evaluates these functions many times and also
 * needs exact slopes and antiderivatives (for Lipschitz bounds and for total
 * cost integrals), so all three are part of the interface rather than being
 * approximated downstream.
 */
enum class FnKind {
  Linear,          // a * e
  Power,           // a * |e|^p, p > 1
  Exponential,     // a * (exp(b * e) - 1)
  PiecewiseLinear, // interpolation through sorted knots, end slopes extrapolated
};

struct CatalogFn {
  FnKind kind = FnKind::Linear;
  double a = 1.0;
  double p = 2.0;
  double b = 1.0;
  std::vector<std::pair<double, double>> knots;

  double operator()(double e) const {
    switch (kind) {
    case FnKind::Linear:
      return a * e;
    case FnKind::Power:
      return a * std::pow(std::abs(e), p);
    case FnKind::Exponential:
      return a * (std::exp(b * e) - 1.0);
    case FnKind::PiecewiseLinear:
      return pwlValue(e);
    }
    return 0.0;
  }

  /// Right-sided derivative (kinks of piecewise functions take the right slope).
  double derivative(double e) const {
    switch (kind) {
    case FnKind::Linear:
      return a;
    case FnKind::Power: {
      double m = std::abs(e);
      double d = a * p * std::pow(m, p - 1.0);
      return e >= 0.0 ? d : -d;
    }
    case FnKind::Exponential:
      return a * b * std::exp(b * e);
    case FnKind::PiecewiseLinear:
      return pwlSlope(e);
    }
    return 0.0;
  }

  /// Exact integral over [lo, hi] from closed-form antiderivatives.
  double integral(double lo, double hi) const {
    if (lo > hi)
      return -integral(hi, lo);
    switch (kind) {
    case FnKind::Linear:
      return 0.5 * a * (hi * hi - lo * lo);
    case FnKind::Power: {
      auto anti = [&](double e) {
        double m = std::abs(e);
        double v = a * std::pow(m, p + 1.0) / (p + 1.0);
        return e >= 0.0 ? v : -v;
      };
      return anti(hi) - anti(lo);
    }
    case FnKind::Exponential: {
      auto anti = [&](double e) { return a * (std::exp(b * e) / b - e); };
      return anti(hi) - anti(lo);
    }
    case FnKind::PiecewiseLinear:
      return pwlIntegral(lo, hi);
    }
    return 0.0;
  }

  /// Upper bound on |f'| over [lo, hi].
  double slopeBound(double lo, double hi) const {
    if (lo > hi)
      std::swap(lo, hi);
    switch (kind) {
    case FnKind::Linear:
      return std::abs(a);
    case FnKind::Power: {
      double m = std::max(std::abs(lo), std::abs(hi));
      return std::abs(a) * p * std::pow(m, p - 1.0);
    }
    case FnKind::Exponential:
      return std::abs(a * b) * std::max(std::exp(b * lo), std::exp(b * hi));
    case FnKind::PiecewiseLinear: {
      double worst = 0.0;
      for (size_t i = 0; i + 1 < knots.size(); ++i) {
        if (knots[i + 1].first < lo || knots[i].first > hi)
          continue;
        worst = std::max(worst, std::abs(segSlope(i)));
      }
      if (knots.size() >= 2) {
        if (lo < knots.front().first)
          worst = std::max(worst, std::abs(segSlope(0)));
        if (hi > knots.back().first)
          worst = std::max(worst, std::abs(segSlope(knots.size() - 2)));
      }
      return worst;
    }
    }
    return 0.0;
  }

  void check() const {
    switch (kind) {
    case FnKind::Power:
      if (!(p > 1.0))
        throw std::runtime_error("power catalog function requires exponent p > 1");
      break;
    case FnKind::Exponential:
      if (b == 0.0)
        throw std::runtime_error("exponential catalog function requires nonzero rate b");
      break;
    case FnKind::PiecewiseLinear:
      if (knots.size() < 2)
        throw std::runtime_error("piecewise-linear catalog function requires at least two knots");
      for (size_t i = 0; i + 1 < knots.size(); ++i)
        if (!(knots[i].first < knots[i + 1].first))
          throw std::runtime_error("piecewise-linear knots must be strictly increasing in abscissa");
      break;
    default:
      break;
    }
  }

private:
  double segSlope(size_t i) const {
    return (knots[i + 1].second - knots[i].second) / (knots[i + 1].first - knots[i].first);
  }

  double pwlValue(double e) const {
    size_t n = knots.size();
    if (e <= knots.front().first)
      return knots.front().second + segSlope(0) * (e - knots.front().first);
    if (e >= knots.back().first)
      return knots.back().second + segSlope(n - 2) * (e - knots.back().first);
    size_t i = segmentOf(e);
    return knots[i].second + segSlope(i) * (e - knots[i].first);
  }

  double pwlSlope(double e) const {
    size_t n = knots.size();
    if (e < knots.front().first)
      return segSlope(0);
    if (e >= knots.back().first)
      return segSlope(n - 2);
    return segSlope(segmentOf(e));
  }

  double pwlIntegral(double lo, double hi) const {
    // Trapezoid over the (extended) piecewise-linear graph; exact.
    auto area = [&](double x0, double x1) {
      return 0.5 * (pwlValue(x0) + pwlValue(x1)) * (x1 - x0);
    };
    std::vector<double> cuts{lo};
    for (auto& kn : knots)
      if (kn.first > lo && kn.first < hi)
        cuts.push_back(kn.first);
    cuts.push_back(hi);
    double total = 0.0;
    for (size_t i = 0; i + 1 < cuts.size(); ++i)
      total += area(cuts[i], cuts[i + 1]);
    return total;
  }

  size_t segmentOf(double e) const {
    // First segment whose right knot lies strictly beyond e.
    size_t lo = 0, hi = knots.size() - 1;
    while (lo + 1 < hi) {
      size_t mid = (lo + hi) / 2;
      if (knots[mid].first <= e)
        lo = mid;
      else
        hi = mid;
    }
    return lo;
  }
};

// ----- Sampled shape checks -----
//
// Solver preconditions are certified on sampled lattices, never claimed for the
// continuum. 257 samples cross every catalog feature at the scales used here.

inline bool strictlyConvexOn(const CatalogFn& f, double lo, double hi, int samples = 257) {
  double h = (hi - lo) / (samples + 1);
  if (!(h > 0.0))
    return false;
  for (int i = 1; i <= samples; ++i) {
    double x = lo + i * h;
    double second = f(x - h) + f(x + h) - 2.0 * f(x);
    if (!(second > 0.0))
      return false;
  }
  return true;
}

inline bool strictlyConcaveOn(const CatalogFn& f, double lo, double hi, int samples = 257) {
  double h = (hi - lo) / (samples + 1);
  if (!(h > 0.0))
    return false;
  for (int i = 1; i <= samples; ++i) {
    double x = lo + i * h;
    double second = f(x - h) + f(x + h) - 2.0 * f(x);
    if (!(second < 0.0))
      return false;
  }
  return true;
}

inline bool strictlyDecreasingOn(const CatalogFn& f, double lo, double hi, int samples = 257) {
  double h = (hi - lo) / samples;
  if (!(h > 0.0))
    return false;
  for (int i = 0; i < samples; ++i) {
    double x = lo + i * h;
    if (!(f(x + h) < f(x)))
      return false;
  }
  return true;
}

inline bool strictlyIncreasingOn(const CatalogFn& f, double lo, double hi, int samples = 257) {
  double h = (hi - lo) / samples;
  if (!(h > 0.0))
    return false;
  for (int i = 0; i < samples; ++i) {
    double x = lo + i * h;
    if (!(f(x + h) > f(x)))
      return false;
  }
  return true;
}

inline bool positiveOn(const CatalogFn& f, double lo, double hi, int samples = 257) {
  for (int i = 0; i <= samples; ++i) {
    double x = lo + (hi - lo) * i / samples;
    if (!(f(x) > 0.0))
      return false;
  }
  return true;
}

} // namespace dtce
