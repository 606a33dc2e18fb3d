#ifndef HESSMC_JET_HPP
#define HESSMC_JET_HPP

#include <array>
#include <cmath>
#include <cstddef>
#include <type_traits>

/**
 * \file
 * \brief Forward-mode second-order derivative numbers.
 *
 * A Jet<D, Order> carries a value together with its gradient (Order >= 1) and
 * Hessian (Order == 2) with respect to D independent parameters. Models are
 * written once as templates over the jet type, and the particle filter picks
 * the order it needs: plain values for random-walk moves, gradients for
 * first-order moves, and full Hessians for second-order moves.
 */

namespace hessmc {

namespace detail {
/// Distinct tags so the two absent members can share storage.
template <int Slot>
struct NoDerivative {};
}  // namespace detail

template <std::size_t D, int Order>
struct Jet {
  static_assert(Order >= 0 && Order <= 2, "jet order must be 0, 1 or 2");
  static constexpr std::size_t kDim = D;
  static constexpr int kOrder = Order;

  using Grad = std::conditional_t<(Order >= 1), std::array<double, D>, detail::NoDerivative<1>>;
  using Hess = std::conditional_t<(Order >= 2), std::array<double, D * D>, detail::NoDerivative<2>>;

  double v = 0.0;
  [[no_unique_address]] Grad g{};
  /// Row-major and exactly symmetric: every rule writes (i, j) and (j, i) together.
  [[no_unique_address]] Hess h{};

  Jet() = default;
  // NOLINTNEXTLINE(google-explicit-constructor)
  Jet(double value) : v(value) {}

  /// The i-th independent variable, seeded with a unit gradient.
  static Jet variable(double value, std::size_t index) {
    Jet out(value);
    if constexpr (Order >= 1) out.g[index] = 1.0;
    return out;
  }

  [[nodiscard]] double grad(std::size_t i) const {
    if constexpr (Order >= 1) {
      return g[i];
    } else {
      return 0.0;
    }
  }

  [[nodiscard]] double hess(std::size_t i, std::size_t j) const {
    if constexpr (Order >= 2) {
      return h[i * D + j];
    } else {
      return 0.0;
    }
  }

  /// Drops all derivative information (used where a clamp is active).
  void freeze() {
    if constexpr (Order >= 1) g.fill(0.0);
    if constexpr (Order >= 2) h.fill(0.0);
  }

  Jet& operator+=(const Jet& o) {
    v += o.v;
    if constexpr (Order >= 1)
      for (std::size_t i = 0; i < D; ++i) g[i] += o.g[i];
    if constexpr (Order >= 2)
      for (std::size_t k = 0; k < D * D; ++k) h[k] += o.h[k];
    return *this;
  }

  Jet& operator-=(const Jet& o) {
    v -= o.v;
    if constexpr (Order >= 1)
      for (std::size_t i = 0; i < D; ++i) g[i] -= o.g[i];
    if constexpr (Order >= 2)
      for (std::size_t k = 0; k < D * D; ++k) h[k] -= o.h[k];
    return *this;
  }

  Jet& operator*=(double s) {
    v *= s;
    if constexpr (Order >= 1)
      for (std::size_t i = 0; i < D; ++i) g[i] *= s;
    if constexpr (Order >= 2)
      for (std::size_t k = 0; k < D * D; ++k) h[k] *= s;
    return *this;
  }

  Jet& operator+=(double s) {
    v += s;
    return *this;
  }

  Jet& operator-=(double s) {
    v -= s;
    return *this;
  }
};

/// f(a) given f(a.v), f'(a.v), f''(a.v).
template <std::size_t D, int O>
Jet<D, O> chain(const Jet<D, O>& a, double f0, double f1, double f2) {
  Jet<D, O> out(f0);
  if constexpr (O >= 1)
    for (std::size_t i = 0; i < D; ++i) out.g[i] = f1 * a.g[i];
  if constexpr (O >= 2)
    for (std::size_t i = 0; i < D; ++i)
      for (std::size_t j = i; j < D; ++j)
        out.h[i * D + j] = out.h[j * D + i] = f1 * a.h[i * D + j] + f2 * a.g[i] * a.g[j];
  return out;
}

/**
 * f(a, b) given the value and partial derivatives of a scalar function of two
 * arguments. The Hessian collects the direct curvature terms together with
 * the cross terms f_ab (a' b'^T + b' a'^T) and the second derivatives of the
 * inner arguments weighted by the first partials.
 */
template <std::size_t D, int O>
Jet<D, O> chain2(const Jet<D, O>& a, const Jet<D, O>& b, double f0, double fa, double fb, double faa,
                 double fab, double fbb) {
  Jet<D, O> out(f0);
  if constexpr (O >= 1)
    for (std::size_t i = 0; i < D; ++i) out.g[i] = fa * a.g[i] + fb * b.g[i];
  if constexpr (O >= 2)
    for (std::size_t i = 0; i < D; ++i)
      for (std::size_t j = i; j < D; ++j) {
        const std::size_t k = i * D + j;
        out.h[k] = out.h[j * D + i] = faa * a.g[i] * a.g[j] + fab * (a.g[i] * b.g[j] + b.g[i] * a.g[j]) +
                                      fbb * b.g[i] * b.g[j] + fa * a.h[k] + fb * b.h[k];
      }
  return out;
}

template <std::size_t D, int O>
Jet<D, O> operator+(Jet<D, O> a, const Jet<D, O>& b) {
  return a += b;
}
template <std::size_t D, int O>
Jet<D, O> operator-(Jet<D, O> a, const Jet<D, O>& b) {
  return a -= b;
}
template <std::size_t D, int O>
Jet<D, O> operator-(Jet<D, O> a) {
  return a *= -1.0;
}
template <std::size_t D, int O>
Jet<D, O> operator+(Jet<D, O> a, double s) {
  return a += s;
}
template <std::size_t D, int O>
Jet<D, O> operator+(double s, Jet<D, O> a) {
  return a += s;
}
template <std::size_t D, int O>
Jet<D, O> operator-(Jet<D, O> a, double s) {
  return a -= s;
}
template <std::size_t D, int O>
Jet<D, O> operator-(double s, Jet<D, O> a) {
  a *= -1.0;
  return a += s;
}
template <std::size_t D, int O>
Jet<D, O> operator*(Jet<D, O> a, double s) {
  return a *= s;
}
template <std::size_t D, int O>
Jet<D, O> operator*(double s, Jet<D, O> a) {
  return a *= s;
}
template <std::size_t D, int O>
Jet<D, O> operator/(Jet<D, O> a, double s) {
  return a *= 1.0 / s;
}

template <std::size_t D, int O>
Jet<D, O> operator*(const Jet<D, O>& a, const Jet<D, O>& b) {
  Jet<D, O> out(a.v * b.v);
  if constexpr (O >= 1)
    for (std::size_t i = 0; i < D; ++i) out.g[i] = a.g[i] * b.v + a.v * b.g[i];
  if constexpr (O >= 2)
    for (std::size_t i = 0; i < D; ++i)
      for (std::size_t j = i; j < D; ++j) {
        const std::size_t k = i * D + j;
        out.h[k] = out.h[j * D + i] = a.h[k] * b.v + a.v * b.h[k] + a.g[i] * b.g[j] + b.g[i] * a.g[j];
      }
  return out;
}

template <std::size_t D, int O>
Jet<D, O> reciprocal(const Jet<D, O>& a) {
  const double r = 1.0 / a.v;
  return chain(a, r, -r * r, 2.0 * r * r * r);
}

template <std::size_t D, int O>
Jet<D, O> operator/(const Jet<D, O>& a, const Jet<D, O>& b) {
  return a * reciprocal(b);
}

template <std::size_t D, int O>
Jet<D, O> operator/(double s, const Jet<D, O>& b) {
  return reciprocal(b) * s;
}

template <std::size_t D, int O>
Jet<D, O> square(const Jet<D, O>& a) {
  return chain(a, a.v * a.v, 2.0 * a.v, 2.0);
}

template <std::size_t D, int O>
Jet<D, O> log(const Jet<D, O>& a) {
  const double r = 1.0 / a.v;
  return chain(a, std::log(a.v), r, -r * r);
}

template <std::size_t D, int O>
Jet<D, O> exp(const Jet<D, O>& a) {
  const double e = std::exp(a.v);
  return chain(a, e, e, e);
}

template <std::size_t D, int O>
Jet<D, O> sqrt(const Jet<D, O>& a) {
  const double s = std::sqrt(a.v);
  return chain(a, s, 0.5 / s, -0.25 / (s * a.v));
}

/// Clamps the value into [lo, hi]; derivatives vanish where the clamp is active.
template <std::size_t D, int O>
Jet<D, O> clamp(Jet<D, O> a, double lo, double hi, bool* clamped = nullptr) {
  const bool active = a.v < lo || a.v > hi;
  if (active) {
    a.v = a.v < lo ? lo : hi;
    a.freeze();
  }
  if (clamped != nullptr) *clamped = active;
  return a;
}

}  // namespace hessmc

#endif
