#ifndef HESSMC_LINALG_HPP
#define HESSMC_LINALG_HPP

#include <array>
#include <cstddef>
#include <initializer_list>
#include <optional>
#include <span>
#include <stdexcept>

/**
 * \file
 * \brief Small dense vectors and symmetric matrices for parameter-space work.
 *
 * Parameter spaces here have dimension 2 or 3, so every object is stored in a
 * fixed-capacity buffer sized at runtime and never allocates.
 */

namespace hessmc {

inline constexpr std::size_t kMaxDim = 16;

class NotPositiveDefinite : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Dense real vector with fixed capacity.
class Vector {
 public:
  Vector() = default;
  explicit Vector(std::size_t dim, double fill = 0.0);
  Vector(std::initializer_list<double> values);
  explicit Vector(std::span<const double> values);

  [[nodiscard]] std::size_t size() const { return dim_; }
  [[nodiscard]] bool empty() const { return dim_ == 0; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double* begin() { return data_.data(); }
  double* end() { return data_.data() + dim_; }
  [[nodiscard]] const double* begin() const { return data_.data(); }
  [[nodiscard]] const double* end() const { return data_.data() + dim_; }

  [[nodiscard]] std::span<const double> span() const { return {data_.data(), dim_}; }

  Vector& operator+=(const Vector& other);
  Vector& operator-=(const Vector& other);
  Vector& operator*=(double s);

  friend bool operator==(const Vector& a, const Vector& b);

 private:
  std::size_t dim_ = 0;
  std::array<double, kMaxDim> data_{};
};

Vector operator+(Vector a, const Vector& b);
Vector operator-(Vector a, const Vector& b);
Vector operator-(Vector a);
Vector operator*(double s, Vector a);
Vector operator*(Vector a, double s);
double dot(const Vector& a, const Vector& b);

/// Dense square matrix, row-major.
class SquareMatrix {
 public:
  SquareMatrix() = default;
  explicit SquareMatrix(std::size_t dim, double fill = 0.0);

  [[nodiscard]] std::size_t dim() const { return dim_; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * dim_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * dim_ + j]; }

  static SquareMatrix identity(std::size_t dim);

 private:
  std::size_t dim_ = 0;
  std::array<double, kMaxDim * kMaxDim> data_{};
};

SquareMatrix operator*(const SquareMatrix& a, const SquareMatrix& b);
Vector operator*(const SquareMatrix& a, const Vector& x);
SquareMatrix transpose(const SquareMatrix& a);

/// Symmetric matrix; inputs are symmetrized as (M + M^T) / 2.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(std::size_t dim, double fill = 0.0);
  explicit SymMatrix(const SquareMatrix& m);
  SymMatrix(std::initializer_list<std::initializer_list<double>> rows);

  static SymMatrix identity(std::size_t dim);
  static SymMatrix diagonal(const Vector& diag);

  [[nodiscard]] std::size_t dim() const { return dim_; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * dim_ + j]; }

  /// Writes both (i, j) and (j, i).
  void set(std::size_t i, std::size_t j, double value);
  void add(std::size_t i, std::size_t j, double value);

  [[nodiscard]] SquareMatrix to_square() const;

  SymMatrix& operator*=(double s);
  friend bool operator==(const SymMatrix& a, const SymMatrix& b);

 private:
  std::size_t dim_ = 0;
  std::array<double, kMaxDim * kMaxDim> data_{};
};

SymMatrix operator+(const SymMatrix& a, const SymMatrix& b);
SymMatrix operator*(double s, SymMatrix a);
Vector operator*(const SymMatrix& a, const Vector& x);

/// Lower-triangular Cholesky factor L with L L^T equal to the source matrix.
struct CholFactor {
  SquareMatrix lower;

  [[nodiscard]] std::size_t dim() const { return lower.dim(); }
};

/// Throws NotPositiveDefinite when a pivot is <= 1e-12 * max|diag|.
CholFactor cholesky(const SymMatrix& m);
std::optional<CholFactor> try_cholesky(const SymMatrix& m);

SymMatrix inverse_spd(const SymMatrix& m);
SymMatrix inverse_from_cholesky(const CholFactor& chol);

double log_det_spd(const SymMatrix& m);
double log_det(const CholFactor& chol);

/// mean + L * noise
Vector mvn_sample(const Vector& mean, const CholFactor& cov_chol, const Vector& noise);

double mvn_logpdf(const Vector& x, const Vector& mean, const SymMatrix& cov);
double mvn_logpdf(const Vector& x, const Vector& mean, const CholFactor& cov_chol);

}  // namespace hessmc

#endif
