#include <hessmc/linalg.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace hessmc {

namespace {

void check_dim(std::size_t dim) {
  if (dim > kMaxDim) {
    throw DimensionMismatch("dimension " + std::to_string(dim) + " exceeds capacity " +
                            std::to_string(kMaxDim));
  }
}

void check_same(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw DimensionMismatch(std::string(what) + ": " + std::to_string(a) + " vs " + std::to_string(b));
  }
}

}  // namespace

Vector::Vector(std::size_t dim, double fill) : dim_(dim) {
  check_dim(dim);
  std::fill_n(data_.begin(), dim_, fill);
}

Vector::Vector(std::initializer_list<double> values) : dim_(values.size()) {
  check_dim(dim_);
  std::copy(values.begin(), values.end(), data_.begin());
}

Vector::Vector(std::span<const double> values) : dim_(values.size()) {
  check_dim(dim_);
  std::copy(values.begin(), values.end(), data_.begin());
}

Vector& Vector::operator+=(const Vector& other) {
  check_same(dim_, other.dim_, "vector add");
  for (std::size_t i = 0; i < dim_; ++i) data_[i] += other.data_[i];
  return *this;
}

Vector& Vector::operator-=(const Vector& other) {
  check_same(dim_, other.dim_, "vector subtract");
  for (std::size_t i = 0; i < dim_; ++i) data_[i] -= other.data_[i];
  return *this;
}

Vector& Vector::operator*=(double s) {
  for (std::size_t i = 0; i < dim_; ++i) data_[i] *= s;
  return *this;
}

bool operator==(const Vector& a, const Vector& b) {
  return a.dim_ == b.dim_ && std::equal(a.begin(), a.end(), b.begin());
}

Vector operator+(Vector a, const Vector& b) { return a += b; }
Vector operator-(Vector a, const Vector& b) { return a -= b; }
Vector operator-(Vector a) { return a *= -1.0; }
Vector operator*(double s, Vector a) { return a *= s; }
Vector operator*(Vector a, double s) { return a *= s; }

double dot(const Vector& a, const Vector& b) {
  check_same(a.size(), b.size(), "dot");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

SquareMatrix::SquareMatrix(std::size_t dim, double fill) : dim_(dim) {
  check_dim(dim);
  std::fill_n(data_.begin(), dim_ * dim_, fill);
}

SquareMatrix SquareMatrix::identity(std::size_t dim) {
  SquareMatrix m(dim);
  for (std::size_t i = 0; i < dim; ++i) m(i, i) = 1.0;
  return m;
}

SquareMatrix operator*(const SquareMatrix& a, const SquareMatrix& b) {
  check_same(a.dim(), b.dim(), "matrix product");
  const std::size_t n = a.dim();
  SquareMatrix out(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < n; ++k) acc += a(i, k) * b(k, j);
      out(i, j) = acc;
    }
  return out;
}

Vector operator*(const SquareMatrix& a, const Vector& x) {
  check_same(a.dim(), x.size(), "matrix-vector product");
  Vector out(x.size());
  for (std::size_t i = 0; i < a.dim(); ++i) {
    double acc = 0.0;
    for (std::size_t k = 0; k < a.dim(); ++k) acc += a(i, k) * x[k];
    out[i] = acc;
  }
  return out;
}

SquareMatrix transpose(const SquareMatrix& a) {
  SquareMatrix out(a.dim());
  for (std::size_t i = 0; i < a.dim(); ++i)
    for (std::size_t j = 0; j < a.dim(); ++j) out(j, i) = a(i, j);
  return out;
}

SymMatrix::SymMatrix(std::size_t dim, double fill) : dim_(dim) {
  check_dim(dim);
  std::fill_n(data_.begin(), dim_ * dim_, fill);
}

SymMatrix::SymMatrix(const SquareMatrix& m) : SymMatrix(m.dim()) {
  for (std::size_t i = 0; i < dim_; ++i)
    for (std::size_t j = i; j < dim_; ++j) set(i, j, 0.5 * (m(i, j) + m(j, i)));
}

SymMatrix::SymMatrix(std::initializer_list<std::initializer_list<double>> rows) {
  SquareMatrix m(rows.size());
  std::size_t i = 0;
  for (const auto& row : rows) {
    check_same(row.size(), rows.size(), "matrix row");
    std::size_t j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  *this = SymMatrix(m);
}

SymMatrix SymMatrix::identity(std::size_t dim) {
  SymMatrix m(dim);
  for (std::size_t i = 0; i < dim; ++i) m.set(i, i, 1.0);
  return m;
}

SymMatrix SymMatrix::diagonal(const Vector& diag) {
  SymMatrix m(diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) m.set(i, i, diag[i]);
  return m;
}

void SymMatrix::set(std::size_t i, std::size_t j, double value) {
  data_[i * dim_ + j] = value;
  data_[j * dim_ + i] = value;
}

void SymMatrix::add(std::size_t i, std::size_t j, double value) {
  data_[i * dim_ + j] += value;
  if (i != j) data_[j * dim_ + i] += value;
}

SquareMatrix SymMatrix::to_square() const {
  SquareMatrix out(dim_);
  for (std::size_t i = 0; i < dim_; ++i)
    for (std::size_t j = 0; j < dim_; ++j) out(i, j) = (*this)(i, j);
  return out;
}

SymMatrix& SymMatrix::operator*=(double s) {
  for (std::size_t k = 0; k < dim_ * dim_; ++k) data_[k] *= s;
  return *this;
}

bool operator==(const SymMatrix& a, const SymMatrix& b) {
  return a.dim_ == b.dim_ &&
         std::equal(a.data_.begin(), a.data_.begin() + a.dim_ * a.dim_, b.data_.begin());
}

SymMatrix operator+(const SymMatrix& a, const SymMatrix& b) {
  check_same(a.dim(), b.dim(), "matrix add");
  SymMatrix out(a.dim());
  for (std::size_t i = 0; i < a.dim(); ++i)
    for (std::size_t j = i; j < a.dim(); ++j) out.set(i, j, a(i, j) + b(i, j));
  return out;
}

SymMatrix operator*(double s, SymMatrix a) { return a *= s; }

Vector operator*(const SymMatrix& a, const Vector& x) {
  check_same(a.dim(), x.size(), "matrix-vector product");
  Vector out(x.size());
  for (std::size_t i = 0; i < a.dim(); ++i) {
    double acc = 0.0;
    for (std::size_t k = 0; k < a.dim(); ++k) acc += a(i, k) * x[k];
    out[i] = acc;
  }
  return out;
}

std::optional<CholFactor> try_cholesky(const SymMatrix& m) {
  const std::size_t n = m.dim();
  if (n == 0) return std::nullopt;
  double max_diag = 0.0;
  for (std::size_t i = 0; i < n; ++i) max_diag = std::max(max_diag, std::abs(m(i, i)));
  const double tol = 1e-12 * max_diag;

  CholFactor chol{SquareMatrix(n)};
  auto& l = chol.lower;
  for (std::size_t j = 0; j < n; ++j) {
    double pivot = m(j, j);
    for (std::size_t k = 0; k < j; ++k) pivot -= l(j, k) * l(j, k);
    // also rejects NaN
    if (!(pivot > tol)) return std::nullopt;
    const double ljj = std::sqrt(pivot);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double acc = m(i, j);
      for (std::size_t k = 0; k < j; ++k) acc -= l(i, k) * l(j, k);
      l(i, j) = acc / ljj;
    }
  }
  return chol;
}

CholFactor cholesky(const SymMatrix& m) {
  auto chol = try_cholesky(m);
  if (!chol) throw NotPositiveDefinite("matrix is not positive definite");
  return *std::move(chol);
}

namespace {

/// Solves L z = b by forward substitution.
Vector forward_solve(const SquareMatrix& l, const Vector& b) {
  Vector z(b.size());
  for (std::size_t i = 0; i < b.size(); ++i) {
    double acc = b[i];
    for (std::size_t k = 0; k < i; ++k) acc -= l(i, k) * z[k];
    z[i] = acc / l(i, i);
  }
  return z;
}

}  // namespace

SymMatrix inverse_from_cholesky(const CholFactor& chol) {
  const std::size_t n = chol.dim();
  const auto& l = chol.lower;
  // columns of L^{-1}
  SquareMatrix linv(n);
  for (std::size_t c = 0; c < n; ++c) {
    Vector e(n);
    e[c] = 1.0;
    const Vector z = forward_solve(l, e);
    for (std::size_t r = 0; r < n; ++r) linv(r, c) = z[r];
  }
  // A^{-1} = L^{-T} L^{-1}
  SymMatrix out(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t k = std::max(i, j); k < n; ++k) acc += linv(k, i) * linv(k, j);
      out.set(i, j, acc);
    }
  return out;
}

SymMatrix inverse_spd(const SymMatrix& m) { return inverse_from_cholesky(cholesky(m)); }

double log_det(const CholFactor& chol) {
  double acc = 0.0;
  for (std::size_t i = 0; i < chol.dim(); ++i) acc += std::log(chol.lower(i, i));
  return 2.0 * acc;
}

double log_det_spd(const SymMatrix& m) { return log_det(cholesky(m)); }

Vector mvn_sample(const Vector& mean, const CholFactor& cov_chol, const Vector& noise) {
  check_same(mean.size(), cov_chol.dim(), "mvn_sample mean");
  check_same(noise.size(), cov_chol.dim(), "mvn_sample noise");
  return mean + cov_chol.lower * noise;
}

double mvn_logpdf(const Vector& x, const Vector& mean, const CholFactor& cov_chol) {
  check_same(x.size(), mean.size(), "mvn_logpdf");
  check_same(x.size(), cov_chol.dim(), "mvn_logpdf covariance");
  const Vector z = forward_solve(cov_chol.lower, x - mean);
  const double d = static_cast<double>(x.size());
  return -0.5 * (d * std::log(2.0 * std::numbers::pi) + log_det(cov_chol) + dot(z, z));
}

double mvn_logpdf(const Vector& x, const Vector& mean, const SymMatrix& cov) {
  return mvn_logpdf(x, mean, cholesky(cov));
}

}  // namespace hessmc
