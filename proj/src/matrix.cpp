#include "deltamix/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "deltamix/error.hpp"

namespace deltamix {

namespace {

std::string dims(const DenseMatrix& a) {
  return std::to_string(a.rows()) + "x" + std::to_string(a.cols());
}

}  // namespace

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols,
                         std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw_error(ErrorKind::kShape,
                "matrix data length " + std::to_string(data_.size()) +
                    " does not match " + std::to_string(rows_) + "x" +
                    std::to_string(cols_));
  }
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

DenseMatrix DenseMatrix::diagonal(std::span<const double> diag) {
  DenseMatrix m(diag.size(), diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
  return m;
}

std::vector<double> DenseMatrix::col(std::size_t j) const {
  std::vector<double> out(rows_);
  for (std::size_t i = 0; i < rows_; ++i) out[i] = (*this)(i, j);
  return out;
}

DenseMatrix DenseMatrix::transposed() const {
  DenseMatrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) {
    throw_error(ErrorKind::kShape,
                "matmul: " + dims(a) + " times " + dims(b));
  }
  DenseMatrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto ci = c.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      auto bk = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += aik * bk[j];
    }
  }
  return c;
}

DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.cols()) {
    throw_error(ErrorKind::kShape,
                "matmul_nt: " + dims(a) + " times transpose of " + dims(b));
  }
  DenseMatrix c(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j) c(i, j) = dot(a.row(i), b.row(j));
  return c;
}

DenseMatrix operator+(const DenseMatrix& a, const DenseMatrix& b) {
  require_same_shape(a, b, "matrix sum");
  DenseMatrix c = a;
  auto cd = c.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < cd.size(); ++i) cd[i] += bd[i];
  return c;
}

DenseMatrix operator-(const DenseMatrix& a, const DenseMatrix& b) {
  require_same_shape(a, b, "matrix difference");
  DenseMatrix c = a;
  auto cd = c.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < cd.size(); ++i) cd[i] -= bd[i];
  return c;
}

DenseMatrix operator*(double s, const DenseMatrix& a) {
  DenseMatrix c = a;
  for (double& v : c.data()) v *= s;
  return c;
}

DenseMatrix scale_rows(std::span<const double> d, const DenseMatrix& a) {
  if (d.size() != a.rows()) {
    throw_error(ErrorKind::kShape, "scale_rows: " + std::to_string(d.size()) +
                                       " scales for " + dims(a));
  }
  DenseMatrix c = a;
  for (std::size_t i = 0; i < c.rows(); ++i)
    for (double& v : c.row(i)) v *= d[i];
  return c;
}

DenseMatrix scale_cols(const DenseMatrix& a, std::span<const double> d) {
  if (d.size() != a.cols()) {
    throw_error(ErrorKind::kShape, "scale_cols: " + std::to_string(d.size()) +
                                       " scales for " + dims(a));
  }
  DenseMatrix c = a;
  for (std::size_t i = 0; i < c.rows(); ++i) {
    auto ci = c.row(i);
    for (std::size_t j = 0; j < ci.size(); ++j) ci[j] *= d[j];
  }
  return c;
}

double frobenius_norm(const DenseMatrix& a) {
  double s = 0.0;
  for (double v : a.data()) s += v * v;
  return std::sqrt(s);
}

double max_abs(const DenseMatrix& a) {
  double m = 0.0;
  for (double v : a.data()) m = std::max(m, std::abs(v));
  return m;
}

double trace(const DenseMatrix& a) {
  double t = 0.0;
  for (std::size_t i = 0; i < std::min(a.rows(), a.cols()); ++i) t += a(i, i);
  return t;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double quadratic_form(std::span<const double> x, const DenseMatrix& a) {
  if (a.rows() != x.size() || a.cols() != x.size()) {
    throw_error(ErrorKind::kShape, "quadratic_form: vector of length " +
                                       std::to_string(x.size()) + " with " +
                                       dims(a));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] == 0.0) continue;
    s += x[i] * dot(a.row(i), x);
  }
  return s;
}

bool all_finite(const DenseMatrix& a) {
  for (double v : a.data())
    if (!std::isfinite(v)) return false;
  return true;
}

void require_finite(const DenseMatrix& a, std::string_view what) {
  if (!all_finite(a)) {
    throw_error(ErrorKind::kShape,
                std::string(what) + " (" + dims(a) + ") contains NaN or Inf");
  }
}

void require_same_shape(const DenseMatrix& a, const DenseMatrix& b,
                        std::string_view what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw_error(ErrorKind::kShape,
                std::string(what) + ": " + dims(a) + " vs " + dims(b));
  }
}

}  // namespace deltamix
