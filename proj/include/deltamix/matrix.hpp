#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace deltamix {

// Row-major dense real matrix. All arithmetic in the library runs in double
// precision; narrower inputs are widened when loaded.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static DenseMatrix identity(std::size_t n);
  static DenseMatrix diagonal(std::span<const double> diag);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const {
    return data_[i * cols_ + j];
  }

  std::span<double> row(std::size_t i) {
    return {data_.data() + i * cols_, cols_};
  }
  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * cols_, cols_};
  }
  std::vector<double> col(std::size_t j) const;

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  DenseMatrix transposed() const;

  bool operator==(const DenseMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
// a · bᵀ without materializing the transpose.
DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix operator+(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix operator-(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix operator*(double s, const DenseMatrix& a);

// diag(d) · a
DenseMatrix scale_rows(std::span<const double> d, const DenseMatrix& a);
// a · diag(d)
DenseMatrix scale_cols(const DenseMatrix& a, std::span<const double> d);

double frobenius_norm(const DenseMatrix& a);
double max_abs(const DenseMatrix& a);
double trace(const DenseMatrix& a);
double dot(std::span<const double> a, std::span<const double> b);
// x · a · xᵀ for a square a.
double quadratic_form(std::span<const double> x, const DenseMatrix& a);

bool all_finite(const DenseMatrix& a);
// Throws a shape error naming `what` when any entry is NaN or Inf.
void require_finite(const DenseMatrix& a, std::string_view what);
void require_same_shape(const DenseMatrix& a, const DenseMatrix& b,
                        std::string_view what);

}  // namespace deltamix
