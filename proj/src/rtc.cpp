#include "deltamix/rtc.hpp"

#include <algorithm>
#include <string>
#include <vector>

#include "deltamix/error.hpp"
#include "deltamix/error_model.hpp"
#include "deltamix/linalg.hpp"

namespace deltamix {

namespace {

void check(const SvdFactors& f, const DenseMatrix& v_hat, const GramMatrix& gram) {
  require_same_shape(f.v, v_hat, "rtc: V vs V_hat");
  if (f.v.cols() != gram.dim()) {
    throw_error(ErrorKind::kShape, "rtc: V has " + std::to_string(f.v.cols()) +
                                       " columns, gram dim is " +
                                       std::to_string(gram.dim()));
  }
}

}  // namespace

DenseMatrix correct_u(const SvdFactors& factors, const DenseMatrix& v_hat,
                      const GramMatrix& gram, double eps_rel) {
  check(factors, v_hat, gram);
  const std::size_t r = factors.rank();
  const DenseMatrix sv_hat = scale_rows(factors.sigma, v_hat);

  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < r; ++i) {
    bool nonzero = false;
    for (double x : sv_hat.row(i)) nonzero = nonzero || x != 0.0;
    if (nonzero) active.push_back(i);
  }
  DenseMatrix u_tilde(factors.u.rows(), r);
  if (active.empty()) return u_tilde;

  DenseMatrix a(active.size(), sv_hat.cols());
  for (std::size_t t = 0; t < active.size(); ++t) {
    auto src = sv_hat.row(active[t]);
    std::copy(src.begin(), src.end(), a.row(t).begin());
  }
  const DenseMatrix ag = matmul(a, gram.g());   // A·g
  const DenseMatrix normal = matmul_nt(ag, a);  // A·g·Aᵀ
  // Target side: (U·Σ·V)·g·Aᵀ, solved as normal · Zᵀ = (A·g)·(UΣV)ᵀ.
  const DenseMatrix rhs = matmul_nt(ag, factors.reconstruct());
  const DenseMatrix z = ridge_solve(normal, rhs, eps_rel);
  for (std::size_t t = 0; t < active.size(); ++t)
    for (std::size_t o = 0; o < u_tilde.rows(); ++o) u_tilde(o, active[t]) = z(t, o);
  return u_tilde;
}

double rtc_objective(const SvdFactors& factors, const DenseMatrix& u_tilde,
                     const DenseMatrix& v_hat, const GramMatrix& gram) {
  check(factors, v_hat, gram);
  const DenseMatrix approx = matmul(scale_cols(u_tilde, factors.sigma), v_hat);
  return output_error(factors.reconstruct(), approx, gram);
}

DenseMatrix rtc_gradient(const SvdFactors& factors, const DenseMatrix& u_tilde,
                         const DenseMatrix& v_hat, const GramMatrix& gram) {
  check(factors, v_hat, gram);
  const DenseMatrix sv_hat = scale_rows(factors.sigma, v_hat);
  const DenseMatrix resid = matmul(u_tilde, sv_hat) - factors.reconstruct();
  return matmul_nt(matmul(resid, gram.g()), sv_hat);
}

}  // namespace deltamix
