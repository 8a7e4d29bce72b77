#pragma once

#include "deltamix/gram.hpp"
#include "deltamix/matrix.hpp"
#include "deltamix/svd.hpp"

namespace deltamix {

inline constexpr double kDefaultRtcEps = 1e-8;

// Least-squares replacement for U against the quantized V:
//   argmin_Ũ ‖U·Σ·V·X − Ũ·Σ·V̂·X‖²_F.
// Indices whose row of Σ·V̂ is zero are dropped from the normal equations and
// get a zero column in Ũ. The reduced system is solved with a ridge of
// eps_rel · mean diagonal; eps_rel = 0 demands a nonsingular system.
DenseMatrix correct_u(const SvdFactors& factors, const DenseMatrix& v_hat,
                      const GramMatrix& gram, double eps_rel = kDefaultRtcEps);

// ‖U·Σ·V·X − Ũ·Σ·V̂·X‖²_F through the Gram matrix.
double rtc_objective(const SvdFactors& factors, const DenseMatrix& u_tilde,
                     const DenseMatrix& v_hat, const GramMatrix& gram);

// Gradient of ½‖Ũ·Σ·V̂·X − U·Σ·V·X‖²_F with respect to Ũ:
//   (Ũ·Σ·V̂ − U·Σ·V)·g·(Σ·V̂)ᵀ.
DenseMatrix rtc_gradient(const SvdFactors& factors, const DenseMatrix& u_tilde,
                         const DenseMatrix& v_hat, const GramMatrix& gram);

}  // namespace deltamix
