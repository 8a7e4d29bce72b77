#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "deltamix/error_model.hpp"
#include "deltamix/matrix.hpp"

namespace deltamix {

// Mixed-precision allocation instance: pick one candidate bit per row,
// using at most f_max distinct bits, with Σ storage ≤ budget, minimizing the
// summed error. Storage and budget are in bit-units.
struct AllocProblem {
  DenseMatrix error;                    // r × N_b
  std::vector<int> bits;                // candidates, ascending
  std::vector<std::int64_t> storage;    // per-row cost of each candidate
  std::int64_t budget = 0;
  int f_max = 1;

  std::size_t rows() const noexcept { return error.rows(); }
};

// storage[k] = (h_in + h_out) · bits[k]: one row of V plus one column of U.
AllocProblem make_alloc_problem(const ErrorTable& table, std::size_t h_in,
                                std::size_t h_out, std::int64_t budget,
                                int f_max);

struct BitScheme {
  std::vector<int> assignment;   // bit per row
  std::vector<int> active_bits;  // distinct bits used, ascending
  double objective = 0.0;
  std::int64_t spent = 0;

  bool operator==(const BitScheme&) const = default;
};

struct AllocOptions {
  // Above this the exact dynamic program switches to branch and bound.
  std::size_t dp_memory_cap_bytes = std::size_t{2} << 30;
  int threads = 0;
};

// Exact solver. Among optimal schemes, prefers fewer bit-units, then the
// lexicographically smallest assignment. Throws InfeasibleError (with the
// minimal budget) when no assignment fits.
BitScheme solve(const AllocProblem& problem, const AllocOptions& options = {});

// Checks a scheme against the problem's constraints only.
bool is_feasible(const AllocProblem& problem, const BitScheme& scheme);

// Σ error(i, assignment_i) in row order.
double scheme_objective(const AllocProblem& problem,
                        std::span<const int> assignment);
std::int64_t scheme_cost(const AllocProblem& problem,
                         std::span<const int> assignment);

// Assembles a BitScheme (objective, spent, active set) for a fixed assignment.
BitScheme make_scheme(const AllocProblem& problem,
                      std::span<const int> assignment);

// budget = alpha · source_bits · h_in · h_out, floored to whole bit-units.
std::int64_t budget_from_alpha(double alpha, int source_bits, std::size_t h_in,
                               std::size_t h_out);
// budget = gbit · h_in · h_out.
std::int64_t budget_from_gbit(double gbit, std::size_t h_in, std::size_t h_out);

}  // namespace deltamix
