#include "deltamix/bit_alloc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>

#include "deltamix/error.hpp"
#include "deltamix/parallel.hpp"

namespace deltamix {

namespace {

constexpr double kTieRel = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

double tie_tolerance(double a, double b) {
  return kTieRel * std::max(std::abs(a), std::abs(b));
}

bool objective_less(double a, double b) {
  if (std::isinf(b)) return !std::isinf(a);
  if (std::isinf(a)) return false;
  return a < b - tie_tolerance(a, b);
}

bool objective_equal(double a, double b) {
  if (std::isinf(a) || std::isinf(b)) return std::isinf(a) && std::isinf(b);
  return std::abs(a - b) <= tie_tolerance(a, b);
}

struct Candidate {
  double objective = kInf;
  std::int64_t spent = 0;
  std::vector<int> assignment;
};

// Total order used for every comparison between schemes.
bool better(const Candidate& a, const Candidate& b) {
  if (objective_less(a.objective, b.objective)) return true;
  if (!objective_equal(a.objective, b.objective)) return false;
  if (a.spent != b.spent) return a.spent < b.spent;
  return a.assignment < b.assignment;
}

void validate(const AllocProblem& p) {
  const std::size_t nb = p.bits.size();
  if (nb == 0) throw_error(ErrorKind::kConfig, "no candidate bits");
  if (p.error.cols() != nb || p.storage.size() != nb) {
    throw_error(ErrorKind::kShape,
                "allocation problem: " + std::to_string(nb) + " bits, " +
                    std::to_string(p.storage.size()) + " storage entries, " +
                    std::to_string(p.error.cols()) + " error columns");
  }
  for (std::size_t k = 0; k < nb; ++k) {
    if (k > 0 && p.bits[k] <= p.bits[k - 1]) {
      throw_error(ErrorKind::kConfig, "candidate bits must be strictly ascending");
    }
    if (p.storage[k] < 0) {
      throw_error(ErrorKind::kConfig, "storage costs must be nonnegative");
    }
  }
  if (p.f_max < 1) throw_error(ErrorKind::kConfig, "f_max must be at least 1");
  require_finite(p.error, "error table");
}

struct Cell {
  double err = kInf;
  std::int64_t cost = 0;
};

bool cell_less(const Cell& a, const Cell& b) {
  if (objective_less(a.err, b.err)) return true;
  return objective_equal(a.err, b.err) && a.cost < b.cost;
}

bool cell_equal(const Cell& a, const Cell& b) {
  return objective_equal(a.err, b.err) && a.cost == b.cost;
}

class SubsetSolver {
 public:
  SubsetSolver(const AllocProblem& p, std::vector<std::size_t> subset,
               const AllocOptions& options)
      : p_(p), subset_(std::move(subset)), options_(options) {}

  std::optional<Candidate> run() {
    const std::size_t r = p_.rows();
    std::int64_t min_storage = std::numeric_limits<std::int64_t>::max();
    std::int64_t max_storage = 0;
    std::int64_t unit = 0;
    for (std::size_t k : subset_) {
      min_storage = std::min(min_storage, p_.storage[k]);
      max_storage = std::max(max_storage, p_.storage[k]);
      unit = std::gcd(unit, p_.storage[k]);
    }
    if (min_storage * static_cast<std::int64_t>(r) > p_.budget) return std::nullopt;
    if (unit == 0) return free_choice();

    const std::int64_t cap = std::min(p_.budget / unit,
                                      (max_storage / unit) * static_cast<std::int64_t>(r));
    const double cells = static_cast<double>(r + 1) * static_cast<double>(cap + 1);
    if (cells * sizeof(Cell) > static_cast<double>(options_.dp_memory_cap_bytes)) {
      return branch_and_bound();
    }
    return dynamic_program(unit, cap);
  }

 private:
  // Every candidate is free: each row independently takes its cheapest error.
  std::optional<Candidate> free_choice() {
    std::vector<std::size_t> pick(p_.rows());
    for (std::size_t i = 0; i < p_.rows(); ++i) {
      std::size_t best = subset_.front();
      for (std::size_t k : subset_)
        if (objective_less(p_.error(i, k), p_.error(i, best))) best = k;
      pick[i] = best;
    }
    return finish(pick);
  }

  std::optional<Candidate> dynamic_program(std::int64_t unit, std::int64_t cap) {
    const std::size_t r = p_.rows();
    const std::size_t width = static_cast<std::size_t>(cap) + 1;
    // best[i][c]: optimum over rows i.. with at most c units left.
    std::vector<Cell> best((r + 1) * width);
    for (std::size_t c = 0; c < width; ++c) best[r * width + c] = Cell{0.0, 0};
    std::vector<std::size_t> weight(p_.storage.size());
    for (std::size_t k : subset_)
      weight[k] = static_cast<std::size_t>(p_.storage[k] / unit);

    auto option = [&](std::size_t i, std::size_t c, std::size_t k) {
      Cell out;
      if (weight[k] > c) return out;
      const Cell& next = best[(i + 1) * width + (c - weight[k])];
      if (std::isinf(next.err)) return out;
      out.err = p_.error(i, k) + next.err;
      out.cost = p_.storage[k] + next.cost;
      return out;
    };

    for (std::size_t i = r; i-- > 0;) {
      for (std::size_t c = 0; c < width; ++c) {
        Cell cell;
        for (std::size_t k : subset_) {
          const Cell cand = option(i, c, k);
          if (cell_less(cand, cell)) cell = cand;
        }
        best[i * width + c] = cell;
      }
    }

    std::size_t c = width - 1;
    if (std::isinf(best[c].err)) return std::nullopt;
    std::vector<std::size_t> pick(r);
    for (std::size_t i = 0; i < r; ++i) {
      const Cell target = best[i * width + c];
      for (std::size_t k : subset_) {
        if (cell_equal(option(i, c, k), target)) {
          pick[i] = k;
          c -= weight[k];
          break;
        }
      }
    }
    return finish(pick);
  }

  // Depth-first search in lexicographic order with a Lagrangian lower bound.
  std::optional<Candidate> branch_and_bound() {
    const std::size_t r = p_.rows();
    suffix_min_storage_.assign(r + 1, 0);
    for (std::size_t i = r; i-- > 0;) {
      std::int64_t m = std::numeric_limits<std::int64_t>::max();
      for (std::size_t k : subset_) m = std::min(m, p_.storage[k]);
      suffix_min_storage_[i] = suffix_min_storage_[i + 1] + m;
    }
    std::int64_t min_gap = std::numeric_limits<std::int64_t>::max();
    for (std::size_t a : subset_)
      for (std::size_t b : subset_)
        if (p_.storage[a] > p_.storage[b])
          min_gap = std::min(min_gap, p_.storage[a] - p_.storage[b]);
    double spread = 0.0;
    for (std::size_t i = 0; i < r; ++i) {
      double lo = kInf;
      double hi = -kInf;
      for (std::size_t k : subset_) {
        lo = std::min(lo, p_.error(i, k));
        hi = std::max(hi, p_.error(i, k));
      }
      spread += hi - lo;
    }
    lambda_hi_ = min_gap == std::numeric_limits<std::int64_t>::max()
                     ? 0.0
                     : spread / static_cast<double>(min_gap) + 1.0;

    incumbent_.reset();
    path_.assign(r, 0);
    descend(0, p_.budget, 0.0, 0);
    if (!incumbent_) return std::nullopt;
    return incumbent_;
  }

  double lagrangian(std::size_t from, std::int64_t capacity, double lambda,
                    std::int64_t* subgradient) const {
    double total = -lambda * static_cast<double>(capacity);
    std::int64_t used = 0;
    for (std::size_t i = from; i < p_.rows(); ++i) {
      double best = kInf;
      std::int64_t best_cost = 0;
      for (std::size_t k : subset_) {
        const double v = p_.error(i, k) + lambda * static_cast<double>(p_.storage[k]);
        if (v < best) {
          best = v;
          best_cost = p_.storage[k];
        }
      }
      total += best;
      used += best_cost;
    }
    if (subgradient != nullptr) *subgradient = used - capacity;
    return total;
  }

  double lower_bound(std::size_t from, std::int64_t capacity) const {
    std::int64_t g = 0;
    double bound = lagrangian(from, capacity, 0.0, &g);
    if (g <= 0 || lambda_hi_ <= 0.0) return bound;
    double lo = 0.0;
    double hi = lambda_hi_;
    for (int it = 0; it < 40; ++it) {
      const double mid = 0.5 * (lo + hi);
      bound = std::max(bound, lagrangian(from, capacity, mid, &g));
      if (g > 0) lo = mid; else hi = mid;
    }
    return bound;
  }

  void descend(std::size_t i, std::int64_t remaining, double partial,
               std::int64_t spent) {
    const std::size_t r = p_.rows();
    if (i == r) {
      Candidate cand;
      cand.objective = partial;
      cand.spent = spent;
      cand.assignment.resize(r);
      for (std::size_t t = 0; t < r; ++t) cand.assignment[t] = p_.bits[path_[t]];
      if (!incumbent_ || better(cand, *incumbent_)) incumbent_ = std::move(cand);
      return;
    }
    if (suffix_min_storage_[i] > remaining) return;
    if (incumbent_) {
      const double bound = partial + lower_bound(i, remaining);
      const double inc = incumbent_->objective;
      if (objective_less(inc, bound)) return;
      // Only ties remain reachable; later leaves are lexicographically larger,
      // so they win only with strictly fewer bit-units.
      if (!objective_less(bound, inc) &&
          spent + suffix_min_storage_[i] >= incumbent_->spent) {
        return;
      }
    }
    for (std::size_t k : subset_) {
      if (p_.storage[k] > remaining) continue;
      path_[i] = k;
      descend(i + 1, remaining - p_.storage[k], partial + p_.error(i, k),
              spent + p_.storage[k]);
    }
  }

  std::optional<Candidate> finish(const std::vector<std::size_t>& pick) const {
    Candidate c;
    c.assignment.resize(pick.size());
    for (std::size_t i = 0; i < pick.size(); ++i) {
      c.assignment[i] = p_.bits[pick[i]];
      c.objective = (i == 0 ? 0.0 : c.objective) + p_.error(i, pick[i]);
      c.spent += p_.storage[pick[i]];
    }
    if (pick.empty()) c.objective = 0.0;
    if (c.spent > p_.budget) return std::nullopt;
    return c;
  }

  const AllocProblem& p_;
  std::vector<std::size_t> subset_;
  const AllocOptions& options_;

  std::vector<std::int64_t> suffix_min_storage_;
  std::vector<std::size_t> path_;
  double lambda_hi_ = 0.0;
  std::optional<Candidate> incumbent_;
};

std::vector<std::vector<std::size_t>> combinations(
    const std::vector<std::size_t>& pool, std::size_t m) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> idx(m);
  std::iota(idx.begin(), idx.end(), 0);
  while (true) {
    std::vector<std::size_t> combo(m);
    for (std::size_t t = 0; t < m; ++t) combo[t] = pool[idx[t]];
    out.push_back(std::move(combo));
    std::size_t t = m;
    while (t > 0 && idx[t - 1] == pool.size() - m + (t - 1)) --t;
    if (t == 0) break;
    ++idx[t - 1];
    for (std::size_t u = t; u < m; ++u) idx[u] = idx[u - 1] + 1;
  }
  return out;
}

std::size_t bit_index(const AllocProblem& p, int bit) {
  for (std::size_t k = 0; k < p.bits.size(); ++k)
    if (p.bits[k] == bit) return k;
  throw_error(ErrorKind::kConfig,
              "bit " + std::to_string(bit) + " is not a candidate");
}

}  // namespace

AllocProblem make_alloc_problem(const ErrorTable& table, std::size_t h_in,
                                std::size_t h_out, std::int64_t budget,
                                int f_max) {
  AllocProblem p;
  p.error = table.error;
  p.bits = table.bits;
  p.storage.resize(table.bits.size());
  for (std::size_t k = 0; k < table.bits.size(); ++k) {
    p.storage[k] = static_cast<std::int64_t>(h_in + h_out) * table.bits[k];
  }
  p.budget = budget;
  p.f_max = f_max;
  return p;
}

BitScheme solve(const AllocProblem& problem, const AllocOptions& options) {
  validate(problem);
  const std::size_t r = problem.rows();
  const std::int64_t min_storage =
      *std::min_element(problem.storage.begin(), problem.storage.end());
  const std::int64_t minimal_budget = min_storage * static_cast<std::int64_t>(r);
  if (problem.budget < 0 || minimal_budget > problem.budget) {
    throw InfeasibleError("bit budget " + std::to_string(problem.budget) +
                              " is below the minimal feasible budget " +
                              std::to_string(minimal_budget),
                          minimal_budget);
  }
  if (r == 0) return BitScheme{};

  // Bits too expensive for even a single row can never be active; any
  // feasible scheme lives inside some maximal subset of the remaining ones.
  std::vector<std::size_t> usable;
  for (std::size_t k = 0; k < problem.bits.size(); ++k)
    if (problem.storage[k] <= problem.budget) usable.push_back(k);
  const std::size_t m =
      std::min(static_cast<std::size_t>(problem.f_max), usable.size());
  const auto subsets = combinations(usable, m);

  std::vector<std::optional<Candidate>> results(subsets.size());
  parallel_for(subsets.size(), options.threads, [&](std::size_t s) {
    results[s] = SubsetSolver(problem, subsets[s], options).run();
  });

  std::optional<Candidate> best;
  for (auto& res : results) {
    if (res && (!best || better(*res, *best))) best = std::move(res);
  }
  if (!best) {
    throw InfeasibleError("no assignment fits the bit budget " +
                              std::to_string(problem.budget),
                          minimal_budget);
  }
  return make_scheme(problem, best->assignment);
}

double scheme_objective(const AllocProblem& problem,
                        std::span<const int> assignment) {
  double total = 0.0;
  for (std::size_t i = 0; i < assignment.size(); ++i)
    total += problem.error(i, bit_index(problem, assignment[i]));
  return total;
}

std::int64_t scheme_cost(const AllocProblem& problem,
                         std::span<const int> assignment) {
  std::int64_t total = 0;
  for (int b : assignment) total += problem.storage[bit_index(problem, b)];
  return total;
}

BitScheme make_scheme(const AllocProblem& problem,
                      std::span<const int> assignment) {
  if (assignment.size() != problem.rows()) {
    throw_error(ErrorKind::kShape, "scheme has " +
                                       std::to_string(assignment.size()) +
                                       " rows, problem has " +
                                       std::to_string(problem.rows()));
  }
  BitScheme s;
  s.assignment.assign(assignment.begin(), assignment.end());
  s.active_bits = s.assignment;
  std::sort(s.active_bits.begin(), s.active_bits.end());
  s.active_bits.erase(std::unique(s.active_bits.begin(), s.active_bits.end()),
                      s.active_bits.end());
  s.objective = scheme_objective(problem, assignment);
  s.spent = scheme_cost(problem, assignment);
  return s;
}

bool is_feasible(const AllocProblem& problem, const BitScheme& scheme) {
  if (scheme.assignment.size() != problem.rows()) return false;
  std::vector<bool> used(problem.bits.size(), false);
  std::int64_t spent = 0;
  for (int b : scheme.assignment) {
    const auto it = std::find(problem.bits.begin(), problem.bits.end(), b);
    if (it == problem.bits.end()) return false;
    const auto k = static_cast<std::size_t>(it - problem.bits.begin());
    used[k] = true;
    spent += problem.storage[k];
  }
  const auto distinct = std::count(used.begin(), used.end(), true);
  return distinct <= problem.f_max && spent <= problem.budget &&
         spent == scheme.spent;
}

std::int64_t budget_from_alpha(double alpha, int source_bits, std::size_t h_in,
                               std::size_t h_out) {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw_error(ErrorKind::kConfig, "alpha must lie in (0, 1]");
  }
  if (source_bits != 16 && source_bits != 32) {
    throw_error(ErrorKind::kConfig, "source bits must be 16 or 32");
  }
  return budget_from_gbit(alpha * source_bits, h_in, h_out);
}

std::int64_t budget_from_gbit(double gbit, std::size_t h_in, std::size_t h_out) {
  if (!(gbit >= 0.0) || !std::isfinite(gbit)) {
    throw_error(ErrorKind::kConfig, "average bit-width must be finite and >= 0");
  }
  const double raw = gbit * static_cast<double>(h_in) * static_cast<double>(h_out);
  // Absorb rounding in products like (1/16)·16 before flooring.
  return static_cast<std::int64_t>(std::floor(raw * (1.0 + 1e-12)));
}

}  // namespace deltamix
