#include "deltamix/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "deltamix/parallel.hpp"
#include "deltamix/svd.hpp"

namespace deltamix {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

class StageClock {
 public:
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double ms =
        std::chrono::duration<double, std::milli>(now - start_).count();
    start_ = now;
    return ms;
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// Runs one stage, re-raising library errors with layer and stage attached.
template <typename Fn>
auto stage(const std::string& layer, const char* name, Fn&& fn) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const InfeasibleError& e) {
    throw InfeasibleError("layer '" + layer + "' stage '" + name + "': " + e.what(),
                          e.minimal_budget());
  } catch (const Error& e) {
    throw StageError(e.kind(), layer, name, e.what());
  }
}

int smallest_nonzero(const std::vector<int>& bits) {
  int best = 0;
  for (int b : bits)
    if (b > 0 && (best == 0 || b < best)) best = b;
  return best;
}

double mean_of(const std::vector<double>& xs) {
  if (xs.empty()) return kNaN;
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

}  // namespace

LayerJob make_job(std::string name, DenseMatrix delta, DenseMatrix calib_x,
                  CompressConfig config) {
  LayerJob job;
  job.name = std::move(name);
  job.delta = std::move(delta);
  job.calib_gram = gram_of(calib_x);
  job.calib_x = std::move(calib_x);
  job.config = std::move(config);
  return job;
}

DenseMatrix reconstruct_from_factors(const DenseMatrix& u_hat,
                                     std::span<const double> sigma,
                                     const DenseMatrix& v_hat) {
  return matmul(scale_cols(u_hat, sigma), v_hat);
}

DenseMatrix LayerResult::reconstruct() const {
  return reconstruct_from_factors(u_quant.dequantized, sigma, v_quant.dequantized);
}

std::int64_t LayerResult::payload_bits() const {
  std::int64_t total = 0;
  for (int b : scheme.assignment)
    total += static_cast<std::int64_t>(h_in + h_out) * b;
  return total;
}

DenseMatrix v_row_hessian(const GramMatrix& gram, double sigma_i) {
  return (2.0 * sigma_i * sigma_i) * gram.g();
}

DenseMatrix u_hessian(std::span<const double> sigma, const DenseMatrix& v_hat,
                      const GramMatrix& gram) {
  const DenseMatrix sv = scale_rows(sigma, v_hat);
  DenseMatrix h = 2.0 * matmul_nt(matmul(sv, gram.g()), sv);
  // Exact symmetry keeps the factorization independent of rounding order.
  for (std::size_t i = 0; i < h.rows(); ++i)
    for (std::size_t j = 0; j < i; ++j) h(i, j) = h(j, i);
  return h;
}

std::int64_t layer_budget(const CompressConfig& config, std::size_t h_in,
                          std::size_t h_out) {
  const double ratio = config.gbit ? *config.gbit
                                   : config.alpha.value_or(0.0) * config.source_bits;
  if (!(ratio > 0.0)) {
    const int b = smallest_nonzero(config.bits);
    const std::int64_t one_row = static_cast<std::int64_t>(h_in + h_out) * b;
    throw InfeasibleError(
        "compression ratio must be positive; the smallest budget that keeps "
        "one singular vector is " + std::to_string(one_row) + " bit-units (alpha >= " +
            std::to_string(static_cast<double>(one_row) /
                           (config.source_bits * static_cast<double>(h_in * h_out))) +
            ")",
        one_row);
  }
  if (config.gbit) return budget_from_gbit(*config.gbit, h_in, h_out);
  return budget_from_alpha(*config.alpha, config.source_bits, h_in, h_out);
}

LayerResult compress_layer(const LayerJob& job) {
  const CompressConfig& cfg = job.config;
  const std::string& name = job.name;
  const std::size_t h_out = job.delta.rows();
  const std::size_t h_in = job.delta.cols();

  stage(name, "validate", [&] {
    if (job.calib_gram.dim() != h_in) {
      throw_error(ErrorKind::kShape,
                  "calibration dim " + std::to_string(job.calib_gram.dim()) +
                      " does not match delta input dim " + std::to_string(h_in));
    }
    require_finite(job.delta, "delta");
    return 0;
  });

  LayerResult res;
  res.name = name;
  res.h_out = h_out;
  res.h_in = h_in;
  res.budget = stage(name, "budget", [&] { return layer_budget(cfg, h_in, h_out); });

  StageClock clock;
  const SvdFactors factors = stage(name, "svd", [&] { return svd(job.delta); });
  res.sigma = factors.sigma;
  res.timings.svd_ms = clock.lap();

  GptqOptions gptq;
  gptq.damp_rel = cfg.damp_rel;
  ErrorModelOptions em;
  em.gptq = gptq;
  em.threads = cfg.threads;
  res.table = stage(name, "error_table", [&] {
    return build_error_table(factors.v, factors.sigma, job.calib_gram, cfg.bits, em);
  });
  res.timings.error_table_ms = clock.lap();

  const AllocProblem problem =
      make_alloc_problem(res.table, h_in, h_out, res.budget, cfg.f_max);
  res.scheme = stage(name, "solve", [&] {
    if (job.forced_scheme) {
      BitScheme forced = make_scheme(problem, *job.forced_scheme);
      if (!is_feasible(problem, forced)) {
        throw_error(ErrorKind::kConfig, "forced scheme violates the budget or f_max");
      }
      return forced;
    }
    AllocOptions ao;
    ao.dp_memory_cap_bytes = cfg.dp_memory_cap_bytes;
    ao.threads = cfg.threads;
    return solve(problem, ao);
  });
  res.timings.solve_ms = clock.lap();

  const std::vector<int>& assignment = res.scheme.assignment;
  res.v_quant = stage(name, "quantize_v", [&] {
    const HessianContext ctx = HessianContext::build(2.0 * job.calib_gram.g(), gptq);
    res.damp_rel_v = ctx.damp_rel_used();
    return quantize_matrix_rows(factors.v, ctx, assignment, Axis::kRow, cfg.threads);
  });
  res.timings.quant_v_ms = clock.lap();

  const DenseMatrix& v_hat = res.v_quant.dequantized;
  const DenseMatrix u_target = stage(name, "rtc", [&] {
    if (!cfg.rtc) return factors.u;
    return correct_u(factors, v_hat, job.calib_gram, cfg.eps_rel);
  });
  res.rtc_applied = cfg.rtc;
  res.timings.rtc_ms = clock.lap();

  res.u_quant = stage(name, "quantize_u", [&] {
    const HessianContext ctx =
        HessianContext::build(u_hessian(factors.sigma, v_hat, job.calib_gram), gptq);
    res.damp_rel_u = ctx.damp_rel_used();
    return quantize_matrix_rows(u_target, ctx, assignment, Axis::kColumn, cfg.threads);
  });
  res.timings.quant_u_ms = clock.lap();

  stage(name, "evaluate", [&] {
    const std::vector<double> ev =
        calc_loss(factors.v, v_hat, factors.sigma, job.calib_gram);
    res.errors.e_v = std::accumulate(ev.begin(), ev.end(), 0.0);
    res.errors.e_u = res.u_quant.total_error;
    const DenseMatrix w_hat = res.reconstruct();
    res.errors.end_to_end = output_error(job.delta, w_hat, job.calib_gram);
    const double entries =
        static_cast<double>(h_in) * static_cast<double>(job.calib_gram.n_samples());
    res.errors.all_mean = entries > 0.0 ? res.errors.end_to_end / entries : kNaN;
    res.errors.out_mean = kNaN;
    if (job.calib_x) {
      const OutlierMask mask = outlier_mask(*job.calib_x, cfg.outlier_fraction);
      res.errors.outlier_count = mask.count;
      res.errors.out_mean = output_error(job.delta, w_hat, gram_of(mask.masked)) /
                            static_cast<double>(mask.count);
    }
    if (!std::isfinite(res.errors.end_to_end)) {
      throw_error(ErrorKind::kFactorization, "end-to-end error is not finite");
    }
    return 0;
  });
  return res;
}

OutlierMask outlier_mask(const DenseMatrix& x, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw_error(ErrorKind::kConfig, "outlier fraction must lie in (0, 1]");
  }
  const std::size_t total = x.size();
  OutlierMask out;
  out.masked = DenseMatrix(x.rows(), x.cols());
  if (total == 0) return out;
  const auto keep = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(total) - 1e-9)));
  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), 0);
  const auto data = x.data();
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep),
                    order.end(), [&](std::size_t a, std::size_t b) {
                      const double fa = std::abs(data[a]);
                      const double fb = std::abs(data[b]);
                      return fa != fb ? fa > fb : a < b;
                    });
  auto masked = out.masked.data();
  for (std::size_t t = 0; t < keep; ++t) masked[order[t]] = data[order[t]];
  out.count = keep;
  return out;
}

LayerStats stats_of(const LayerResult& result) {
  return {result.name, result.errors.end_to_end, result.errors.all_mean,
          result.errors.out_mean, result.payload_bits(), result.budget};
}

ModelSummary summarize(const std::vector<LayerStats>& layers) {
  static const char* kGroupNames[] = {"Low", "Mid", "High"};
  ModelSummary s;
  s.layers = layers.size();
  std::vector<double> e2e;
  std::vector<double> all;
  std::vector<double> out;
  std::vector<double> g_e2e[3];
  std::vector<double> g_all[3];
  std::vector<double> g_out[3];
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerStats& l = layers[i];
    const std::size_t g = i * 3 / layers.size();
    s.total_payload_bits += l.payload_bits;
    s.total_budget += l.budget;
    s.total_end_to_end += l.end_to_end;
    e2e.push_back(l.end_to_end);
    g_e2e[g].push_back(l.end_to_end);
    if (!std::isnan(l.all_mean)) {
      all.push_back(l.all_mean);
      g_all[g].push_back(l.all_mean);
    }
    if (!std::isnan(l.out_mean)) {
      out.push_back(l.out_mean);
      g_out[g].push_back(l.out_mean);
    }
  }
  s.mean_end_to_end = mean_of(e2e);
  s.mean_all = mean_of(all);
  s.mean_out = mean_of(out);
  for (std::size_t g = 0; g < 3; ++g) {
    s.groups.push_back({kGroupNames[g], g_e2e[g].size(), mean_of(g_e2e[g]),
                        mean_of(g_all[g]), mean_of(g_out[g])});
  }
  return s;
}

ModelResult compress_model(const std::vector<LayerJob>& jobs, int threads) {
  std::set<std::string> names;
  for (const auto& job : jobs) {
    if (!names.insert(job.name).second) {
      throw_error(ErrorKind::kConfig, "duplicate layer name '" + job.name + "'");
    }
  }

  std::vector<std::optional<LayerResult>> results(jobs.size());
  std::vector<std::optional<LayerFailure>> failures(jobs.size());
  std::vector<std::exception_ptr> strict_errors(jobs.size());
  parallel_for(jobs.size(), threads, [&](std::size_t i) {
    try {
      results[i] = compress_layer(jobs[i]);
    } catch (const Error& e) {
      if (jobs[i].config.mode == FailureMode::kStrict) {
        strict_errors[i] = std::current_exception();
        return;
      }
      const auto* se = dynamic_cast<const StageError*>(&e);
      failures[i] = LayerFailure{jobs[i].name, se ? se->stage() : "solve", e.kind(),
                                 e.what()};
    }
  });
  for (auto& e : strict_errors)
    if (e) std::rethrow_exception(e);

  ModelResult model;
  std::vector<LayerStats> stats;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (results[i]) {
      stats.push_back(stats_of(*results[i]));
      model.layers.push_back(std::move(*results[i]));
    }
    if (failures[i]) model.failures.push_back(std::move(*failures[i]));
  }
  model.summary = summarize(stats);
  model.summary.failed = model.failures.size();
  return model;
}

}  // namespace deltamix
