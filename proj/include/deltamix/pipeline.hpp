#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "deltamix/bit_alloc.hpp"
#include "deltamix/error.hpp"
#include "deltamix/error_model.hpp"
#include "deltamix/gptq.hpp"
#include "deltamix/gram.hpp"
#include "deltamix/matrix.hpp"
#include "deltamix/rtc.hpp"

namespace deltamix {

enum class FailureMode { kStrict, kLenient };

struct CompressConfig {
  std::vector<int> bits{0, 2, 3, 4, 5, 6, 7, 8};
  // Budget source: gbit (average bits per parameter) wins over alpha.
  std::optional<double> alpha = 1.0 / 16.0;
  std::optional<double> gbit;
  int source_bits = 16;
  int f_max = 4;
  double damp_rel = 0.01;
  double eps_rel = kDefaultRtcEps;
  bool rtc = true;
  std::uint64_t seed = 0;
  FailureMode mode = FailureMode::kStrict;
  double outlier_fraction = 0.01;
  std::size_t dp_memory_cap_bytes = std::size_t{2} << 30;
  int threads = 1;
};

struct LayerJob {
  std::string name;
  DenseMatrix delta;  // h_out × h_in
  GramMatrix calib_gram{0};
  // Raw activations (h_in × n); needed only for the outlier breakdown.
  std::optional<DenseMatrix> calib_x;
  CompressConfig config;
  // Bypasses the allocator, e.g. for uniform-bit baselines.
  std::optional<std::vector<int>> forced_scheme;
};

LayerJob make_job(std::string name, DenseMatrix delta, DenseMatrix calib_x,
                  CompressConfig config = {});

struct LayerErrors {
  double e_v = 0.0;         // Σ sigma_i² ΔV_i g ΔV_iᵀ at the chosen bits
  double e_u = 0.0;         // Σ ½ ΔU_j H_U ΔU_jᵀ
  double end_to_end = 0.0;  // ‖W·X − Û·Σ·V̂·X‖²_F
  double all_mean = 0.0;    // end_to_end per input activation entry
  double out_mean = 0.0;    // masked error per outlier activation (NaN without X)
  std::size_t outlier_count = 0;
};

struct StageTimings {
  double svd_ms = 0.0;
  double error_table_ms = 0.0;
  double solve_ms = 0.0;
  double quant_v_ms = 0.0;
  double rtc_ms = 0.0;
  double quant_u_ms = 0.0;
};

struct LayerResult {
  std::string name;
  std::size_t h_out = 0;
  std::size_t h_in = 0;
  std::int64_t budget = 0;
  std::vector<double> sigma;
  ErrorTable table;
  BitScheme scheme;
  QuantizedFactor v_quant;
  QuantizedFactor u_quant;
  LayerErrors errors;
  StageTimings timings;
  double damp_rel_v = 0.0;  // after any escalation
  double damp_rel_u = 0.0;
  bool rtc_applied = false;

  // Û · diag(sigma) · V̂
  DenseMatrix reconstruct() const;
  // Σ over rows of (h_in + h_out) · bit.
  std::int64_t payload_bits() const;
};

DenseMatrix reconstruct_from_factors(const DenseMatrix& u_hat,
                                     std::span<const double> sigma,
                                     const DenseMatrix& v_hat);

// Hessian of the calibration loss with respect to row i of V: 2·sigma_i²·g.
DenseMatrix v_row_hessian(const GramMatrix& gram, double sigma_i);
// Hessian shared by every row of U: 2·(Σ·V̂)·g·(Σ·V̂)ᵀ.
DenseMatrix u_hessian(std::span<const double> sigma, const DenseMatrix& v_hat,
                      const GramMatrix& gram);

std::int64_t layer_budget(const CompressConfig& config, std::size_t h_in,
                          std::size_t h_out);

// A failure inside compress_layer, attributed to the stage that raised it.
class StageError : public Error {
 public:
  StageError(ErrorKind kind, std::string layer, std::string stage,
             const std::string& what)
      : Error(kind, "layer '" + layer + "' stage '" + stage + "': " + what),
        layer_(std::move(layer)),
        stage_(std::move(stage)) {}

  const std::string& layer() const noexcept { return layer_; }
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string layer_;
  std::string stage_;
};

// SVD → error table → allocation → quantize V → RTC → quantize U.
LayerResult compress_layer(const LayerJob& job);

struct OutlierMask {
  DenseMatrix masked;  // x with every non-outlier entry zeroed
  std::size_t count = 0;
};

// Keeps the ceil(fraction · size) largest-magnitude entries (at least one);
// ties go to the lower flat index.
OutlierMask outlier_mask(const DenseMatrix& x, double fraction);

struct LayerStats {
  std::string name;
  double end_to_end = 0.0;
  double all_mean = 0.0;
  double out_mean = 0.0;
  std::int64_t payload_bits = 0;
  std::int64_t budget = 0;
};

struct GroupStats {
  std::string group;  // Low / Mid / High
  std::size_t layers = 0;
  double mean_end_to_end = 0.0;
  double mean_all = 0.0;
  double mean_out = 0.0;
};

struct ModelSummary {
  std::size_t layers = 0;
  std::size_t failed = 0;
  std::int64_t total_payload_bits = 0;
  std::int64_t total_budget = 0;
  double total_end_to_end = 0.0;
  double mean_end_to_end = 0.0;
  double mean_all = 0.0;
  double mean_out = 0.0;
  std::vector<GroupStats> groups;
};

// Splits layers (in model order) into thirds: index·3/count picks the group.
ModelSummary summarize(const std::vector<LayerStats>& layers);
LayerStats stats_of(const LayerResult& result);

struct LayerFailure {
  std::string name;
  std::string stage;
  ErrorKind kind = ErrorKind::kConfig;
  std::string message;
};

struct ModelResult {
  std::vector<LayerResult> layers;  // job order, failed layers omitted
  std::vector<LayerFailure> failures;
  ModelSummary summary;
};

// Layers run independently (up to `threads` at a time). Strict jobs rethrow
// the first failure in job order; lenient ones record it and continue.
ModelResult compress_model(const std::vector<LayerJob>& jobs, int threads = 1);

}  // namespace deltamix
