#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "deltamix/container.hpp"
#include "deltamix/pipeline.hpp"

namespace deltamix {

// JSON-lines run report: one {"type":"layer"} object per compressed layer,
// one {"type":"failure"} per lenient failure, then a single {"type":"summary"}.
// The schema is described in docs/formats.md.
nlohmann::json layer_json(const LayerResult& result, const CompressConfig& config);
nlohmann::json summary_json(const ModelResult& model);
void write_report(std::ostream& out, const ModelResult& model,
                  const CompressConfig& config);

// The parts of a layer line the CSV emitters need.
struct ReportLayer {
  std::string name;
  std::vector<double> sigma;
  std::vector<int> scheme;
  ErrorTable table;
};

// Throws a lookup error when the report holds no layer lines, a corruption
// error on malformed JSON.
std::vector<ReportLayer> read_report(std::istream& in);

// row,sigma,bit
void emit_scheme_csv(std::ostream& out, const ReportLayer& layer);
// row,bit,scaling,difference,error
void emit_error_csv(std::ostream& out, const ReportLayer& layer);
// row,scaling,difference@<b>...
void emit_figure2_csv(std::ostream& out, const ReportLayer& layer);

struct VerifyRow {
  LayerStats stats;
  bool budget_ok = true;
  bool roundtrip_ok = true;
  double roundtrip_max_abs = 0.0;
};

void emit_verify_csv(std::ostream& out, const std::vector<VerifyRow>& rows);
void emit_group_csv(std::ostream& out, const ModelSummary& summary);

}  // namespace deltamix
