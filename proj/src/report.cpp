#include "deltamix/report.hpp"

#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <string>

#include "deltamix/error.hpp"

namespace deltamix {

using nlohmann::json;

namespace {

json matrix_rows(const DenseMatrix& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto r = m.row(i);
    rows.push_back(std::vector<double>(r.begin(), r.end()));
  }
  return rows;
}

DenseMatrix matrix_from(const json& rows, std::size_t cols) {
  DenseMatrix m(rows.size(), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != cols) throw_error(ErrorKind::kCorruption, "report: ragged table row");
    for (std::size_t k = 0; k < cols; ++k) m(i, k) = rows[i][k].get<double>();
  }
  return m;
}


std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

json layer_json(const LayerResult& r, const CompressConfig& config) {
  const SizeReport size = size_report(to_record(r));
  json j;
  j["type"] = "layer";
  j["name"] = r.name;
  j["h_out"] = r.h_out;
  j["h_in"] = r.h_in;
  j["budget_bits"] = r.budget;
  j["payload_bits"] = r.payload_bits();
  j["padding_bits"] = size.padding_bits;
  j["metadata_bytes"] = size.metadata_bytes;
  j["record_bytes"] = size.record_bytes;
  j["sigma"] = r.sigma;
  j["scheme"] = r.scheme.assignment;
  j["active_bits"] = r.scheme.active_bits;
  j["objective"] = r.scheme.objective;
  j["table"] = {{"bits", r.table.bits},
                {"scaling", r.table.scaling},
                {"difference", matrix_rows(r.table.difference)},
                {"error", matrix_rows(r.table.error)}};
  j["errors"] = {{"e_v", r.errors.e_v},
                 {"e_u", r.errors.e_u},
                 {"end_to_end", r.errors.end_to_end},
                 {"all_mean", r.errors.all_mean},
                 {"out_mean", r.errors.out_mean},
                 {"outlier_count", r.errors.outlier_count}};
  j["timings_ms"] = {{"svd", r.timings.svd_ms},
                     {"error_table", r.timings.error_table_ms},
                     {"solve", r.timings.solve_ms},
                     {"quant_v", r.timings.quant_v_ms},
                     {"rtc", r.timings.rtc_ms},
                     {"quant_u", r.timings.quant_u_ms}};
  j["settings"] = {{"damp_rel", config.damp_rel},
                   {"damp_rel_v", r.damp_rel_v},
                   {"damp_rel_u", r.damp_rel_u},
                   {"gptq_order", "natural"},
                   {"rtc", r.rtc_applied},
                   {"rtc_eps_rel", config.eps_rel},
                   {"f_max", config.f_max},
                   {"metadata_in_budget", false}};
  return j;
}

json summary_json(const ModelResult& model) {
  const ModelSummary& s = model.summary;
  json groups = json::array();
  for (const auto& g : s.groups) {
    groups.push_back({{"group", g.group},
                      {"layers", g.layers},
                      {"mean_end_to_end", g.mean_end_to_end},
                      {"mean_all", g.mean_all},
                      {"mean_out", g.mean_out}});
  }
  return {{"type", "summary"},
          {"layers", s.layers},
          {"failed", s.failed},
          {"total_payload_bits", s.total_payload_bits},
          {"total_budget_bits", s.total_budget},
          {"total_end_to_end", s.total_end_to_end},
          {"mean_end_to_end", s.mean_end_to_end},
          {"mean_all", s.mean_all},
          {"mean_out", s.mean_out},
          {"groups", groups}};
}

void write_report(std::ostream& out, const ModelResult& model,
                  const CompressConfig& config) {
  for (const auto& layer : model.layers) out << layer_json(layer, config).dump() << '\n';
  for (const auto& f : model.failures) {
    json j = {{"type", "failure"},
              {"name", f.name},
              {"stage", f.stage},
              {"kind", to_string(f.kind)},
              {"message", f.message}};
    out << j.dump() << '\n';
  }
  out << summary_json(model).dump() << '\n';
}

std::vector<ReportLayer> read_report(std::istream& in) {
  std::vector<ReportLayer> layers;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      if (j.value("type", "") != "layer") continue;
      ReportLayer l;
      l.name = j.at("name").get<std::string>();
      l.sigma = j.at("sigma").get<std::vector<double>>();
      l.scheme = j.at("scheme").get<std::vector<int>>();
      const json& t = j.at("table");
      l.table.bits = t.at("bits").get<std::vector<int>>();
      l.table.scaling = t.at("scaling").get<std::vector<double>>();
      l.table.difference = matrix_from(t.at("difference"), l.table.bits.size());
      l.table.error = matrix_from(t.at("error"), l.table.bits.size());
      if (l.table.difference.rows() != l.table.scaling.size() ||
          l.table.error.rows() != l.table.scaling.size() ||
          l.scheme.size() != l.sigma.size()) {
        throw_error(ErrorKind::kCorruption, "inconsistent layer line");
      }
      layers.push_back(std::move(l));
    } catch (const json::exception& e) {
      throw_error(ErrorKind::kCorruption,
                  "report line " + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      throw_error(ErrorKind::kCorruption,
                  "report line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (layers.empty()) throw_error(ErrorKind::kLookup, "report holds no layer lines");
  return layers;
}

void emit_scheme_csv(std::ostream& out, const ReportLayer& layer) {
  out << "row,sigma,bit\n";
  for (std::size_t i = 0; i < layer.sigma.size(); ++i)
    out << i << ',' << fmt(layer.sigma[i]) << ',' << layer.scheme[i] << '\n';
}

void emit_error_csv(std::ostream& out, const ReportLayer& layer) {
  const ErrorTable& t = layer.table;
  out << "row,bit,scaling,difference,error\n";
  for (std::size_t i = 0; i < t.rows(); ++i)
    for (std::size_t k = 0; k < t.bits.size(); ++k)
      out << i << ',' << t.bits[k] << ',' << fmt(t.scaling[i]) << ','
          << fmt(t.difference(i, k)) << ',' << fmt(t.error(i, k)) << '\n';
}

void emit_figure2_csv(std::ostream& out, const ReportLayer& layer) {
  const ErrorTable& t = layer.table;
  out << "row,scaling";
  for (int b : t.bits) out << ",difference@" << b;
  out << '\n';
  for (std::size_t i = 0; i < t.rows(); ++i) {
    out << i << ',' << fmt(t.scaling[i]);
    for (std::size_t k = 0; k < t.bits.size(); ++k) out << ',' << fmt(t.difference(i, k));
    out << '\n';
  }
}

void emit_verify_csv(std::ostream& out, const std::vector<VerifyRow>& rows) {
  out << "layer,payload_bits,budget_bits,budget_ok,roundtrip_ok,roundtrip_max_abs,"
         "end_to_end,all,out\n";
  for (const auto& r : rows) {
    out << r.stats.name << ',' << r.stats.payload_bits << ',' << r.stats.budget << ','
        << (r.budget_ok ? 1 : 0) << ',' << (r.roundtrip_ok ? 1 : 0) << ','
        << fmt(r.roundtrip_max_abs) << ',' << fmt(r.stats.end_to_end) << ','
        << fmt(r.stats.all_mean) << ',' << fmt(r.stats.out_mean) << '\n';
  }
}

void emit_group_csv(std::ostream& out, const ModelSummary& summary) {
  out << "group,layers,end_to_end,all,out\n";
  for (const auto& g : summary.groups) {
    out << g.group << ',' << g.layers << ',' << fmt(g.mean_end_to_end) << ','
        << fmt(g.mean_all) << ',' << fmt(g.mean_out) << '\n';
  }
}

}  // namespace deltamix
