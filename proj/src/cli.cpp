#include "deltamix/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include "deltamix/bytes.hpp"
#include "deltamix/calib_io.hpp"
#include "deltamix/container.hpp"
#include "deltamix/error.hpp"
#include "deltamix/pipeline.hpp"
#include "deltamix/report.hpp"

namespace deltamix::cli {

namespace fs = std::filesystem;

namespace {

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInfeasible:
      return kInfeasible;
    case ErrorKind::kFactorization:
    case ErrorKind::kSingular:
    case ErrorKind::kIllConditioned:
      return kNumerical;
    case ErrorKind::kLookup:
      return kNotFound;
    case ErrorKind::kCorruption:
      return kIntegrity;
    case ErrorKind::kShape:
    case ErrorKind::kUnsupportedBits:
    case ErrorKind::kConfig:
      return kUsage;
  }
  return kUsage;
}

// "layer10" sorts after "layer9".
bool natural_less(const std::string& a, const std::string& b) {
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.size() && j < b.size()) {
    const bool da = std::isdigit(static_cast<unsigned char>(a[i]));
    const bool db = std::isdigit(static_cast<unsigned char>(b[j]));
    if (da && db) {
      std::size_t ei = i;
      std::size_t ej = j;
      while (ei < a.size() && std::isdigit(static_cast<unsigned char>(a[ei]))) ++ei;
      while (ej < b.size() && std::isdigit(static_cast<unsigned char>(b[ej]))) ++ej;
      std::string na = a.substr(i, ei - i);
      std::string nb = b.substr(j, ej - j);
      na.erase(0, std::min(na.find_first_not_of('0'), na.size()));
      nb.erase(0, std::min(nb.find_first_not_of('0'), nb.size()));
      if (na.size() != nb.size()) return na.size() < nb.size();
      if (na != nb) return na < nb;
      i = ei;
      j = ej;
    } else {
      if (a[i] != b[j]) return a[i] < b[j];
      ++i;
      ++j;
    }
  }
  return a.size() - i < b.size() - j;
}

struct NamedMatrix {
  std::string name;
  fs::path path;
};

// A directory of <name>.calx files, or a single file.
std::vector<NamedMatrix> list_deltas(const std::string& where) {
  const fs::path p(where);
  if (!fs::exists(p)) throw_error(ErrorKind::kLookup, "no such file or directory: " + where);
  std::vector<NamedMatrix> found;
  if (fs::is_directory(p)) {
    for (const auto& entry : fs::directory_iterator(p)) {
      if (entry.is_regular_file() && entry.path().extension() == ".calx")
        found.push_back({entry.path().stem().string(), entry.path()});
    }
  } else {
    found.push_back({p.stem().string(), p});
  }
  if (found.empty()) throw_error(ErrorKind::kLookup, "no .calx matrices in " + where);
  std::sort(found.begin(), found.end(),
            [](const NamedMatrix& a, const NamedMatrix& b) { return natural_less(a.name, b.name); });
  return found;
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 14695981039346656037ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

// --calib: a CALX file shared by every layer, a directory of <name>.calx, or
// synth:<distribution>[:n=<samples>].
class CalibSource {
 public:
  CalibSource(std::string spec, std::uint64_t seed) : spec_(std::move(spec)), seed_(seed) {
    if (spec_.rfind("synth:", 0) == 0) {
      std::string rest = spec_.substr(6);
      const auto pos = rest.rfind(":n=");
      if (pos != std::string::npos) {
        try {
          samples_ = std::stoull(rest.substr(pos + 3));
        } catch (const std::exception&) {
          throw_error(ErrorKind::kConfig, "bad sample count in --calib " + spec_);
        }
        rest = rest.substr(0, pos);
      }
      dist_ = parse_distribution(rest);
    } else if (!fs::exists(spec_)) {
      throw_error(ErrorKind::kLookup, "no such calibration source: " + spec_);
    }
  }

  DenseMatrix activations(const std::string& layer, std::size_t dim) const {
    if (dist_) return synth_activations(dim, samples_, *dist_, seed_ ^ fnv1a(layer));
    if (fs::is_directory(spec_)) return load_activations(fs::path(spec_) / (layer + ".calx"), dim);
    return load_activations(spec_, dim);
  }

 private:
  std::string spec_;
  std::uint64_t seed_;
  std::optional<Distribution> dist_;
  std::size_t samples_ = 256;
};

std::vector<int> parse_bits(const std::string& csv) {
  std::vector<int> bits;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      bits.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw_error(ErrorKind::kConfig, "bad bit-width '" + item + "' in --bits");
    }
  }
  if (bits.empty()) throw_error(ErrorKind::kConfig, "--bits is empty");
  std::sort(bits.begin(), bits.end());
  if (std::adjacent_find(bits.begin(), bits.end()) != bits.end())
    throw_error(ErrorKind::kConfig, "--bits lists a bit-width twice");
  return bits;
}

struct CompressArgs {
  std::string delta;
  std::string calib;
  std::optional<double> alpha;
  std::optional<double> gbit;
  int source_bits = 16;
  std::string bits = "0,2,3,4,5,6,7,8";
  int f_max = 4;
  std::string out;
  std::uint64_t seed = 0;
  bool no_rtc = false;
  std::string report;
  bool lenient = false;
  int threads = 1;
};

int cmd_compress(const CompressArgs& a, std::ostream& out, std::ostream& err) {
  CompressConfig cfg;
  cfg.bits = parse_bits(a.bits);
  cfg.alpha = a.gbit ? std::nullopt : std::optional<double>(a.alpha.value_or(1.0 / 16.0));
  cfg.gbit = a.gbit;
  cfg.source_bits = a.source_bits;
  cfg.f_max = a.f_max;
  cfg.rtc = !a.no_rtc;
  cfg.seed = a.seed;
  cfg.mode = a.lenient ? FailureMode::kLenient : FailureMode::kStrict;

  const auto deltas = list_deltas(a.delta);
  const CalibSource calib(a.calib, a.seed);
  std::vector<LayerJob> jobs;
  for (const auto& d : deltas) {
    try {
      DenseMatrix delta = load_matrix(d.path);
      DenseMatrix x = calib.activations(d.name, delta.cols());
      jobs.push_back(make_job(d.name, std::move(delta), std::move(x), cfg));
    } catch (const Error& e) {
      if (!a.lenient) throw;
      err << "warning: layer '" << d.name << "' skipped while loading: " << e.what() << '\n';
    }
  }

  const ModelResult model = compress_model(jobs, a.threads);
  for (const auto& f : model.failures)
    err << "warning: layer '" << f.name << "' failed in stage " << f.stage << ": "
        << f.message << '\n';

  CompressedDelta container;
  for (const auto& layer : model.layers) {
    const auto& active = layer.scheme.active_bits;
    if (active.empty() || (active.size() == 1 && active[0] == 0))
      err << "warning: layer '" << layer.name
          << "' keeps no singular vectors at this budget; it reconstructs to zero\n";
    container.layers.push_back(to_record(layer));
  }
  save_container(a.out, container);

  if (!a.report.empty()) {
    std::ofstream rep(a.report);
    if (!rep) throw_error(ErrorKind::kLookup, "cannot write report " + a.report);
    write_report(rep, model, cfg);
  }

  out << "layer,payload_bits,budget_bits,end_to_end\n";
  for (const auto& layer : model.layers)
    out << layer.name << ',' << layer.payload_bits() << ',' << layer.budget << ','
        << layer.errors.end_to_end << '\n';
  return kOk;
}

int cmd_reconstruct(const std::string& in, const std::string& layer,
                    const std::string& dest) {
  const CompressedDelta container = load_container(in);
  save_matrix(dest, reconstruct(container, layer));
  return kOk;
}

int cmd_verify(const std::string& in, const std::string& delta_dir,
               const std::string& calib_spec, std::uint64_t seed, std::ostream& out,
               std::ostream& err) {
  const std::vector<std::uint8_t> bytes = read_file(in);
  const CompressedDelta container = unpack(bytes);
  if (container.layers.empty()) throw_error(ErrorKind::kLookup, "container holds no layers");

  std::map<std::string, fs::path> deltas;
  for (const auto& d : list_deltas(delta_dir)) deltas[d.name] = d.path;
  const CalibSource calib(calib_spec, seed);

  const bool repack_ok = pack(container) == bytes;
  std::vector<VerifyRow> rows;
  std::vector<LayerStats> stats;
  bool ok = repack_ok;
  for (const auto& rec : container.layers) {
    const auto it = deltas.find(rec.name);
    if (it == deltas.end()) throw_error(ErrorKind::kLookup, "no delta matrix for layer '" + rec.name + "'");
    const DenseMatrix delta = load_matrix(it->second);
    if (delta.rows() != rec.h_out || delta.cols() != rec.h_in)
      throw_error(ErrorKind::kShape, "layer '" + rec.name + "' shape differs from its delta");
    const DenseMatrix x = calib.activations(rec.name, rec.h_in);
    const GramMatrix gram = gram_of(x);

    const DenseMatrix w_hat = reconstruct(rec);
    CompressedDelta single;
    single.layers.push_back(rec);
    const DenseMatrix w_again = reconstruct(unpack(pack(single)).layers.at(0));

    VerifyRow row;
    row.stats.name = rec.name;
    row.stats.payload_bits = static_cast<std::int64_t>(rec.payload_bits);
    row.stats.budget = static_cast<std::int64_t>(rec.budget_bits);
    row.stats.end_to_end = output_error(delta, w_hat, gram);
    row.stats.all_mean =
        row.stats.end_to_end / static_cast<double>(x.rows() * x.cols());
    const OutlierMask mask = outlier_mask(x, 0.01);
    row.stats.out_mean =
        output_error(delta, w_hat, gram_of(mask.masked)) / static_cast<double>(mask.count);
    row.budget_ok = rec.payload_bits <= rec.budget_bits;
    row.roundtrip_max_abs = max_abs(w_hat - w_again);
    row.roundtrip_ok = repack_ok && row.roundtrip_max_abs == 0.0;
    ok = ok && row.budget_ok && row.roundtrip_ok;
    stats.push_back(row.stats);
    rows.push_back(row);
  }
  emit_verify_csv(out, rows);
  out << '\n';
  emit_group_csv(out, summarize(stats));
  if (!ok) {
    err << "error: integrity check failed (see budget_ok / roundtrip_ok columns)\n";
    return kIntegrity;
  }
  return kOk;
}

int cmd_report(const std::string& in, const std::string& emit, const std::string& layer,
               std::ostream& out) {
  std::ifstream f(in);
  if (!f) throw_error(ErrorKind::kLookup, "cannot open report " + in);
  const std::vector<ReportLayer> layers = read_report(f);
  const ReportLayer* chosen = nullptr;
  if (layer.empty()) {
    if (layers.size() > 1)
      throw_error(ErrorKind::kConfig, "report holds several layers; pick one with --layer");
    chosen = &layers.front();
  } else {
    for (const auto& l : layers)
      if (l.name == layer) chosen = &l;
    if (!chosen) throw_error(ErrorKind::kLookup, "no layer named '" + layer + "' in report");
  }
  if (emit == "scheme_csv") {
    emit_scheme_csv(out, *chosen);
  } else if (emit == "error_csv") {
    emit_error_csv(out, *chosen);
  } else {
    emit_figure2_csv(out, *chosen);
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Mixed-precision compression of low-rank weight deltas", "deltamix"};
  app.require_subcommand(1);

  CompressArgs ca;
  auto* compress = app.add_subcommand("compress", "Compress a directory of delta matrices");
  compress->add_option("--delta", ca.delta, "Directory of <layer>.calx deltas (or one file)")->required();
  compress->add_option("--calib", ca.calib, "CALX file, directory, or synth:<dist>[:n=N]")->required();
  auto* alpha = compress->add_option("--alpha", ca.alpha, "Compressed/original size ratio");
  auto* gbit = compress->add_option("--gbit", ca.gbit, "Average bits per delta parameter");
  alpha->excludes(gbit);
  compress->add_option("--source-bits", ca.source_bits, "Bits per original parameter")
      ->check(CLI::IsMember({16, 32}));
  compress->add_option("--bits", ca.bits, "Candidate bit-widths, comma separated");
  compress->add_option("--fmax", ca.f_max, "Most distinct bit-widths per layer")
      ->check(CLI::PositiveNumber);
  compress->add_option("--out", ca.out, "Output container")->required();
  compress->add_option("--seed", ca.seed, "Seed for synthetic calibration");
  compress->add_flag("--no-rtc", ca.no_rtc, "Skip reconstruction target correction");
  compress->add_option("--report", ca.report, "JSON-lines run report");
  auto* strict = compress->add_flag("--strict", "Abort on the first failing layer (default)");
  auto* lenient = compress->add_flag("--lenient", ca.lenient, "Skip failing layers");
  strict->excludes(lenient);
  compress->add_option("--threads", ca.threads, "Layers compressed in parallel (0 = all cores)")
      ->check(CLI::NonNegativeNumber);

  std::string in;
  std::string layer;
  std::string dest;
  auto* recon = app.add_subcommand("reconstruct", "Write one layer's reconstructed delta");
  recon->add_option("--in", in, "Container")->required();
  recon->add_option("--layer", layer, "Layer name")->required();
  recon->add_option("--out", dest, "Output CALX file")->required();

  std::string v_delta;
  std::string v_calib;
  std::uint64_t v_seed = 0;
  auto* verify = app.add_subcommand("verify", "Check a container against its source deltas");
  verify->add_option("--in", in, "Container")->required();
  verify->add_option("--delta", v_delta, "Directory of source deltas")->required();
  verify->add_option("--calib", v_calib, "Calibration source, as for compress")->required();
  verify->add_option("--seed", v_seed, "Seed used for synthetic calibration");

  std::string emit;
  auto* report = app.add_subcommand("report", "Turn a run report into CSV");
  report->add_option("--in", in, "JSON-lines report")->required();
  report->add_option("--emit", emit, "scheme_csv, error_csv or figure2_csv")
      ->required()
      ->check(CLI::IsMember({"scheme_csv", "error_csv", "figure2_csv"}));
  report->add_option("--layer", layer, "Layer name (required for multi-layer reports)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*compress) return cmd_compress(ca, out, err);
    if (*recon) return cmd_reconstruct(in, layer, dest);
    if (*verify) return cmd_verify(in, v_delta, v_calib, v_seed, out, err);
    return cmd_report(in, emit, layer, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    if (e.kind() == ErrorKind::kInfeasible) {
      if (const auto* inf = dynamic_cast<const InfeasibleError*>(&e))
        err << "hint: minimal budget is " << inf->minimal_budget() << " bit-units\n";
    }
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
}

}  // namespace deltamix::cli
