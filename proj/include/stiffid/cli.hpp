#pragma once

// The `stiffid` command line: identify, simulate and benchmark subcommands.
// run() is the whole program; tools/stiffid.cpp only forwards to it.

#include "stiffid/common.hpp"
#include "stiffid/io.hpp"
#include "stiffid/pipeline.hpp"
#include "stiffid/studies.hpp"
#include "stiffid/synthetic.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace stiffid::cli {

enum ExitCode : int { kOk = 0, kInputError = 2, kNumericalError = 3, kBandFailure = 4 };

enum class Format { Json, Text, Csv };

inline std::optional<Format> parse_format(std::string_view s) {
  if (s == "json") return Format::Json;
  if (s == "text") return Format::Text;
  if (s == "csv") return Format::Csv;
  return std::nullopt;
}

// STIFFID_LOG: quiet | info | debug (default quiet). Messages go to the
// error stream prefixed with "stiffid:".
class Logger {
 public:
  enum Level { Quiet = 0, Info = 1, Debug = 2 };

  explicit Logger(std::ostream& err) : err_(err) {
    if (const char* env = std::getenv("STIFFID_LOG")) {
      const std::string v(env);
      if (v == "info" || v == "1") level_ = Info;
      if (v == "debug" || v == "2") level_ = Debug;
    }
  }
  Logger(std::ostream& err, Level level) : err_(err), level_(level) {}

  void info(const std::string& msg) const { emit(Info, msg); }
  void debug(const std::string& msg) const { emit(Debug, msg); }

 private:
  void emit(Level at, const std::string& msg) const {
    if (level_ >= at) err_ << "stiffid: " << msg << '\n';
  }
  std::ostream& err_;
  Level level_ = Quiet;
};

inline void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    Error e(ErrorKind::Io, "cannot create output directory " + dir.string());
    e.file = dir.string();
    throw e;
  }
}

inline void write_text_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
  out.close();
  if (!out) {
    Error e(ErrorKind::Io, "cannot write " + path.string());
    e.file = path.string();
    throw e;
  }
}

inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// identify

struct IdentifyOverrides {
  std::optional<Estimator> estimator;
  std::optional<AngleExtractionMethod> angles;
  std::optional<double> outlier_fraction;
  std::optional<double> confidence_multiplier;
  bool no_symmetrize = false;
};

struct IdentifyOutputs {
  IdentificationResult result;
  Json compliance;
  Json significance;
  Json run_log;
  std::string table;
};

inline Json options_to_json(const PipelineOptions& o) {
  return Json{{"estimator", to_token(o.estimator)},
              {"angles", to_token(o.angles)},
              {"outlier_fraction", o.outlier_fraction},
              {"outlier_ranking", o.ranking == OutlierRanking::PerAxisMax ? "axis" : "norm"},
              {"filter_passes", o.filter_passes},
              {"confidence_multiplier", o.confidence_multiplier},
              {"significance", o.significance},
              {"symmetrize", o.symmetrize}};
}

inline IdentifyOutputs identify_manifest(const fs::path& manifest_path, const IdentifyOverrides& overrides,
                                         const Logger& log) {
  Manifest manifest = load_manifest(manifest_path);
  PipelineOptions options = manifest.options;
  if (overrides.estimator) options.estimator = *overrides.estimator;
  if (overrides.angles) options.angles = *overrides.angles;
  if (overrides.outlier_fraction) options.outlier_fraction = *overrides.outlier_fraction;
  if (overrides.confidence_multiplier) options.confidence_multiplier = *overrides.confidence_multiplier;
  if (overrides.no_symmetrize) options.symmetrize = false;
  if (!(options.outlier_fraction >= 0.0 && options.outlier_fraction < 1.0)) {
    throw Error(ErrorKind::InvalidFraction, "outlier fraction must lie in [0, 1)");
  }
  if (!(options.confidence_multiplier > 0.0)) {
    throw Error(ErrorKind::InvalidSpec, "confidence multiplier must be positive");
  }

  std::vector<ExperimentInput> inputs;
  for (std::size_t i = 0; i < manifest.experiments.size(); ++i) {
    const auto& x = manifest.experiments[i];
    try {
      inputs.push_back({read_field_csv(x.field_file, manifest.reference_point), x.wrench, x.sensor,
                        x.field_file.string()});
    } catch (Error& e) {
      e.experiment = i;
      throw;
    }
    log.debug("read " + x.field_file.string() + " (" + std::to_string(inputs.back().field.size()) + " nodes)");
  }

  IdentifyOutputs out;
  out.result = identify(inputs, options);
  const auto& r = out.result;

  out.compliance = compliance_to_json(r.compliance);
  out.compliance["assembled"] = matrix_to_json(r.assembled.k);
  try {
    out.compliance["stiffness"] = matrix_to_json(invert_to_stiffness(r.compliance));
  } catch (const Error&) {
    out.compliance["stiffness"] = nullptr;
  }
  out.significance = r.significance ? significance_to_json(*r.significance) : Json(nullptr);

  Json experiments = Json::array();
  for (std::size_t i = 0; i < r.experiments.size(); ++i) {
    const auto& d = r.diagnostics[i];
    const Vec6 v = r.experiments[i].deflection.as_vector();
    experiments.push_back({{"index", i},
                           {"field_file", inputs[i].source},
                           {"nodes_in", d.nodes_in},
                           {"nodes_selected", d.nodes_selected},
                           {"nodes_removed", d.nodes_removed},
                           {"sigma_initial", d.sigma_initial},
                           {"sigma_filtered", d.sigma_filtered},
                           {"within_linear_range", d.within_linear_range},
                           {"deflection", std::vector<double>(v.data(), v.data() + 6)}});
    log.info("experiment " + std::to_string(i) + ": n=" + std::to_string(d.nodes_selected) + " removed=" +
             std::to_string(d.nodes_removed) + " sigma=" + format_double(d.sigma_initial));
  }
  out.run_log = Json{{"manifest", manifest_path.string()},
                     {"options", options_to_json(options)},
                     {"experiments", std::move(experiments)},
                     {"sigma_hat", r.noise.sigma},
                     {"sigma_hat_filtered", r.noise_filtered.sigma},
                     {"dof", r.noise.dof},
                     {"asymmetry", r.asymmetry},
                     {"min_eigenvalue_ratio", r.min_eigenvalue_ratio},
                     {"warnings", r.warnings}};
  log.info("sigma_hat=" + format_double(r.noise.sigma) + " asymmetry=" + format_double(r.asymmetry));
  for (const auto& w : r.warnings) log.info("warning: " + w);

  std::ostringstream table;
  table << "compliance (rows px py pz [mm], rx ry rz [rad]; cols Fx Fy Fz [N], Mx My Mz [N*mm])\n"
        << format_matrix_text(r.compliance.k) << "sigma_hat = " << format_double(r.noise.sigma) << " mm\n";
  if (r.significance) {
    int zeroed = 0;
    for (const auto& el : r.significance->elements) zeroed += el.significant ? 0 : 1;
    table << "zeroed elements: " << zeroed << " of 36 (multiplier " << format_double(r.significance->level_multiplier)
          << ")\n";
  }
  out.table = table.str();
  return out;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateSpec {
  BeamSpec beam;
  std::array<double, 6> loads{1000.0, 1.0, 1.0, 1000.0, 1000.0, 1000.0};  // N, N*mm
  MeshPattern mesh = pattern::Cubic{};
  double sigma = 0.0;  // mm
  std::uint64_t seed = 42;
  std::string torque_unit = "N*mm";  // unit used for torques in the written manifest
  std::optional<Json> sensor;        // copied verbatim into every manifest record
};

inline SimulateSpec parse_simulate_spec(const std::string& text, const std::string& source) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& err) {
    const std::size_t line = detail::line_of_offset(text, err.byte == 0 ? 0 : err.byte - 1);
    Error e(ErrorKind::Parse, source + ":" + std::to_string(line) + ": invalid JSON (" + err.what() + ")");
    e.file = source;
    e.line = line;
    throw e;
  }
  const detail::ManifestReader r(source);
  if (!doc.is_object()) r.fail("<root>", "simulation spec must be a JSON object");
  SimulateSpec spec;
  for (const auto& [key, value] : doc.items()) {
    if (key == "beam") {
      for (const auto& [bk, bv] : value.items()) {
        const std::string at = "beam." + bk;
        if (bk == "length_mm") spec.beam.length = r.number(bv, at);
        else if (bk == "section_mm") spec.beam.section = r.number(bv, at);
        else if (bk == "young_mpa") spec.beam.young = r.number(bv, at);
        else if (bk == "poisson") spec.beam.poisson = r.number(bv, at);
        else r.fail(at, "unknown key");
      }
    } else if (key == "loads") {
      const Vec3 f = r.tagged_vec3(r.member(value, "force", "loads"), "loads.force", force_scale, "N, kN");
      const Vec3 m = r.tagged_vec3(r.member(value, "torque", "loads"), "loads.torque", torque_scale, "N*mm, N*m");
      spec.loads = {f.x(), f.y(), f.z(), m.x(), m.y(), m.z()};
    } else if (key == "pattern") {
      const std::string shape = r.string(r.member(value, "shape", "pattern"), "pattern.shape");
      const double edge = value.contains("edge_mm") ? r.number(value.at("edge_mm"), "pattern.edge_mm") : 10.0;
      const double step = value.contains("step_mm") ? r.number(value.at("step_mm"), "pattern.step_mm") : 1.0;
      if (shape == "cubic") {
        spec.mesh = pattern::Cubic{edge, step};
      } else if (shape == "square") {
        const Axis normal = value.contains("normal") ? r.axis(value.at("normal"), "pattern.normal") : Axis::X;
        spec.mesh = pattern::Square{edge, step, normal};
      } else {
        r.fail("pattern.shape", "shape must be cubic or square");
      }
    } else if (key == "sigma_mm") {
      spec.sigma = r.number(value, key);
      if (spec.sigma < 0.0) r.fail(key, "must be non-negative");
    } else if (key == "seed") {
      if (!value.is_number_unsigned()) r.fail(key, "expected a non-negative integer");
      spec.seed = value.get<std::uint64_t>();
    } else if (key == "torque_unit") {
      spec.torque_unit = r.string(value, key);
      if (!torque_scale(spec.torque_unit)) r.fail(key, "unit not in {N*mm, N*m}");
    } else if (key == "sensor") {
      r.sensor(value, "sensor");
      spec.sensor = value;
    } else {
      r.fail(key, "unknown key");
    }
  }
  try {
    spec.beam.validate();
    (void)generate_pattern(spec.mesh);
    (void)canonical_wrench_scheme(spec.loads[0], spec.loads[1], spec.loads[2], spec.loads[3], spec.loads[4],
                                  spec.loads[5]);
  } catch (const Error& e) {
    r.fail("<root>", e.what());
  }
  return spec;
}

inline constexpr std::array<const char*, 6> kLoadNames{"Fx", "Fy", "Fz", "Mx", "My", "Mz"};

/// Writes field_<j>_<load>.csv for the six canonical loads plus
/// manifest.json. Node positions are absolute: the reference point is the
/// beam tip (L, 0, 0).
inline std::vector<fs::path> simulate_to_directory(const SimulateSpec& spec, const fs::path& out_dir) {
  ensure_directory(out_dir);
  const auto& l = spec.loads;
  const auto loads = canonical_wrench_scheme(l[0], l[1], l[2], l[3], l[4], l[5]);
  const Vec3 tip(spec.beam.length, 0.0, 0.0);
  const double torque_div = *torque_scale(spec.torque_unit);

  std::vector<fs::path> written;
  Json experiments = Json::array();
  for (std::size_t j = 0; j < loads.size(); ++j) {
    DisplacementField field = beam_tip_field(spec.beam, loads[j], spec.mesh, spec.sigma, experiment_seed(spec.seed, j));
    field.reference_point = tip;
    const std::string name = "field_" + std::to_string(j + 1) + "_" + kLoadNames[j] + ".csv";
    std::ostringstream csv;
    csv << "# beam tip field, load " << kLoadNames[j] << ", sigma " << format_double(spec.sigma) << " mm, seed "
        << spec.seed << "\n";
    write_field_csv(csv, field);
    write_text_file(out_dir / name, csv.str());
    written.push_back(out_dir / name);

    const Vec3& f = loads[j].force;
    const Vec3 m = loads[j].torque / torque_div;
    Json record{{"field_file", name},
                {"force", {{"value", {f.x(), f.y(), f.z()}}, {"unit", "N"}}},
                {"torque", {{"value", {m.x(), m.y(), m.z()}}, {"unit", spec.torque_unit}}}};
    if (spec.sensor) record["sensor"] = *spec.sensor;
    experiments.push_back(std::move(record));
  }
  const Json manifest{{"reference_point", {{"value", {tip.x(), tip.y(), tip.z()}}, {"unit", "mm"}}},
                      {"experiments", std::move(experiments)}};
  write_text_file(out_dir / "manifest.json", dump(manifest));
  written.push_back(out_dir / "manifest.json");
  return written;
}

// ---------------------------------------------------------------------------
// benchmark

struct BandCheck {
  std::string name;
  double value = 0.0;
  double low = 0.0;
  double high = 0.0;
  bool pass = false;
};

struct BenchmarkReport {
  std::string study;
  Json data;
  std::string csv;
  std::vector<BandCheck> checks;

  bool passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const BandCheck& c) { return c.pass; });
  }

  Json to_json() const {
    Json checks_json = Json::array();
    for (const auto& c : checks) {
      checks_json.push_back({{"name", c.name}, {"value", c.value}, {"low", c.low}, {"high", c.high}, {"pass", c.pass}});
    }
    return Json{{"study", study}, {"passed", passed()}, {"data", data}, {"checks", std::move(checks_json)}};
  }

  std::string to_text() const {
    std::ostringstream out;
    out << "benchmark " << study << ": " << (passed() ? "PASS" : "FAIL") << '\n';
    char buf[256];
    for (const auto& c : checks) {
      std::snprintf(buf, sizeof buf, "  [%s] %-40s %12.4g in [%.4g, %.4g]\n", c.pass ? "pass" : "FAIL",
                    c.name.c_str(), c.value, c.low, c.high);
      out << buf;
    }
    return out.str();
  }
};

inline BandCheck band(std::string name, double value, double low, double high) {
  return {std::move(name), value, low, high, value >= low && value <= high};
}

struct BenchmarkOptions {
  std::uint64_t seed = 1;
  std::optional<double> sigma;
  std::optional<int> trials;
  std::optional<double> confidence_multiplier;
  Estimator estimator = Estimator::Lin;
};

inline const std::vector<double> kRotationAmplitudesDeg{0.01, 0.05, 0.1, 0.5, 1.0, 5.0};
inline const std::vector<double> kTranslationAmplitudesMm{0.01, 0.1, 1.0, 10.0};
// Expected maximum angle errors (deg) at kRotationAmplitudesDeg.
inline const std::vector<double> kAveragedReferenceDeg{9e-7, 2e-5, 9e-5, 2e-3, 9e-3, 0.24};
inline const std::vector<double> kSingleSidedReferenceDeg{2e-6, 4e-5, 2e-4, 4e-3, 2e-2, 0.48};

inline std::string short_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

inline std::string table_csv(const ErrorTable& t, const char* label) {
  std::ostringstream out;
  out << "method";
  for (double a : t.amplitudes) out << ',' << label << '=' << short_number(a);
  out << '\n';
  for (std::size_t m = 0; m < t.methods.size(); ++m) {
    out << t.methods[m];
    for (double e : t.max_error[m]) out << ',' << format_double(e);
    out << '\n';
  }
  return out.str();
}

inline Json table_json(const ErrorTable& t) {
  Json methods = Json::object();
  for (std::size_t m = 0; m < t.methods.size(); ++m) {
    methods[t.methods[m]] = {{"max", t.max_error[m]}, {"mean", t.mean_error[m]}};
  }
  return Json{{"unit", t.unit}, {"amplitudes", t.amplitudes}, {"methods", std::move(methods)}};
}

inline BenchmarkReport benchmark_amplitude(const BenchmarkOptions& o) {
  const double sigma = o.sigma.value_or(0.0);
  const int trials = o.trials.value_or(sigma > 0.0 ? 20 : 1);
  const auto table = run_amplitude_study(kRotationAmplitudesDeg, pattern::Cubic{}, trials, o.seed, sigma);
  BenchmarkReport rep;
  rep.study = "amplitude";
  rep.data = table_json(table);
  const auto lin_band = preferred_amplitude_band(table, "LIN");
  rep.data["preferred_band_deg"] = {{"best", lin_band.best}, {"low", lin_band.low}, {"high", lin_band.high}};
  rep.csv = table_csv(table, "b_deg");
  for (std::size_t a = 0; a < kRotationAmplitudesDeg.size(); ++a) {
    const std::string at = "@" + short_number(kRotationAmplitudesDeg[a]) + "deg";
    const double ref = kAveragedReferenceDeg[a];
    const double single = kSingleSidedReferenceDeg[a];
    rep.checks.push_back(band("LIN " + at, table.max_at("LIN", a), ref / 2, ref * 2));
    rep.checks.push_back(band("SVD+- " + at, table.max_at("SVD+-", a), ref / 2, ref * 2));
    rep.checks.push_back(band("SVD+ " + at, table.max_at("SVD+", a), single / 2, single * 2));
    rep.checks.push_back(band("SVD+- / SVD+ " + at, table.max_at("SVD+-", a) / table.max_at("SVD+", a), 0.0, 1.0));
  }
  return rep;
}

inline BenchmarkReport benchmark_translation(const BenchmarkOptions& o) {
  const double sigma = o.sigma.value_or(0.0);
  const auto table = run_translation_study(kTranslationAmplitudesMm, pattern::Cubic{}, o.trials.value_or(1), o.seed, sigma);
  BenchmarkReport rep;
  rep.study = "translation";
  rep.data = table_json(table);
  rep.csv = table_csv(table, "a_mm");
  for (std::size_t a = 0; a < table.amplitudes.size(); ++a) {
    for (const char* m : {"SVD", "LIN"}) {
      rep.checks.push_back(band(std::string(m) + " @" + short_number(table.amplitudes[a]) + "mm",
                                table.max_at(m, a), 0.0, sigma > 0.0 ? 10.0 * sigma : 1e-13));
    }
  }
  return rep;
}

inline BenchmarkReport benchmark_noise(const BenchmarkOptions& o) {
  const double sigma = o.sigma.value_or(5e-5);
  const int trials = o.trials.value_or(500);
  const Deflection truth{Vec3::Constant(1.0), Vec3::Constant(rad(0.1))};
  const auto r = run_noise_study(pattern::Cubic{}, truth, sigma, trials, o.seed, o.estimator, RotationModel::Differential);
  BenchmarkReport rep;
  rep.study = "noise";
  static constexpr std::array<const char*, 6> names{"px", "py", "pz", "rx", "ry", "rz"};
  std::ostringstream csv;
  csv << "component,unit,empirical_sd,analytic_sd,mean_error,standard_error\n";
  Json rows = Json::array();
  for (int c = 0; c < 6; ++c) {
    const bool rot = c >= 3;
    const double k = rot ? deg(1.0) : 1.0;  // report rotations in degrees
    csv << names[c] << ',' << (rot ? "deg" : "mm") << ',' << format_double(r.empirical_sd[c] * k) << ','
        << format_double(r.analytic_sd[c] * k) << ',' << format_double(r.mean_error[c] * k) << ','
        << format_double(r.standard_error[c] * k) << '\n';
    rows.push_back({{"component", names[c]},
                    {"unit", rot ? "deg" : "mm"},
                    {"empirical_sd", r.empirical_sd[c] * k},
                    {"analytic_sd", r.analytic_sd[c] * k},
                    {"mean_error", r.mean_error[c] * k},
                    {"standard_error", r.standard_error[c] * k}});
  }
  rep.csv = csv.str();
  rep.data = Json{{"sigma", sigma},
                  {"trials", trials},
                  {"estimator", to_token(o.estimator)},
                  {"components", std::move(rows)},
                  {"sigma_hat_mean", r.sigma_hat_mean},
                  {"sigma_hat_max_rel_dev", r.sigma_hat_max_rel_dev},
                  {"max_abs_error", r.max_abs_error}};
  if (sigma > 0.0) {
    for (int c = 0; c < 6; ++c) {
      rep.checks.push_back(band(std::string("sd ratio ") + names[c], r.empirical_sd[c] / r.analytic_sd[c], 0.85, 1.15));
    }
    rep.checks.push_back(band("mean sigma_hat / sigma", r.sigma_hat_mean / sigma, 0.99, 1.01));
  } else {
    rep.checks.push_back(band("max abs error (noise-free)", r.max_abs_error, 0.0, 1e-12));
  }
  return rep;
}

inline BenchmarkReport benchmark_zero_detection(const BenchmarkOptions& o) {
  const double sigma = o.sigma.value_or(5.6e-5);
  const int trials = o.trials.value_or(100);
  PipelineOptions opt;
  opt.confidence_multiplier = o.confidence_multiplier.value_or(4.0);
  const BeamSpec beam;
  std::ostringstream csv;
  csv << "seed,zeros_detected,nonzeros_retained,min_safety_factor,max_relative_error,sigma_hat\n";
  Json rows = Json::array();
  int full = 0;
  int worst_zeros = 26;
  for (int t = 0; t < trials; ++t) {
    const std::uint64_t seed = o.seed + static_cast<std::uint64_t>(t);
    const auto r = run_beam_trial(beam, pattern::Cubic{}, sigma, seed, opt);
    full += r.full_detection(100.0) ? 1 : 0;
    worst_zeros = std::min(worst_zeros, r.zeros_detected);
    csv << seed << ',' << r.zeros_detected << ',' << r.nonzeros_retained << ',' << format_double(r.min_safety_factor)
        << ',' << format_double(r.max_relative_error) << ',' << format_double(r.sigma_hat) << '\n';
    rows.push_back({{"seed", seed},
                    {"zeros_detected", r.zeros_detected},
                    {"nonzeros_retained", r.nonzeros_retained},
                    {"min_safety_factor", r.min_safety_factor},
                    {"max_relative_error", r.max_relative_error},
                    {"sigma_hat", r.sigma_hat}});
  }
  BenchmarkReport rep;
  rep.study = "zero-detection";
  rep.csv = csv.str();
  rep.data = Json{{"sigma", sigma},
                  {"trials", trials},
                  {"confidence_multiplier", opt.confidence_multiplier},
                  {"full_detection_seeds", full},
                  {"trials_detail", std::move(rows)}};
  rep.checks.push_back(band("seeds with 26 zeroed / 10 retained (SF>=100)", full / static_cast<double>(trials), 0.95, 1.0));
  return rep;
}

inline BenchmarkReport run_benchmark(std::string_view study, const BenchmarkOptions& o) {
  if (study == "amplitude") return benchmark_amplitude(o);
  if (study == "translation") return benchmark_translation(o);
  if (study == "noise") return benchmark_noise(o);
  if (study == "zero-detection") return benchmark_zero_detection(o);
  throw Error(ErrorKind::InvalidSpec, "unknown study '" + std::string(study) +
                                          "' (expected amplitude, translation, noise or zero-detection)");
}

// ---------------------------------------------------------------------------
// entry point

inline int exit_code_for(const Error& e) { return is_numerical(e.kind()) ? kNumericalError : kInputError; }

inline void report_error(std::ostream& err, int code, std::string_view kind, const std::string& message,
                         const Error* source = nullptr) {
  Json j{{"error", kind}, {"message", message}, {"exit_code", code}};
  if (source) {
    if (source->file) j["file"] = *source->file;
    if (source->line) j["line"] = *source->line;
    if (source->experiment) j["experiment"] = *source->experiment;
  }
  err << j.dump() << '\n';
}

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Compliance matrix identification from nodal displacement fields", "stiffid"};
  app.require_subcommand(1);

  static const std::vector<std::string> kEstimators{"lin", "svd"};
  static const std::vector<std::string> kAngles{"plus", "minus", "avg", "plus-asin", "minus-asin", "avg-asin"};
  static const std::vector<std::string> kFormats{"json", "text", "csv"};

  std::string format = "json";
  std::string out_dir;

  // identify
  auto* identify_cmd = app.add_subcommand("identify", "identify the compliance matrix from a manifest");
  std::string manifest_path;
  std::string estimator_token;
  std::string angles_token;
  std::optional<double> outlier_fraction;
  std::optional<double> multiplier;
  bool no_symmetrize = false;
  identify_cmd->add_option("manifest", manifest_path, "experiment manifest (JSON)")->required();
  identify_cmd->add_option("--estimator", estimator_token, "rigid-fit estimator")->check(CLI::IsMember(kEstimators));
  identify_cmd->add_option("--angles", angles_token, "angle extraction for --estimator svd")->check(CLI::IsMember(kAngles));
  identify_cmd->add_option("--outlier-fraction", outlier_fraction, "fraction of nodes removed per experiment");
  identify_cmd->add_option("--confidence-multiplier", multiplier, "significance interval multiplier");
  identify_cmd->add_flag("--no-symmetrize", no_symmetrize, "keep the unsymmetrized matrix");
  identify_cmd->add_option("--out", out_dir, "directory for output files");
  identify_cmd->add_option("--format", format, "stdout format")->check(CLI::IsMember(kFormats));

  // simulate
  auto* simulate_cmd = app.add_subcommand("simulate", "write synthetic beam fields and a manifest");
  std::string spec_path;
  std::optional<std::uint64_t> seed;
  std::optional<double> sigma;
  std::string sim_out = "simulated";
  simulate_cmd->add_option("spec", spec_path, "simulation spec (JSON); defaults when omitted");
  simulate_cmd->add_option("--seed", seed, "noise seed");
  simulate_cmd->add_option("--sigma", sigma, "noise standard deviation [mm]");
  simulate_cmd->add_option("--out", sim_out, "output directory");

  // benchmark
  auto* bench_cmd = app.add_subcommand("benchmark", "run a synthetic benchmark study");
  std::string study;
  std::optional<int> trials;
  std::string bench_estimator = "lin";
  bench_cmd->add_option("study", study, "amplitude | translation | noise | zero-detection")
      ->required()
      ->check(CLI::IsMember({"amplitude", "translation", "noise", "zero-detection"}));
  bench_cmd->add_option("--seed", seed, "base seed");
  bench_cmd->add_option("--sigma", sigma, "noise standard deviation [mm]");
  bench_cmd->add_option("--trials", trials, "number of trials")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--confidence-multiplier", multiplier, "significance interval multiplier");
  bench_cmd->add_option("--estimator", bench_estimator, "estimator for the noise study")->check(CLI::IsMember(kEstimators));
  bench_cmd->add_option("--out", out_dir, "directory for <study>.csv and <study>.json");
  bench_cmd->add_option("--format", format, "stdout format")->check(CLI::IsMember(kFormats));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    report_error(err, kInputError, "Usage", e.what());
    return kInputError;
  }

  const Logger log(err);
  const Format fmt = *parse_format(format);
  try {
    if (*identify_cmd) {
      IdentifyOverrides ov;
      if (!estimator_token.empty()) ov.estimator = parse_estimator(estimator_token);
      if (!angles_token.empty()) ov.angles = parse_angle_method(angles_token);
      ov.outlier_fraction = outlier_fraction;
      ov.confidence_multiplier = multiplier;
      ov.no_symmetrize = no_symmetrize;
      const auto res = identify_manifest(manifest_path, ov, log);
      if (!out_dir.empty()) {
        ensure_directory(out_dir);
        write_text_file(fs::path(out_dir) / "compliance.json", dump(res.compliance));
        write_text_file(fs::path(out_dir) / "significance.json", dump(res.significance));
        write_text_file(fs::path(out_dir) / "compliance.txt", res.table);
        write_text_file(fs::path(out_dir) / "compliance.csv", format_matrix_csv(res.result.compliance.k));
        write_text_file(fs::path(out_dir) / "run_log.json", dump(res.run_log));
      }
      if (fmt == Format::Json) {
        out << dump(Json{{"compliance", res.compliance}, {"significance", res.significance}, {"run", res.run_log}});
      } else if (fmt == Format::Text) {
        out << res.table;
      } else {
        out << format_matrix_csv(res.result.compliance.k);
      }
      return kOk;
    }

    if (*simulate_cmd) {
      SimulateSpec spec;
      if (!spec_path.empty()) {
        std::ifstream in(spec_path, std::ios::binary);
        if (!in) {
          Error e(ErrorKind::Io, "cannot open simulation spec " + spec_path);
          e.file = spec_path;
          throw e;
        }
        std::ostringstream buf;
        buf << in.rdbuf();
        spec = parse_simulate_spec(buf.str(), spec_path);
      }
      if (seed) spec.seed = *seed;
      if (sigma) {
        if (!(*sigma >= 0.0)) throw Error(ErrorKind::InvalidSpec, "--sigma must be non-negative");
        spec.sigma = *sigma;
      }
      for (const auto& p : simulate_to_directory(spec, sim_out)) log.info("wrote " + p.string());
      return kOk;
    }

    BenchmarkOptions bo;
    bo.seed = seed.value_or(1);
    bo.sigma = sigma;
    bo.trials = trials;
    bo.confidence_multiplier = multiplier;
    bo.estimator = *parse_estimator(bench_estimator);
    if (sigma && !(*sigma >= 0.0)) throw Error(ErrorKind::InvalidSpec, "--sigma must be non-negative");
    const auto rep = run_benchmark(study, bo);
    if (!out_dir.empty()) {
      ensure_directory(out_dir);
      write_text_file(fs::path(out_dir) / (study + ".csv"), rep.csv);
      write_text_file(fs::path(out_dir) / (study + ".json"), dump(rep.to_json()));
    }
    if (fmt == Format::Json) out << dump(rep.to_json());
    else if (fmt == Format::Text) out << rep.to_text();
    else out << rep.csv;
    if (!rep.passed()) {
      report_error(err, kBandFailure, "BandFailure", "benchmark " + study + " failed one or more bands");
      return kBandFailure;
    }
    return kOk;
  } catch (const Error& e) {
    const int code = exit_code_for(e);
    report_error(err, code, to_string(e.kind()), e.what(), &e);
    return code;
  } catch (const std::exception& e) {
    report_error(err, kInputError, "Internal", e.what());
    return kInputError;
  }
}

}  // namespace stiffid::cli
