#pragma once

// File formats: nodal field CSV, experiment manifest JSON, compliance and
// significance JSON, and the plain-text matrix table.

#include "stiffid/common.hpp"
#include "stiffid/compliance.hpp"
#include "stiffid/field.hpp"
#include "stiffid/pipeline.hpp"
#include "stiffid/statistics.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace stiffid {

namespace fs = std::filesystem;
using Json = nlohmann::json;

/// Shortest round-trip representation ("%.17g").
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

[[noreturn]] inline void parse_fail(const std::string& file, std::size_t line, const std::string& message) {
  Error e(ErrorKind::Parse, file + ":" + std::to_string(line) + ": " + message);
  e.file = file;
  e.line = line;
  throw e;
}

inline double parse_number(std::string_view token, const std::string& file, std::size_t line) {
  const std::string s(token);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    parse_fail(file, line, "not a number: '" + s + "'");
  }
  if (used != s.size() || !std::isfinite(v)) parse_fail(file, line, "not a finite number: '" + s + "'");
  return v;
}

}  // namespace detail

inline constexpr std::array<std::string_view, 6> kFieldColumns = {"x", "y", "z", "dx", "dy", "dz"};

/// Reads `x,y,z,dx,dy,dz` rows (mm). Lines starting with '#' and blank lines
/// are skipped; the header row is mandatory. The result is not centered.
inline DisplacementField read_field_csv(std::istream& in, const std::string& source,
                                        const Vec3& reference_point = Vec3::Zero()) {
  DisplacementField field;
  field.reference_point = reference_point;
  std::string raw;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = detail::trim(raw);
    if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) line.remove_prefix(3);
    if (line.empty() || line.front() == '#') continue;
    const auto cells = detail::split_commas(line);
    if (!header_seen) {
      if (cells.size() != kFieldColumns.size()) {
        detail::parse_fail(source, line_no, "header must be x,y,z,dx,dy,dz");
      }
      for (std::size_t c = 0; c < cells.size(); ++c) {
        if (cells[c] != kFieldColumns[c]) detail::parse_fail(source, line_no, "header must be x,y,z,dx,dy,dz");
      }
      header_seen = true;
      continue;
    }
    if (cells.size() != 6) {
      detail::parse_fail(source, line_no, "expected 6 columns, found " + std::to_string(cells.size()));
    }
    Node node;
    for (int c = 0; c < 3; ++c) {
      node.position[c] = detail::parse_number(cells[static_cast<std::size_t>(c)], source, line_no);
      node.displacement[c] = detail::parse_number(cells[static_cast<std::size_t>(c + 3)], source, line_no);
    }
    field.nodes.push_back(node);
  }
  if (!header_seen) detail::parse_fail(source, line_no, "missing header row x,y,z,dx,dy,dz");
  if (field.empty()) detail::parse_fail(source, line_no, "field file contains no nodes");
  return field;
}

inline DisplacementField read_field_csv(const fs::path& path, const Vec3& reference_point = Vec3::Zero()) {
  std::ifstream in(path);
  if (!in) {
    Error e(ErrorKind::Io, "cannot open field file " + path.string());
    e.file = path.string();
    throw e;
  }
  return read_field_csv(in, path.string(), reference_point);
}

/// Writes node positions in the reference point's parent frame, i.e.
/// reference_point + position for centered fields.
inline void write_field_csv(std::ostream& out, const DisplacementField& field) {
  out << "x,y,z,dx,dy,dz\n";
  const Vec3 shift = field.centered ? field.reference_point : Vec3::Zero();
  for (const auto& node : field.nodes) {
    const Vec3 p = node.position + shift;
    out << format_double(p.x()) << ',' << format_double(p.y()) << ',' << format_double(p.z()) << ','
        << format_double(node.displacement.x()) << ',' << format_double(node.displacement.y()) << ','
        << format_double(node.displacement.z()) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Units. Manifests must tag every quantity; the core only sees mm, N, N*mm.

inline std::optional<double> length_scale(std::string_view unit) {
  if (unit == "mm") return 1.0;
  if (unit == "m") return 1000.0;
  return std::nullopt;
}

inline std::optional<double> force_scale(std::string_view unit) {
  if (unit == "N") return 1.0;
  if (unit == "kN") return 1000.0;
  return std::nullopt;
}

inline std::optional<double> torque_scale(std::string_view unit) {
  if (unit == "N*mm" || unit == "N.mm" || unit == "N\xC2\xB7mm" || unit == "Nmm") return 1.0;
  if (unit == "N*m" || unit == "N.m" || unit == "N\xC2\xB7m" || unit == "Nm") return 1000.0;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Manifest

struct ManifestExperiment {
  fs::path field_file;  // resolved against the manifest directory
  Wrench wrench;        // N, N*mm
  std::optional<SensorRegion> sensor;
};

struct Manifest {
  Vec3 reference_point = Vec3::Zero();  // mm
  std::vector<ManifestExperiment> experiments;
  PipelineOptions options;
};

namespace detail {

inline std::size_t line_of_offset(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<long>(offset), '\n'));
}

class ManifestReader {
 public:
  ManifestReader(std::string file) : file_(std::move(file)) {}

  [[noreturn]] void fail(const std::string& where, const std::string& message) const {
    Error e(ErrorKind::Parse, file_ + ": " + where + ": " + message);
    e.file = file_;
    throw e;
  }

  const Json& member(const Json& obj, const char* key, const std::string& where) const {
    if (!obj.is_object() || !obj.contains(key)) fail(where, std::string("missing required key '") + key + "'");
    return obj.at(key);
  }

  double number(const Json& v, const std::string& where) const {
    if (!v.is_number()) fail(where, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(where, "expected a finite number");
    return d;
  }

  std::string string(const Json& v, const std::string& where) const {
    if (!v.is_string()) fail(where, "expected a string");
    return v.get<std::string>();
  }

  Vec3 vec3(const Json& v, const std::string& where) const {
    if (!v.is_array() || v.size() != 3) fail(where, "expected an array of 3 numbers");
    return {number(v[0], where + "[0]"), number(v[1], where + "[1]"), number(v[2], where + "[2]")};
  }

  /// {"value": [..3..], "unit": "..."} scaled by the unit table.
  template <typename ScaleFn>
  Vec3 tagged_vec3(const Json& v, const std::string& where, ScaleFn scale_of, const char* allowed) const {
    const Vec3 value = vec3(member(v, "value", where), where + ".value");
    const std::string unit = string(member(v, "unit", where), where + ".unit");
    const auto scale = scale_of(unit);
    if (!scale) fail(where + ".unit", "unit '" + unit + "' not in {" + allowed + "}");
    return value * *scale;
  }

  Axis axis(const Json& v, const std::string& where) const {
    const std::string s = string(v, where);
    if (s == "x") return Axis::X;
    if (s == "y") return Axis::Y;
    if (s == "z") return Axis::Z;
    fail(where, "axis must be x, y or z");
  }

  SensorRegion sensor(const Json& v, const std::string& where) const {
    double scale = 1.0;
    if (v.contains("unit")) {
      const std::string unit = string(v.at("unit"), where + ".unit");
      const auto s = length_scale(unit);
      if (!s) fail(where + ".unit", "unit '" + unit + "' not in {mm, m}");
      scale = *s;
    }
    SensorRegion region;
    if (v.contains("center")) region.center = vec3(v.at("center"), where + ".center") * scale;
    const std::string shape = string(member(v, "shape", where), where + ".shape");
    if (shape == "cube") {
      region.shape = region::Cube{number(member(v, "edge", where), where + ".edge") * scale};
    } else if (shape == "square") {
      region.shape = region::Square{number(member(v, "edge", where), where + ".edge") * scale,
                                    axis(member(v, "normal", where), where + ".normal")};
    } else if (shape == "layer") {
      region.shape = region::Layer{axis(member(v, "axis", where), where + ".axis"),
                                   number(member(v, "coordinate", where), where + ".coordinate") * scale,
                                   number(member(v, "thickness", where), where + ".thickness") * scale};
    } else if (shape == "sphere") {
      region.shape = region::Sphere{number(member(v, "radius", where), where + ".radius") * scale};
    } else {
      fail(where + ".shape", "shape must be cube, square, layer or sphere");
    }
    try {
      validate_region(region);
    } catch (const Error& e) {
      fail(where, e.what());
    }
    return region;
  }

  void options(const Json& v, PipelineOptions& opt) const {
    const std::string where = "options";
    if (!v.is_object()) fail(where, "expected an object");
    for (const auto& [key, value] : v.items()) {
      const std::string at = where + "." + key;
      if (key == "estimator") {
        const auto e = parse_estimator(string(value, at));
        if (!e) fail(at, "expected lin or svd");
        opt.estimator = *e;
      } else if (key == "angles") {
        const auto m = parse_angle_method(string(value, at));
        if (!m) fail(at, "expected plus, minus, avg, plus-asin, minus-asin or avg-asin");
        opt.angles = *m;
      } else if (key == "outlier_fraction") {
        opt.outlier_fraction = number(value, at);
        if (!(opt.outlier_fraction >= 0.0 && opt.outlier_fraction < 1.0)) fail(at, "must lie in [0, 1)");
      } else if (key == "outlier_ranking") {
        const std::string r = string(value, at);
        if (r == "axis") opt.ranking = OutlierRanking::PerAxisMax;
        else if (r == "norm") opt.ranking = OutlierRanking::VectorNorm;
        else fail(at, "expected axis or norm");
      } else if (key == "filter_passes") {
        if (!value.is_number_integer() || value.get<int>() < 0) fail(at, "expected a non-negative integer");
        opt.filter_passes = value.get<int>();
      } else if (key == "confidence_multiplier") {
        opt.confidence_multiplier = number(value, at);
        if (!(opt.confidence_multiplier > 0.0)) fail(at, "must be positive");
      } else if (key == "symmetrize") {
        if (!value.is_boolean()) fail(at, "expected true or false");
        opt.symmetrize = value.get<bool>();
      } else if (key == "significance") {
        if (!value.is_boolean()) fail(at, "expected true or false");
        opt.significance = value.get<bool>();
      } else {
        fail(at, "unknown option");
      }
    }
  }

 private:
  std::string file_;
};

}  // namespace detail

inline Manifest parse_manifest(const std::string& text, const std::string& source, const fs::path& base_dir) {
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
  if (!doc.is_object()) r.fail("<root>", "manifest must be a JSON object");

  Manifest m;
  m.reference_point = r.tagged_vec3(r.member(doc, "reference_point", "<root>"), "reference_point",
                                    length_scale, "mm, m");
  const Json& exps = r.member(doc, "experiments", "<root>");
  if (!exps.is_array()) r.fail("experiments", "expected an array");
  for (std::size_t i = 0; i < exps.size(); ++i) {
    const std::string where = "experiments[" + std::to_string(i) + "]";
    const Json& e = exps[i];
    if (!e.is_object()) r.fail(where, "expected an object");
    ManifestExperiment x;
    const fs::path file = r.string(r.member(e, "field_file", where), where + ".field_file");
    x.field_file = file.is_absolute() ? file : base_dir / file;
    x.wrench.force = r.tagged_vec3(r.member(e, "force", where), where + ".force", force_scale, "N, kN");
    x.wrench.torque = r.tagged_vec3(r.member(e, "torque", where), where + ".torque", torque_scale, "N*mm, N*m");
    if (x.wrench.as_vector().isZero(0.0)) r.fail(where, "wrench is all zero");
    if (e.contains("sensor")) x.sensor = r.sensor(e.at("sensor"), where + ".sensor");
    m.experiments.push_back(std::move(x));
  }
  if (doc.contains("options")) r.options(doc.at("options"), m.options);
  return m;
}

inline Manifest load_manifest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    Error e(ErrorKind::Io, "cannot open manifest " + path.string());
    e.file = path.string();
    throw e;
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_manifest(buf.str(), path.string(), path.parent_path());
}

// ---------------------------------------------------------------------------
// Compliance / significance output

inline Json matrix_to_json(const Mat6& k) {
  Json rows = Json::array();
  for (int i = 0; i < 6; ++i) {
    Json row = Json::array();
    for (int j = 0; j < 6; ++j) row.push_back(k(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Json compliance_units_json() {
  return Json{{"rows", "(px, py, pz) mm then (dphi_x, dphi_y, dphi_z) rad"},
              {"cols", "(Fx, Fy, Fz) N then (Mx, My, Mz) N*mm"},
              {"force_columns", {{"translation_rows", "mm/N"}, {"rotation_rows", "rad/N"}}},
              {"torque_columns", {{"translation_rows", "mm/(N*mm)"}, {"rotation_rows", "rad/(N*mm)"}}}};
}

inline Json compliance_to_json(const ComplianceMatrix& c) {
  Json out;
  out["k"] = matrix_to_json(c.k);
  out["units"] = compliance_units_json();
  out["symmetrized"] = c.symmetrized;
  if (c.significance_mask) {
    Json mask = Json::array();
    for (int i = 0; i < 6; ++i) {
      Json row = Json::array();
      for (int j = 0; j < 6; ++j) row.push_back(static_cast<bool>((*c.significance_mask)(i, j)));
      mask.push_back(std::move(row));
    }
    out["significance_mask"] = std::move(mask);
  } else {
    out["significance_mask"] = nullptr;
  }
  return out;
}

/// Inverse of compliance_to_json; `units` is informational and ignored.
inline ComplianceMatrix compliance_from_json(const Json& doc, const std::string& source = "<json>") {
  const detail::ManifestReader r(source);
  const Json& rows = r.member(doc, "k", "<root>");
  if (!rows.is_array() || rows.size() != 6) r.fail("k", "expected 6 rows");
  ComplianceMatrix c;
  for (int i = 0; i < 6; ++i) {
    const Json& row = rows[static_cast<std::size_t>(i)];
    if (!row.is_array() || row.size() != 6) r.fail("k[" + std::to_string(i) + "]", "expected 6 columns");
    for (int j = 0; j < 6; ++j) {
      c.k(i, j) = r.number(row[static_cast<std::size_t>(j)], "k[" + std::to_string(i) + "][" + std::to_string(j) + "]");
    }
  }
  if (doc.contains("symmetrized")) c.symmetrized = doc.at("symmetrized").is_boolean() && doc.at("symmetrized").get<bool>();
  if (doc.contains("significance_mask") && !doc.at("significance_mask").is_null()) {
    const Json& mask = doc.at("significance_mask");
    if (!mask.is_array() || mask.size() != 6) r.fail("significance_mask", "expected 6 rows");
    Mask6 m;
    for (int i = 0; i < 6; ++i) {
      const Json& row = mask[static_cast<std::size_t>(i)];
      if (!row.is_array() || row.size() != 6) r.fail("significance_mask", "expected 6 columns");
      for (int j = 0; j < 6; ++j) {
        const Json& b = row[static_cast<std::size_t>(j)];
        if (!b.is_boolean()) r.fail("significance_mask", "expected booleans");
        m(i, j) = b.get<bool>();
      }
    }
    c.significance_mask = m;
  }
  return c;
}

/// Element records use 1-based row/col indices (k_11 .. k_66).
inline Json significance_to_json(const SignificanceReport& report) {
  Json elements = Json::array();
  for (const auto& el : report.elements) {
    elements.push_back({{"row", el.row + 1},
                        {"col", el.col + 1},
                        {"estimate", el.estimate},
                        {"halfwidth", el.halfwidth},
                        {"significant", el.significant},
                        {"safety_factor", el.safety_factor ? Json(*el.safety_factor) : Json(nullptr)}});
  }
  return Json{{"confidence_multiplier", report.level_multiplier},
              {"confidence_level", report.confidence_level},
              {"elements", std::move(elements)}};
}

inline std::string format_matrix_text(const Mat6& k) {
  static constexpr std::array<const char*, 6> rows{"px", "py", "pz", "rx", "ry", "rz"};
  static constexpr std::array<const char*, 6> cols{"Fx", "Fy", "Fz", "Mx", "My", "Mz"};
  std::ostringstream out;
  char buf[64];
  out << "    ";
  for (const char* c : cols) {
    std::snprintf(buf, sizeof buf, "%13s", c);
    out << buf;
  }
  out << '\n';
  for (int i = 0; i < 6; ++i) {
    out << rows[static_cast<std::size_t>(i)] << "  ";
    for (int j = 0; j < 6; ++j) {
      std::snprintf(buf, sizeof buf, "%13.4e", k(i, j));
      out << buf;
    }
    out << '\n';
  }
  return out.str();
}

inline std::string format_matrix_csv(const Mat6& k) {
  std::ostringstream out;
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 6; ++j) out << (j ? "," : "") << format_double(k(i, j));
    out << '\n';
  }
  return out.str();
}

}  // namespace stiffid
