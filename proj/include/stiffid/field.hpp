#pragma once

// Nodal displacement fields: re-centering on the reference point and
// virtual-sensor selection.

#include "stiffid/common.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

namespace stiffid {

/// Initial node location and its displacement under load, both in mm.
struct Node {
  Vec3 position = Vec3::Zero();
  Vec3 displacement = Vec3::Zero();
};

struct DisplacementField {
  std::vector<Node> nodes;
  Vec3 reference_point = Vec3::Zero();
  bool centered = false;

  std::size_t size() const noexcept { return nodes.size(); }
  bool empty() const noexcept { return nodes.empty(); }
};

enum class Axis { X = 0, Y = 1, Z = 2 };

inline constexpr double kBoundaryTolerance = 1e-9;  // mm

namespace region {
struct Cube {
  double edge = 0.0;
};
struct Square {
  double edge = 0.0;
  Axis normal = Axis::X;
};
/// Degenerate slab |x_axis - coordinate| <= thickness, unbounded laterally.
struct Layer {
  Axis axis = Axis::X;
  double coordinate = 0.0;
  double thickness = 0.0;
};
struct Sphere {
  double radius = 0.0;
};
}  // namespace region

struct SensorRegion {
  std::variant<region::Cube, region::Square, region::Layer, region::Sphere> shape;
  Vec3 center = Vec3::Zero();
};

inline void validate_node(const Node& node) {
  if (!node.position.allFinite() || !node.displacement.allFinite()) {
    throw Error(ErrorKind::Parse, "node has non-finite components");
  }
}

/// Shifts node positions so the reference point becomes the origin.
inline DisplacementField center_field(DisplacementField field) {
  if (field.centered) {
    throw Error(ErrorKind::AlreadyCentered, "field is already centered on its reference point");
  }
  for (auto& node : field.nodes) node.position -= field.reference_point;
  field.centered = true;
  return field;
}

inline Vec3 centroid(std::span<const Node> nodes) {
  if (nodes.empty()) throw Error(ErrorKind::EmptyField, "centroid of an empty field");
  Vec3 sum = Vec3::Zero();
  for (const auto& node : nodes) sum += node.position;
  return sum / static_cast<double>(nodes.size());
}

inline Vec3 centroid(const DisplacementField& field) { return centroid(std::span(field.nodes)); }

inline void validate_region(const SensorRegion& region) {
  const bool ok = std::visit(
      [](const auto& s) {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, region::Cube> || std::is_same_v<S, region::Square>) {
          return std::isfinite(s.edge) && s.edge > 0.0;
        } else if constexpr (std::is_same_v<S, region::Layer>) {
          return std::isfinite(s.thickness) && s.thickness > 0.0 && std::isfinite(s.coordinate);
        } else {
          return std::isfinite(s.radius) && s.radius > 0.0;
        }
      },
      region.shape);
  if (!ok || !region.center.allFinite()) {
    throw Error(ErrorKind::InvalidRegion, "sensor region dimensions must be finite and strictly positive");
  }
}

/// Boundary-inclusive membership test, tolerance kBoundaryTolerance.
inline bool contains(const SensorRegion& region, const Vec3& point) {
  const Vec3 rel = point - region.center;
  constexpr double tol = kBoundaryTolerance;
  return std::visit(
      [&](const auto& s) {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, region::Cube>) {
          return rel.cwiseAbs().maxCoeff() <= s.edge / 2.0 + tol;
        } else if constexpr (std::is_same_v<S, region::Square>) {
          const int n = static_cast<int>(s.normal);
          for (int i = 0; i < 3; ++i) {
            const double limit = (i == n) ? tol : s.edge / 2.0 + tol;
            if (std::abs(rel[i]) > limit) return false;
          }
          return true;
        } else if constexpr (std::is_same_v<S, region::Layer>) {
          return std::abs(point[static_cast<int>(s.axis)] - s.coordinate) <= s.thickness + tol;
        } else {
          return rel.norm() <= s.radius + tol;
        }
      },
      region.shape);
}

/// Keeps the nodes inside the region, preserving input order.
inline DisplacementField select_sensor(const DisplacementField& field, const SensorRegion& region) {
  if (!field.centered) throw Error(ErrorKind::NotCentered, "select_sensor requires a centered field");
  validate_region(region);
  DisplacementField out;
  out.reference_point = field.reference_point;
  out.centered = true;
  std::copy_if(field.nodes.begin(), field.nodes.end(), std::back_inserter(out.nodes),
               [&](const Node& node) { return contains(region, node.position); });
  if (out.empty()) {
    throw Error(ErrorKind::EmptySelection,
                "no node lies inside the sensor region (check region or reference point)");
  }
  return out;
}

}  // namespace stiffid
