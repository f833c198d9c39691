#pragma once

// Ground-truth generators: regular sensor meshes, rigid transforms with
// seeded Gaussian noise, and the closed-form cantilever-beam compliance.

#include "stiffid/common.hpp"
#include "stiffid/compliance.hpp"
#include "stiffid/deflection.hpp"
#include "stiffid/field.hpp"
#include "stiffid/rotation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <variant>
#include <vector>

namespace stiffid {

/// Standard normal deviates from a 64-bit Mersenne Twister through the
/// Box-Muller transform. Uniforms take the top 53 bits of each draw; both
/// outputs of a pair are used (cos first, then sin). The whole chain is
/// specified here rather than delegated to std::normal_distribution, whose
/// algorithm is implementation-defined.
class GaussianSampler {
 public:
  explicit GaussianSampler(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double standard() {
    if (spare_) {
      const double z = *spare_;
      spare_.reset();
      return z;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    return radius * std::cos(angle);
  }

  double normal(double sigma) { return sigma * standard(); }

  Vec3 normal3(double sigma) {
    const double x = normal(sigma);
    const double y = normal(sigma);
    const double z = normal(sigma);
    return {x, y, z};
  }

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

/// Seed of experiment j inside a run seeded with `seed`; distinct for every
/// (seed, j) pair with j < 6 so consecutive trial seeds never share a stream.
constexpr std::uint64_t experiment_seed(std::uint64_t seed, std::uint64_t j) { return seed * 6u + j; }

namespace pattern {
struct Cubic {
  double edge = 10.0;
  double step = 1.0;
};
struct Square {
  double edge = 10.0;
  double step = 1.0;
  Axis normal = Axis::X;
};
struct Custom {
  std::vector<Vec3> positions;
};
}  // namespace pattern

using MeshPattern = std::variant<pattern::Cubic, pattern::Square, pattern::Custom>;

namespace detail {
/// Grid coordinates symmetric about zero; throws unless step divides edge.
inline std::vector<double> grid_axis(double edge, double step) {
  if (!(edge > 0.0) || !(step > 0.0) || !std::isfinite(edge) || !std::isfinite(step)) {
    throw Error(ErrorKind::InvalidPattern, "pattern edge and step must be positive");
  }
  const double ratio = edge / step;
  const double intervals = std::round(ratio);
  if (intervals < 1.0 || std::abs(ratio - intervals) > 1e-9 * ratio) {
    throw Error(ErrorKind::InvalidPattern, "pattern step must divide the edge");
  }
  const auto m = static_cast<int>(intervals) + 1;
  std::vector<double> out(static_cast<std::size_t>(m));
  for (int k = 0; k < m; ++k) out[static_cast<std::size_t>(k)] = (k - (m - 1) / 2.0) * step;
  return out;
}
}  // namespace detail

/// Nodes of the pattern around `center`, expressed in the reference frame
/// (the returned field is already centered), with zero displacements.
inline DisplacementField generate_pattern(const MeshPattern& mesh, const Vec3& center = Vec3::Zero()) {
  DisplacementField field;
  field.centered = true;
  auto add = [&](const Vec3& p) { field.nodes.push_back({center + p, Vec3::Zero()}); };
  if (const auto* c = std::get_if<pattern::Cubic>(&mesh)) {
    const auto axis = detail::grid_axis(c->edge, c->step);
    field.nodes.reserve(axis.size() * axis.size() * axis.size());
    for (double x : axis)
      for (double y : axis)
        for (double z : axis) add({x, y, z});
  } else if (const auto* s = std::get_if<pattern::Square>(&mesh)) {
    const auto axis = detail::grid_axis(s->edge, s->step);
    const int n = static_cast<int>(s->normal);
    const int u = (n + 1) % 3;
    const int v = (n + 2) % 3;
    field.nodes.reserve(axis.size() * axis.size());
    for (double a : axis) {
      for (double b : axis) {
        Vec3 p = Vec3::Zero();
        p[std::min(u, v)] = a;
        p[std::max(u, v)] = b;
        add(p);
      }
    }
  } else {
    const auto& custom = std::get<pattern::Custom>(mesh);
    if (custom.positions.empty()) throw Error(ErrorKind::InvalidPattern, "custom pattern has no nodes");
    for (const auto& p : custom.positions) {
      if (!p.allFinite()) throw Error(ErrorKind::InvalidPattern, "custom pattern node is not finite");
      add(p);
    }
  }
  return field;
}

struct GroundTruth {
  Deflection deflection;
  double sigma = 0.0;  // mm
  std::uint64_t seed = 0;
};

enum class RotationModel {
  Composed,      // exact Rx*Ry*Rz rotation; linearization error is present
  Differential,  // I + [dphi]x; the small-displacement model itself
};

/// dp_i = R p_i + p - p_i + eps_i with eps_i ~ N(0, sigma^2 I) drawn node by
/// node in x, y, z order.
inline DisplacementField apply_rigid_transform(DisplacementField field, const GroundTruth& truth,
                                               RotationModel model) {
  if (!field.centered) throw Error(ErrorKind::NotCentered, "apply_rigid_transform requires a centered field");
  if (!(truth.sigma >= 0.0)) throw Error(ErrorKind::InvalidSpec, "sigma must be non-negative");
  GaussianSampler rng(truth.seed);
  const Mat3 rotation = composed_rotation(truth.deflection.rotation);
  for (auto& node : field.nodes) {
    const Vec3& q = node.position;
    const Vec3 rigid = model == RotationModel::Composed ? Vec3(rotation * q - q)
                                                        : Vec3(truth.deflection.rotation.cross(q));
    node.displacement = rigid + truth.deflection.translation;
    if (truth.sigma > 0.0) node.displacement += rng.normal3(truth.sigma);
  }
  return field;
}

/// Cantilever with a square cross-section, clamped at x = 0 and loaded at
/// the tip x = L; the reference point is the tip centre.
struct BeamSpec {
  double length = 1000.0;        // mm
  double section = 10.0;         // mm, square edge
  double young = 2.0e5;          // N/mm^2
  double poisson = 0.266;

  void validate() const {
    if (!(length > 0.0) || !(section > 0.0) || !(young > 0.0) || !(poisson > 0.0 && poisson < 0.5)) {
      throw Error(ErrorKind::InvalidSpec, "beam dimensions and modulus must be positive, poisson in (0, 0.5)");
    }
  }
};

/// Saint-Venant torsion constant of a square section, J = 0.1406 a^4.
inline constexpr double kSquareTorsionCoefficient = 0.1406;

/// Load set of the beam benchmark: Fx = 1000 N, Fy = Fz = 1 N and
/// 1 N*m = 1000 N*mm about every axis.
inline std::array<Wrench, 6> beam_benchmark_loads() {
  return canonical_wrench_scheme(1000.0, 1.0, 1.0, 1000.0, 1000.0, 1000.0);
}

/// Tip compliance of the clamped beam (Euler-Bernoulli bending, uniform
/// torsion). Sign convention: beam axis along +x from clamp to tip, so a
/// +y force rotates the tip about +z and a +z force about -y.
inline ComplianceMatrix beam_compliance_oracle(const BeamSpec& spec) {
  spec.validate();
  const double l = spec.length;
  const double a = spec.section;
  const double e = spec.young;
  const double area = a * a;
  const double inertia = a * a * a * a / 12.0;  // I_y = I_z
  const double shear = e / (2.0 * (1.0 + spec.poisson));
  const double torsion = kSquareTorsionCoefficient * a * a * a * a;

  ComplianceMatrix out;
  Mat6& k = out.k;
  k(0, 0) = l / (e * area);
  k(1, 1) = l * l * l / (3.0 * e * inertia);
  k(2, 2) = l * l * l / (3.0 * e * inertia);
  k(3, 3) = l / (shear * torsion);
  k(4, 4) = l / (e * inertia);
  k(5, 5) = l / (e * inertia);
  k(1, 5) = k(5, 1) = l * l / (2.0 * e * inertia);
  k(2, 4) = k(4, 2) = -l * l / (2.0 * e * inertia);
  return out;
}

/// Sensor field at the beam tip: the oracle deflection under `wrench`
/// applied to the sensor nodes as a small-displacement rigid motion plus
/// i.i.d. noise.
inline DisplacementField beam_tip_field(const BeamSpec& spec, const Wrench& wrench, const MeshPattern& mesh,
                                        double sigma, std::uint64_t seed) {
  if (!canonical_component(wrench)) {
    throw Error(ErrorKind::NotCanonical, "beam experiments use single-component loads");
  }
  const ComplianceMatrix oracle = beam_compliance_oracle(spec);
  const GroundTruth truth{Deflection::from_vector(oracle.k * wrench.as_vector()), sigma, seed};
  return apply_rigid_transform(generate_pattern(mesh), truth, RotationModel::Differential);
}

}  // namespace stiffid
