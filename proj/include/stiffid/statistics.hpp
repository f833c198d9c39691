#pragma once

// Identification uncertainty: residual-based noise level, deflection
// covariances, residual-ranked outlier removal and the zero-element test.

#include "stiffid/common.hpp"
#include "stiffid/compliance.hpp"
#include "stiffid/deflection.hpp"
#include "stiffid/field.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace stiffid {

struct NoiseEstimate {
  double sigma = 0.0;  // mm, pooled over experiments
  long dof = 0;        // sum over experiments of (3n - 6)
  std::vector<double> per_experiment_sigma;
};

/// Pooled residual s.t.d.: each fit of n nodes has 3n observations and
/// 6 fitted parameters, so E[objective] = (3n - 6) sigma^2.
inline NoiseEstimate estimate_sigma(std::span<const FitResult> fits) {
  if (fits.empty()) throw Error(ErrorKind::InsufficientDof, "no fits to pool");
  NoiseEstimate out;
  double total = 0.0;
  for (const auto& fit : fits) {
    const long dof = 3 * static_cast<long>(fit.node_count()) - 6;
    if (fit.node_count() < 3 || dof <= 0) {
      throw Error(ErrorKind::InsufficientDof,
                  "fit with " + std::to_string(fit.node_count()) + " nodes leaves no residual degrees of freedom");
    }
    out.per_experiment_sigma.push_back(std::sqrt(fit.objective / static_cast<double>(dof)));
    total += fit.objective;
    out.dof += dof;
  }
  out.sigma = std::sqrt(total / static_cast<double>(out.dof));
  return out;
}

struct DeflectionCovariance {
  Mat3 cov_translation = Mat3::Zero();  // mm^2
  Mat3 cov_rotation = Mat3::Zero();     // rad^2

  /// Standard deviations in deflection order (px, py, pz, dphi_x, dphi_y, dphi_z).
  Vec6 std_devs() const {
    Vec6 s;
    s << cov_translation.diagonal().cwiseSqrt(), cov_rotation.diagonal().cwiseSqrt();
    return s;
  }
};

/// cov[p] = sigma^2/n I and cov[dphi] = sigma^2 (sum P^T P)^-1 with positions
/// taken about the node centroid.
inline DeflectionCovariance deflection_covariance(const DisplacementField& field, double sigma) {
  if (!(sigma >= 0.0)) throw Error(ErrorKind::InvalidSpec, "sigma must be non-negative");
  if (field.size() < 3) throw Error(ErrorKind::DegenerateGeometry, "covariance needs at least 3 nodes");
  const Mat3 moments = moment_matrix(field, centroid(field));
  require_well_posed(moments);
  const double var = sigma * sigma;
  DeflectionCovariance out;
  out.cov_translation = Mat3::Identity() * (var / static_cast<double>(field.size()));
  out.cov_rotation = var * moments.inverse();
  out.cov_rotation = (out.cov_rotation + out.cov_rotation.transpose()) / 2.0;
  return out;
}

enum class OutlierRanking {
  PerAxisMax,  // node score = largest absolute residual component
  VectorNorm,  // node score = residual vector length
};

/// Number of nodes removed for a fraction: ceil(fraction * n), guarded
/// against products like 0.1 * 1210 = 121.00000000000001.
inline std::size_t outlier_count(std::size_t n, double fraction) {
  const double raw = fraction * static_cast<double>(n);
  return static_cast<std::size_t>(std::ceil(raw - 1e-9));
}

/// Indices (ascending) of the worst-ranked nodes. Ties are broken toward the
/// lower index, so the result depends only on the residuals.
inline std::vector<std::size_t> outlier_indices(const FitResult& fit, double fraction,
                                                OutlierRanking ranking = OutlierRanking::PerAxisMax) {
  if (!(fraction >= 0.0 && fraction < 1.0)) {
    throw Error(ErrorKind::InvalidFraction, "outlier fraction must lie in [0, 1)");
  }
  const std::size_t n = fit.node_count();
  const std::size_t remove = outlier_count(n, fraction);
  if (n < 3 || n - std::min(remove, n) < 3) {
    throw Error(ErrorKind::TooFewRemaining, "filtering would leave fewer than 3 nodes");
  }
  std::vector<double> score(n);
  for (std::size_t i = 0; i < n; ++i) {
    score[i] = ranking == OutlierRanking::PerAxisMax ? fit.residuals[i].cwiseAbs().maxCoeff()
                                                     : fit.residuals[i].norm();
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
  order.resize(remove);
  std::sort(order.begin(), order.end());
  return order;
}

/// Drops the ceil(fraction * n) nodes with the largest residuals; surviving
/// nodes keep their relative order.
inline DisplacementField filter_outliers(const DisplacementField& field, const FitResult& fit, double fraction,
                                         OutlierRanking ranking = OutlierRanking::PerAxisMax) {
  if (fit.node_count() != field.size()) {
    throw Error(ErrorKind::InvalidSpec, "fit does not belong to this field (node counts differ)");
  }
  const auto drop = outlier_indices(fit, fraction, ranking);
  DisplacementField out;
  out.reference_point = field.reference_point;
  out.centered = field.centered;
  out.nodes.reserve(field.size() - drop.size());
  std::size_t next = 0;
  for (std::size_t i = 0; i < field.size(); ++i) {
    if (next < drop.size() && drop[next] == i) {
      ++next;
      continue;
    }
    out.nodes.push_back(field.nodes[i]);
  }
  return out;
}

struct SignificanceElement {
  int row = 0;
  int col = 0;
  double estimate = 0.0;
  double halfwidth = 0.0;
  bool significant = false;
  std::optional<double> safety_factor;  // |estimate| / halfwidth, significant and finite only
};

struct SignificanceReport {
  std::vector<SignificanceElement> elements;  // 36 entries, row-major
  double level_multiplier = 3.0;
  double confidence_level = 0.0;  // two-sided Gaussian coverage of the multiplier

  const SignificanceElement& at(int row, int col) const { return elements.at(static_cast<std::size_t>(row * 6 + col)); }
};

struct SignificanceOutcome {
  SignificanceReport report;
  ComplianceMatrix compliance;  // non-significant elements zeroed, mask filled
};

/// Element k_ij is kept when its interval estimate +- halfwidth excludes
/// zero; halfwidth = multiplier * sd_i(experiment of column j) / |load_j|.
inline SignificanceOutcome significance_test(const ComplianceMatrix& k, std::span<const Experiment> experiments,
                                             std::span<const DeflectionCovariance> covariances,
                                             double level_multiplier = 3.0) {
  if (covariances.size() != experiments.size()) {
    throw Error(ErrorKind::MissingCovariance, "one covariance per experiment is required");
  }
  if (!(level_multiplier > 0.0)) throw Error(ErrorKind::InvalidSpec, "confidence multiplier must be positive");
  const auto columns = canonical_columns(experiments);
  if (!columns) {
    throw Error(ErrorKind::NotCanonical, "significance test needs the canonical six-load scheme");
  }

  SignificanceOutcome out;
  out.report.level_multiplier = level_multiplier;
  out.report.confidence_level = std::erf(level_multiplier / std::sqrt(2.0));
  out.report.elements.resize(36);
  Mat6 halfwidths = Mat6::Zero();
  for (std::size_t e = 0; e < experiments.size(); ++e) {
    const int j = (*columns)[e];
    const double magnitude = std::abs(experiments[e].wrench.as_vector()(j));
    halfwidths.col(j) = level_multiplier * covariances[e].std_devs() / magnitude;
  }

  out.compliance.k = k.k;
  out.compliance.symmetrized = k.symmetrized;
  Mask6 mask;
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 6; ++j) {
      SignificanceElement& el = out.report.elements[static_cast<std::size_t>(i * 6 + j)];
      el.row = i;
      el.col = j;
      el.estimate = k.k(i, j);
      el.halfwidth = halfwidths(i, j);
      el.significant = std::abs(el.estimate) > el.halfwidth;
      if (el.significant && el.halfwidth > 0.0) el.safety_factor = std::abs(el.estimate) / el.halfwidth;
      mask(i, j) = el.significant;
      if (!el.significant) out.compliance.k(i, j) = 0.0;
    }
  }
  out.compliance.significance_mask = mask;
  return out;
}

}  // namespace stiffid
