#pragma once

// Desk-scale benchmark studies on synthetic fields: linearization error
// versus rotation amplitude, translation round-off, Monte-Carlo noise
// propagation, the noisy beam pipeline and outlier contamination.
//
// Every trial derives its generator seed from (seed + trial index); results
// are aggregated by index, so outputs are identical for identical seeds.

#include "stiffid/common.hpp"
#include "stiffid/compliance.hpp"
#include "stiffid/deflection.hpp"
#include "stiffid/pipeline.hpp"
#include "stiffid/statistics.hpp"
#include "stiffid/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

namespace stiffid {

inline constexpr double deg(double rad) { return rad * 180.0 / std::numbers::pi; }
inline constexpr double rad(double degrees) { return degrees * std::numbers::pi / 180.0; }

/// Methods x amplitudes table of identification errors.
struct ErrorTable {
  std::string unit;
  std::vector<double> amplitudes;
  std::vector<std::string> methods;
  std::vector<std::vector<double>> max_error;   // [method][amplitude]
  std::vector<std::vector<double>> mean_error;  // [method][amplitude]

  std::size_t method_index(std::string_view name) const {
    const auto it = std::find(methods.begin(), methods.end(), name);
    if (it == methods.end()) throw Error(ErrorKind::InvalidSpec, "unknown method " + std::string(name));
    return static_cast<std::size_t>(it - methods.begin());
  }
  double max_at(std::string_view method, std::size_t amplitude) const {
    return max_error[method_index(method)][amplitude];
  }
};

namespace detail {
inline void init_table(ErrorTable& t, std::vector<double> amplitudes, std::vector<std::string> methods) {
  t.amplitudes = std::move(amplitudes);
  t.methods = std::move(methods);
  t.max_error.assign(t.methods.size(), std::vector<double>(t.amplitudes.size(), 0.0));
  t.mean_error.assign(t.methods.size(), std::vector<double>(t.amplitudes.size(), 0.0));
}
}  // namespace detail

/// Rotation errors (deg) for dphi = (b, b, b) applied as an exact rotation
/// together with p = (a, a, a). The per-trial error is the largest per-axis
/// deviation; the table holds its max and mean over trials.
inline ErrorTable run_amplitude_study(const std::vector<double>& amplitudes_deg, const MeshPattern& mesh,
                                      int trials, std::uint64_t seed, double sigma = 0.0,
                                      double translation = 1.0) {
  if (trials < 1) throw Error(ErrorKind::InvalidSpec, "trials must be >= 1");
  std::vector<std::string> methods;
  for (auto m : kAllAngleMethods) methods.emplace_back(to_label(m));
  methods.emplace_back("LIN");
  methods.emplace_back("LIN asin");

  ErrorTable table;
  table.unit = "deg";
  detail::init_table(table, amplitudes_deg, methods);
  const DisplacementField grid = generate_pattern(mesh);

  for (std::size_t a = 0; a < amplitudes_deg.size(); ++a) {
    const double b = rad(amplitudes_deg[a]);
    const Vec3 truth_rotation = Vec3::Constant(b);
    for (int t = 0; t < trials; ++t) {
      const GroundTruth truth{{Vec3::Constant(translation), truth_rotation}, sigma, seed + static_cast<std::uint64_t>(t)};
      const DisplacementField field = apply_rigid_transform(grid, truth, RotationModel::Composed);
      std::vector<Vec3> estimates;
      const FitResult svd = estimate_svd(field);
      for (auto m : kAllAngleMethods) estimates.push_back(extract_angles(*svd.rotation_matrix, m));
      const Vec3 lin = estimate_lin(field).deflection.rotation;
      estimates.push_back(lin);
      estimates.push_back(lin.unaryExpr([](double v) { return std::asin(v); }));
      for (std::size_t m = 0; m < estimates.size(); ++m) {
        const double err = deg((estimates[m] - truth_rotation).cwiseAbs().maxCoeff());
        table.max_error[m][a] = std::max(table.max_error[m][a], err);
        table.mean_error[m][a] += err / trials;
      }
    }
  }
  return table;
}

/// Translation errors (mm) for pure translations p = (a, a, a).
inline ErrorTable run_translation_study(const std::vector<double>& amplitudes_mm, const MeshPattern& mesh,
                                        int trials, std::uint64_t seed, double sigma = 0.0) {
  if (trials < 1) throw Error(ErrorKind::InvalidSpec, "trials must be >= 1");
  ErrorTable table;
  table.unit = "mm";
  detail::init_table(table, amplitudes_mm, {"SVD", "LIN"});
  const DisplacementField grid = generate_pattern(mesh);
  for (std::size_t a = 0; a < amplitudes_mm.size(); ++a) {
    const Vec3 p = Vec3::Constant(amplitudes_mm[a]);
    for (int t = 0; t < trials; ++t) {
      const GroundTruth truth{{p, Vec3::Zero()}, sigma, seed + static_cast<std::uint64_t>(t)};
      const DisplacementField field = apply_rigid_transform(grid, truth, RotationModel::Composed);
      const std::array<Vec3, 2> est{estimate_svd(field).deflection.translation,
                                    estimate_lin(field).deflection.translation};
      for (std::size_t m = 0; m < est.size(); ++m) {
        const double err = (est[m] - p).cwiseAbs().maxCoeff();
        table.max_error[m][a] = std::max(table.max_error[m][a], err);
        table.mean_error[m][a] += err / trials;
      }
    }
  }
  return table;
}

struct AmplitudeBand {
  double best = 0.0;  // amplitude with the smallest mean relative error
  double low = 0.0;   // band of amplitudes within `factor` of that minimum
  double high = 0.0;
};

/// Amplitudes whose mean relative error (error / amplitude) is within
/// `factor` of the best one, for the given method.
inline AmplitudeBand preferred_amplitude_band(const ErrorTable& table, std::string_view method, double factor = 2.0) {
  const auto m = table.method_index(method);
  std::vector<double> rel(table.amplitudes.size());
  for (std::size_t a = 0; a < rel.size(); ++a) rel[a] = table.mean_error[m][a] / table.amplitudes[a];
  const auto best = static_cast<std::size_t>(std::min_element(rel.begin(), rel.end()) - rel.begin());
  AmplitudeBand band{table.amplitudes[best], table.amplitudes[best], table.amplitudes[best]};
  for (std::size_t a = 0; a < rel.size(); ++a) {
    if (rel[a] <= factor * rel[best]) {
      band.low = std::min(band.low, table.amplitudes[a]);
      band.high = std::max(band.high, table.amplitudes[a]);
    }
  }
  return band;
}

// ---------------------------------------------------------------------------
// Monte-Carlo noise propagation

struct NoiseStudyResult {
  int trials = 0;
  Vec6 empirical_sd = Vec6::Zero();  // (mm x3, rad x3), about the sample mean
  Vec6 analytic_sd = Vec6::Zero();   // from the covariance formulas
  Vec6 mean_error = Vec6::Zero();    // sample mean of (estimate - truth)
  Vec6 standard_error = Vec6::Zero();
  double sigma_hat_mean = 0.0;       // single-field residual estimator
  double sigma_hat_max_rel_dev = 0.0;
  double max_abs_error = 0.0;        // largest |estimate - truth| component over all trials
};

/// Repeated noisy fields around one ground truth; `model` selects whether
/// the linearization bias is present (it shifts the mean, not the spread).
inline NoiseStudyResult run_noise_study(const MeshPattern& mesh, const Deflection& truth_deflection, double sigma,
                                        int trials, std::uint64_t seed, Estimator estimator = Estimator::Lin,
                                        RotationModel model = RotationModel::Composed) {
  if (trials < 2) throw Error(ErrorKind::InvalidSpec, "noise study needs at least 2 trials");
  const DisplacementField grid = generate_pattern(mesh);
  std::vector<Vec6> errors;
  errors.reserve(static_cast<std::size_t>(trials));
  NoiseStudyResult out;
  out.trials = trials;
  std::vector<double> sigma_hats;
  for (int t = 0; t < trials; ++t) {
    const GroundTruth truth{truth_deflection, sigma, seed + static_cast<std::uint64_t>(t)};
    const DisplacementField field = apply_rigid_transform(grid, truth, model);
    const FitResult fit = estimate(field, estimator);
    errors.push_back(fit.deflection.as_vector() - truth_deflection.as_vector());
    const FitResult one[1] = {fit};
    sigma_hats.push_back(estimate_sigma(one).sigma);
  }
  for (const auto& e : errors) out.mean_error += e / trials;
  Vec6 var = Vec6::Zero();
  for (const auto& e : errors) {
    var += (e - out.mean_error).cwiseAbs2() / (trials - 1);
    out.max_abs_error = std::max(out.max_abs_error, e.cwiseAbs().maxCoeff());
  }
  out.empirical_sd = var.cwiseSqrt();
  out.standard_error = out.empirical_sd / std::sqrt(static_cast<double>(trials));
  out.analytic_sd = deflection_covariance(grid, sigma).std_devs();
  out.sigma_hat_mean = std::accumulate(sigma_hats.begin(), sigma_hats.end(), 0.0) / trials;
  if (sigma > 0.0) {
    for (double s : sigma_hats) out.sigma_hat_max_rel_dev = std::max(out.sigma_hat_max_rel_dev, std::abs(s / sigma - 1.0));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Beam benchmark

/// Six noisy tip fields of the beam under the benchmark loads, ready for
/// identify(). Experiment j uses generator seed experiment_seed(seed, j).
inline std::vector<ExperimentInput> beam_experiments(const BeamSpec& spec, const std::array<Wrench, 6>& loads,
                                                     const MeshPattern& mesh, double sigma, std::uint64_t seed,
                                                     const std::optional<SensorRegion>& sensor = std::nullopt) {
  std::vector<ExperimentInput> out;
  for (std::size_t j = 0; j < loads.size(); ++j) {
    out.push_back({beam_tip_field(spec, loads[j], mesh, sigma, experiment_seed(seed, j)), loads[j], sensor,
                   "beam experiment " + std::to_string(j + 1)});
  }
  return out;
}

struct BeamTrialOutcome {
  int zeros_detected = 0;      // structural zeros that are exactly zero in the final matrix
  int nonzeros_retained = 0;   // structural nonzeros flagged significant
  double min_safety_factor = std::numeric_limits<double>::infinity();  // over structural nonzeros
  double max_relative_error = 0.0;  // over structural nonzeros of the final matrix
  double sigma_hat = 0.0;
  std::size_t sensor_nodes = 0;

  bool full_detection(double min_factor) const {
    return zeros_detected == 26 && nonzeros_retained == 10 && min_safety_factor >= min_factor;
  }
};

inline BeamTrialOutcome evaluate_beam_identification(const IdentificationResult& result, const Mat6& oracle) {
  BeamTrialOutcome out;
  out.sigma_hat = result.noise.sigma;
  out.sensor_nodes = result.diagnostics.empty() ? 0 : result.diagnostics.front().nodes_selected;
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 6; ++j) {
      const double truth = oracle(i, j);
      const double got = result.compliance.k(i, j);
      if (truth == 0.0) {
        if (got == 0.0) ++out.zeros_detected;
        continue;
      }
      out.max_relative_error = std::max(out.max_relative_error, std::abs(got - truth) / std::abs(truth));
      if (result.significance) {
        const auto& el = result.significance->at(i, j);
        if (el.significant) ++out.nonzeros_retained;
        out.min_safety_factor = std::min(out.min_safety_factor, el.safety_factor.value_or(0.0));
      }
    }
  }
  return out;
}

inline BeamTrialOutcome run_beam_trial(const BeamSpec& spec, const MeshPattern& mesh, double sigma,
                                       std::uint64_t seed, const PipelineOptions& options,
                                       const std::optional<SensorRegion>& sensor = std::nullopt) {
  const auto inputs = beam_experiments(spec, beam_benchmark_loads(), mesh, sigma, seed, sensor);
  const auto result = identify(inputs, options);
  return evaluate_beam_identification(result, beam_compliance_oracle(spec).k);
}

// ---------------------------------------------------------------------------
// Outlier contamination

struct ContaminationOutcome {
  double error_unfiltered = 0.0;  // normalized deflection error, see below
  double error_filtered = 0.0;
  std::size_t corrupted = 0;
  std::size_t corrupted_removed = 0;
};

/// Corrupts ceil(contamination * n) distinct nodes with spikes of
/// +-spike_sigmas * sigma on every axis, then compares the LIN estimate with
/// and without one filtering pass. Errors are sqrt(sum_c (err_c / sd_c)^2)
/// with sd_c the analytic standard deviations of the clean field, so
/// translation and rotation are weighted by their own precision.
inline ContaminationOutcome run_contamination_trial(const MeshPattern& mesh, const Deflection& truth_deflection,
                                                    double sigma, double contamination, double spike_sigmas,
                                                    double filter_fraction, std::uint64_t seed) {
  const DisplacementField grid = generate_pattern(mesh);
  DisplacementField field =
      apply_rigid_transform(grid, {truth_deflection, sigma, seed}, RotationModel::Differential);
  const std::size_t n = field.size();

  // Spike placement and signs come from a second stream.
  GaussianSampler rng(~seed);
  std::vector<std::size_t> index(n);
  std::iota(index.begin(), index.end(), std::size_t{0});
  const std::size_t corrupt = outlier_count(n, contamination);
  for (std::size_t i = 0; i < corrupt; ++i) {
    const auto pick = i + static_cast<std::size_t>(rng.uniform() * static_cast<double>(n - i));
    std::swap(index[i], index[std::min(pick, n - 1)]);
  }
  std::vector<bool> is_corrupt(n, false);
  for (std::size_t i = 0; i < corrupt; ++i) {
    is_corrupt[index[i]] = true;
    Vec3 spike;
    for (int c = 0; c < 3; ++c) spike[c] = (rng.uniform() < 0.5 ? -1.0 : 1.0) * spike_sigmas * sigma;
    field.nodes[index[i]].displacement += spike;
  }

  const Vec6 sd = deflection_covariance(grid, sigma).std_devs();
  auto normalized = [&](const FitResult& fit) {
    return (fit.deflection.as_vector() - truth_deflection.as_vector()).cwiseQuotient(sd).norm();
  };
  const FitResult raw = estimate_lin(field);
  const auto drop = outlier_indices(raw, filter_fraction);
  const FitResult filtered = estimate_lin(filter_outliers(field, raw, filter_fraction));

  ContaminationOutcome out;
  out.error_unfiltered = normalized(raw);
  out.error_filtered = normalized(filtered);
  out.corrupted = corrupt;
  for (auto i : drop) out.corrupted_removed += is_corrupt[i] ? 1 : 0;
  return out;
}

// ---------------------------------------------------------------------------
// LIN / SVD agreement on random fields

struct AgreementOutcome {
  double max_translation_gap = 0.0;  // mm
  double max_rotation_gap = 0.0;     // rad
  int fields = 0;
};

/// Random well-conditioned clouds: 10..300 nodes uniform in an
/// anisotropically scaled box offset from the reference point, moment
/// condition number < 1e6, random translation (|p_c| <= 10 mm) and an exact
/// rotation of norm <= max_rotation.
inline AgreementOutcome run_agreement_study(int fields, std::uint64_t seed, double max_rotation) {
  GaussianSampler rng(seed);
  AgreementOutcome out;
  out.fields = fields;
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * rng.uniform(); };
  for (int f = 0; f < fields; ++f) {
    DisplacementField field;
    field.centered = true;
    while (true) {
      field.nodes.clear();
      const auto n = static_cast<int>(uniform(10.0, 301.0));
      const Vec3 scale(uniform(0.5, 3.0), uniform(0.5, 3.0), uniform(0.5, 3.0));
      const Vec3 offset(uniform(-5.0, 5.0), uniform(-5.0, 5.0), uniform(-5.0, 5.0));
      for (int i = 0; i < n; ++i) {
        const Vec3 u(uniform(-5.0, 5.0), uniform(-5.0, 5.0), uniform(-5.0, 5.0));
        field.nodes.push_back({u.cwiseProduct(scale) + offset, Vec3::Zero()});
      }
      const Mat3 moments = moment_matrix(field, centroid(field));
      const Eigen::SelfAdjointEigenSolver<Mat3> eig(moments, Eigen::EigenvaluesOnly);
      if (eig.eigenvalues().minCoeff() > 0.0 && eig.eigenvalues().maxCoeff() / eig.eigenvalues().minCoeff() < 1e6) break;
    }
    const Vec3 axis = Vec3(rng.standard(), rng.standard(), rng.standard()).normalized();
    const Vec3 rotation = axis * max_rotation * rng.uniform();
    const Vec3 translation(uniform(-10.0, 10.0), uniform(-10.0, 10.0), uniform(-10.0, 10.0));
    field = apply_rigid_transform(field, {{translation, rotation}, 0.0, 0}, RotationModel::Composed);
    const Deflection lin = estimate_lin(field).deflection;
    const Deflection svd = estimate_svd(field, AngleExtractionMethod::Averaged).deflection;
    out.max_translation_gap = std::max(out.max_translation_gap, (lin.translation - svd.translation).cwiseAbs().maxCoeff());
    out.max_rotation_gap = std::max(out.max_rotation_gap, (lin.rotation - svd.rotation).cwiseAbs().maxCoeff());
  }
  return out;
}

/// Same comparison restricted to cubic grids centred on the reference point
/// (random edge, step and motion), where both estimators reduce to the
/// antisymmetric part of the fitted rotation.
inline AgreementOutcome run_isotropic_agreement_study(int fields, std::uint64_t seed, double max_rotation) {
  GaussianSampler rng(seed);
  AgreementOutcome out;
  out.fields = fields;
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * rng.uniform(); };
  for (int f = 0; f < fields; ++f) {
    const int intervals = 2 + static_cast<int>(uniform(0.0, 11.0));
    const double step = uniform(0.2, 2.0);
    DisplacementField field = generate_pattern(pattern::Cubic{intervals * step, step});
    const Vec3 axis = Vec3(rng.standard(), rng.standard(), rng.standard()).normalized();
    const Vec3 rotation = axis * max_rotation * rng.uniform();
    const Vec3 translation(uniform(-10.0, 10.0), uniform(-10.0, 10.0), uniform(-10.0, 10.0));
    field = apply_rigid_transform(field, {{translation, rotation}, 0.0, 0}, RotationModel::Composed);
    const Deflection lin = estimate_lin(field).deflection;
    const Deflection svd = estimate_svd(field, AngleExtractionMethod::Averaged).deflection;
    out.max_translation_gap = std::max(out.max_translation_gap, (lin.translation - svd.translation).cwiseAbs().maxCoeff());
    out.max_rotation_gap = std::max(out.max_rotation_gap, (lin.rotation - svd.rotation).cwiseAbs().maxCoeff());
  }
  return out;
}

}  // namespace stiffid
