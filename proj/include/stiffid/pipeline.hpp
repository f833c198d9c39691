#pragma once

// End-to-end identification: center -> sensor selection -> fit -> noise
// level -> outlier filtering -> refit -> assembly -> significance ->
// symmetrization.

#include "stiffid/common.hpp"
#include "stiffid/compliance.hpp"
#include "stiffid/deflection.hpp"
#include "stiffid/field.hpp"
#include "stiffid/statistics.hpp"

#include <future>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace stiffid {

struct PipelineOptions {
  Estimator estimator = Estimator::Lin;
  AngleExtractionMethod angles = AngleExtractionMethod::Averaged;
  double outlier_fraction = 0.10;
  OutlierRanking ranking = OutlierRanking::PerAxisMax;
  int filter_passes = 1;
  double confidence_multiplier = 3.0;
  bool significance = true;
  bool symmetrize = true;
  bool parallel = true;
};

struct ExperimentInput {
  DisplacementField field;  // centered or not; uncentered fields are centered on their reference point
  Wrench wrench;
  std::optional<SensorRegion> sensor;
  std::string source;
};

struct ExperimentDiagnostics {
  std::size_t nodes_in = 0;
  std::size_t nodes_selected = 0;
  std::size_t nodes_removed = 0;
  double sigma_initial = 0.0;   // per-experiment residual s.t.d. before filtering
  double sigma_filtered = 0.0;  // after filtering
  bool within_linear_range = true;
};

struct IdentificationResult {
  std::vector<Experiment> experiments;
  std::vector<ExperimentDiagnostics> diagnostics;
  std::vector<DisplacementField> sensor_fields;  // after filtering, as used for the final fit
  NoiseEstimate noise;           // from the unfiltered fits
  NoiseEstimate noise_filtered;  // from the final fits
  ComplianceMatrix assembled;    // before zeroing and symmetrization
  std::optional<SignificanceReport> significance;
  ComplianceMatrix compliance;   // final
  double asymmetry = 0.0;        // relative, before symmetrization
  double min_eigenvalue_ratio = 0.0;
  std::vector<std::string> warnings;
};

namespace detail {

struct StageOne {
  DisplacementField sensor;
  FitResult fit;
  std::size_t nodes_in = 0;
};

inline StageOne fit_experiment(const ExperimentInput& input, const PipelineOptions& options) {
  StageOne out;
  out.nodes_in = input.field.size();
  DisplacementField field = input.field.centered ? input.field : center_field(input.field);
  out.sensor = input.sensor ? select_sensor(field, *input.sensor) : std::move(field);
  out.fit = estimate(out.sensor, options.estimator, options.angles);
  return out;
}

template <typename Fn>
auto map_experiments(std::size_t count, bool parallel, Fn&& fn) {
  using R = decltype(fn(std::size_t{0}));
  std::vector<R> out;
  out.reserve(count);
  auto tag = [](Error& e, std::size_t i) {
    if (!e.experiment) e.experiment = i;
  };
  if (!parallel) {
    for (std::size_t i = 0; i < count; ++i) {
      try {
        out.push_back(fn(i));
      } catch (Error& e) {
        tag(e, i);
        throw;
      }
    }
    return out;
  }
  std::vector<std::future<R>> futures;
  futures.reserve(count);
  for (std::size_t i = 0; i < count; ++i) futures.push_back(std::async(std::launch::async, fn, i));
  // Collect in index order so the first failing experiment is reported.
  for (std::size_t i = 0; i < count; ++i) {
    try {
      out.push_back(futures[i].get());
    } catch (Error& e) {
      tag(e, i);
      for (std::size_t j = i + 1; j < count; ++j) futures[j].wait();
      throw;
    }
  }
  return out;
}

}  // namespace detail

inline IdentificationResult identify(std::span<const ExperimentInput> inputs, const PipelineOptions& options = {}) {
  if (inputs.size() < 6) {
    throw Error(ErrorKind::InsufficientExperiments,
                "insufficient experiments: " + std::to_string(inputs.size()) + " given, at least 6 required");
  }
  if (options.filter_passes < 0) throw Error(ErrorKind::InvalidSpec, "filter passes must be >= 0");

  auto stage = detail::map_experiments(inputs.size(), options.parallel,
                                       [&](std::size_t i) { return detail::fit_experiment(inputs[i], options); });

  std::vector<FitResult> initial_fits;
  initial_fits.reserve(stage.size());
  for (const auto& s : stage) initial_fits.push_back(s.fit);

  IdentificationResult result;
  result.noise = estimate_sigma(initial_fits);

  const bool filtering = options.outlier_fraction > 0.0 && options.filter_passes > 0;
  auto refined = detail::map_experiments(stage.size(), options.parallel, [&](std::size_t i) {
    detail::StageOne s = stage[i];
    if (filtering) {
      for (int pass = 0; pass < options.filter_passes; ++pass) {
        s.sensor = filter_outliers(s.sensor, s.fit, options.outlier_fraction, options.ranking);
        s.fit = estimate(s.sensor, options.estimator, options.angles);
      }
    }
    return s;
  });

  std::vector<FitResult> final_fits;
  for (std::size_t i = 0; i < refined.size(); ++i) {
    const auto& s = refined[i];
    final_fits.push_back(s.fit);
    result.experiments.push_back({inputs[i].wrench, s.fit.deflection, inputs[i].source});
    ExperimentDiagnostics d;
    d.nodes_in = stage[i].nodes_in;
    d.nodes_selected = stage[i].sensor.size();
    d.nodes_removed = stage[i].sensor.size() - s.sensor.size();
    d.sigma_initial = result.noise.per_experiment_sigma[i];
    d.within_linear_range = s.fit.deflection.within_linear_range();
    if (!d.within_linear_range) {
      result.warnings.push_back("experiment " + std::to_string(i) +
                                ": rotation exceeds 1 deg, linearization error is no longer negligible");
    }
    result.diagnostics.push_back(d);
    result.sensor_fields.push_back(s.sensor);
  }
  result.noise_filtered = estimate_sigma(final_fits);
  for (std::size_t i = 0; i < result.diagnostics.size(); ++i) {
    result.diagnostics[i].sigma_filtered = result.noise_filtered.per_experiment_sigma[i];
  }

  result.assembled = assemble(result.experiments);
  result.asymmetry = relative_asymmetry(result.assembled.k);

  ComplianceMatrix current = result.assembled;
  if (options.significance && canonical_columns(result.experiments)) {
    // Intervals use the noise level of the unfiltered fits; trimming by
    // residual shrinks the residual spread without shrinking the estimator's.
    std::vector<DeflectionCovariance> covariances;
    for (const auto& field : result.sensor_fields) {
      covariances.push_back(deflection_covariance(field, result.noise.sigma));
    }
    auto outcome = significance_test(current, result.experiments, covariances, options.confidence_multiplier);
    result.significance = std::move(outcome.report);
    current = std::move(outcome.compliance);
  } else if (options.significance) {
    result.warnings.push_back("significance test skipped: loads are not the canonical six-load scheme");
  }

  if (options.symmetrize) current = symmetrize(current);
  result.min_eigenvalue_ratio = min_eigenvalue_ratio(current.k);
  if (result.min_eigenvalue_ratio < -1e-9) {
    result.warnings.push_back("identified compliance is not positive semi-definite");
  }
  result.compliance = std::move(current);
  return result;
}

}  // namespace stiffid
