#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace elevest {

double rmse(std::span<const double> predictions, std::span<const double> truths);

struct AccuracyPoint {
    double threshold_m = 0.0;
    double fraction = 0.0;
};

/// Fraction of |error| <= threshold, per (ascending) threshold.
std::vector<AccuracyPoint> cumulative_accuracy(std::span<const double> errors, std::span<const double> thresholds);

/// 0, step, 2*step, ... up to the first value covering max |error|.
std::vector<double> threshold_grid(std::span<const double> errors, double step);

struct BiasBin {
    double lower_m = 0.0;
    double center_m = 0.0;
    double mean_error_m = 0.0;  // mean of prediction - truth
    std::size_t count = 0;
};

struct TruthPrediction {
    double truth_m;
    double prediction_m;
};

/// Bins on truth elevation, [i*width, (i+1)*width); empty bins are omitted.
std::vector<BiasBin> bias_by_elevation(std::span<const TruthPrediction> pairs, double bin_width);

struct MethodScore {
    std::string name;
    double rmse_m = 0.0;
    std::size_t count = 0;
};

struct ReferenceValue {
    std::string label;
    double rmse_m;
};

/// Published full-scale RMSE values, carried as labels for comparison only.
std::vector<ReferenceValue> reference_constants();

struct EvalSample {
    std::string id;
    double truth_m = 0.0;
    double prediction_m = 0.0;
    std::string method;
};

struct EvalConfig {
    double threshold_step_m = 100.0;
    double bias_bin_width_m = 500.0;
};

struct EvalReport {
    std::string label;
    std::size_t sample_count = 0;
    std::vector<MethodScore> methods;  // overall first, then per method tag
    std::vector<AccuracyPoint> cumulative;
    std::vector<BiasBin> bias;
    std::vector<ReferenceValue> references;

    std::string to_json() const;
    std::string to_text() const;
    std::string cumulative_csv() const;
    std::string bias_csv() const;
};

/// Overall and per-method RMSE plus both curves. When `baseline_m` is given
/// the constant predictor is scored on the same samples.
EvalReport evaluate_samples(std::string label, std::span<const EvalSample> samples, const EvalConfig& cfg,
                            std::optional<double> baseline_m = std::nullopt);

}  // namespace elevest
