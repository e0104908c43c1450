#include "elevest/evaluate.hpp"

#include "elevest/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <sstream>

namespace elevest {

double rmse(std::span<const double> predictions, std::span<const double> truths) {
    if (predictions.empty()) throw ValidationError("rmse of an empty list");
    if (predictions.size() != truths.size()) throw ValidationError("rmse inputs differ in length");
    double s = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double d = predictions[i] - truths[i];
        s += d * d;
    }
    return std::sqrt(s / static_cast<double>(predictions.size()));
}

std::vector<AccuracyPoint> cumulative_accuracy(std::span<const double> errors, std::span<const double> thresholds) {
    if (errors.empty()) throw ValidationError("cumulative accuracy of an empty error list");
    if (!std::is_sorted(thresholds.begin(), thresholds.end())) throw ValidationError("thresholds must be ascending");
    std::vector<double> abs_err(errors.size());
    std::transform(errors.begin(), errors.end(), abs_err.begin(), [](double e) { return std::abs(e); });
    std::sort(abs_err.begin(), abs_err.end());
    std::vector<AccuracyPoint> out;
    out.reserve(thresholds.size());
    for (double t : thresholds) {
        const auto hit = std::upper_bound(abs_err.begin(), abs_err.end(), t) - abs_err.begin();
        out.push_back({t, static_cast<double>(hit) / static_cast<double>(abs_err.size())});
    }
    return out;
}

std::vector<double> threshold_grid(std::span<const double> errors, double step) {
    if (!(step > 0.0)) throw ValidationError("threshold step must be > 0");
    double max_err = 0.0;
    for (double e : errors) max_err = std::max(max_err, std::abs(e));
    std::vector<double> grid;
    for (std::size_t i = 0;; ++i) {
        const double t = static_cast<double>(i) * step;
        grid.push_back(t);
        if (t >= max_err) break;
    }
    return grid;
}

std::vector<BiasBin> bias_by_elevation(std::span<const TruthPrediction> pairs, double bin_width) {
    if (!(bin_width > 0.0)) throw ValidationError("bin width must be > 0");
    if (pairs.empty()) throw ValidationError("bias of an empty list");
    std::map<long long, std::pair<double, std::size_t>> bins;
    for (const auto& p : pairs) {
        const auto idx = static_cast<long long>(std::floor(p.truth_m / bin_width));
        auto& [sum, count] = bins[idx];
        sum += p.prediction_m - p.truth_m;
        ++count;
    }
    std::vector<BiasBin> out;
    out.reserve(bins.size());
    for (const auto& [idx, acc] : bins) {
        BiasBin b;
        b.lower_m = static_cast<double>(idx) * bin_width;
        b.center_m = b.lower_m + 0.5 * bin_width;
        b.mean_error_m = acc.first / static_cast<double>(acc.second);
        b.count = acc.second;
        out.push_back(b);
    }
    return out;
}

std::vector<ReferenceValue> reference_constants() {
    return {
        {"human (user experiment set)", 879.95},
        {"baseline (test set)", 801.49},
        {"baseline, test-set mean (test set)", 786.42},
        {"CNN (test set)", 537.11},
        {"BOW (test set)", 601.63},
        {"mVocab (test set)", 610.36},
        {"BOW+mVocab (test set)", 564.14},
        {"BOW+CNN (test set)", 500.44},
    };
}

EvalReport evaluate_samples(std::string label, std::span<const EvalSample> samples, const EvalConfig& cfg,
                            std::optional<double> baseline_m) {
    if (samples.empty()) throw ValidationError("no samples to evaluate");
    EvalReport r;
    r.label = std::move(label);
    r.sample_count = samples.size();
    r.references = reference_constants();

    std::vector<double> pred;
    std::vector<double> truth;
    std::vector<double> err;
    std::vector<TruthPrediction> pairs;
    std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> by_method;
    for (const auto& s : samples) {
        pred.push_back(s.prediction_m);
        truth.push_back(s.truth_m);
        err.push_back(s.prediction_m - s.truth_m);
        pairs.push_back({s.truth_m, s.prediction_m});
        auto& [p, t] = by_method[s.method];
        p.push_back(s.prediction_m);
        t.push_back(s.truth_m);
    }
    r.methods.push_back({r.label, rmse(pred, truth), samples.size()});
    for (const auto& [name, pt] : by_method) {
        r.methods.push_back({r.label + "/" + name, rmse(pt.first, pt.second), pt.first.size()});
    }
    if (baseline_m) {
        std::vector<double> constant(truth.size(), *baseline_m);
        r.methods.push_back({"baseline", rmse(constant, truth), truth.size()});
    }
    r.cumulative = cumulative_accuracy(err, threshold_grid(err, cfg.threshold_step_m));
    r.bias = bias_by_elevation(pairs, cfg.bias_bin_width_m);
    return r;
}

std::string EvalReport::to_json() const {
    using nlohmann::json;
    json j;
    j["label"] = label;
    j["sample_count"] = sample_count;
    json m = json::array();
    for (const auto& s : methods) m.push_back({{"name", s.name}, {"rmse_m", s.rmse_m}, {"count", s.count}});
    j["rmse"] = std::move(m);
    json c = json::array();
    for (const auto& p : cumulative) c.push_back({{"threshold_m", p.threshold_m}, {"fraction", p.fraction}});
    j["cumulative_accuracy"] = std::move(c);
    json b = json::array();
    for (const auto& bin : bias) {
        b.push_back({{"bin_lower_m", bin.lower_m},
                     {"bin_center_m", bin.center_m},
                     {"mean_error_m", bin.mean_error_m},
                     {"count", bin.count}});
    }
    j["bias_by_elevation"] = std::move(b);
    json refs = json::array();
    for (const auto& ref : references) refs.push_back({{"label", ref.label}, {"rmse_m", ref.rmse_m}});
    j["reference_constants"] = std::move(refs);
    return j.dump(2);
}

std::string EvalReport::to_text() const {
    std::ostringstream out;
    out << std::fixed << std::setprecision(2);
    out << "evaluation: " << label << " (" << sample_count << " images)\n\n";
    out << "RMSE [m]\n";
    for (const auto& s : methods) out << "  " << std::left << std::setw(32) << s.name << s.rmse_m << "  (n=" << s.count << ")\n";
    out << "\ncumulative accuracy\n";
    for (const auto& p : cumulative) out << "  |err| <= " << p.threshold_m << " m : " << p.fraction << '\n';
    out << "\nbias by elevation\n";
    for (const auto& b : bias) out << "  [" << b.lower_m << ", " << b.lower_m + 2 * (b.center_m - b.lower_m) << ") : " << b.mean_error_m << " m  (n=" << b.count << ")\n";
    out << "\nreference values (full-scale corpus)\n";
    for (const auto& r : references) out << "  " << std::left << std::setw(36) << r.label << r.rmse_m << '\n';
    return out.str();
}

std::string EvalReport::cumulative_csv() const {
    std::ostringstream out;
    out << std::setprecision(10) << "threshold_m,fraction\n";
    for (const auto& p : cumulative) out << p.threshold_m << ',' << p.fraction << '\n';
    return out.str();
}

std::string EvalReport::bias_csv() const {
    std::ostringstream out;
    out << std::setprecision(10) << "bin_lower_m,bin_center_m,mean_error_m,count\n";
    for (const auto& b : bias) out << b.lower_m << ',' << b.center_m << ',' << b.mean_error_m << ',' << b.count << '\n';
    return out.str();
}

}  // namespace elevest
