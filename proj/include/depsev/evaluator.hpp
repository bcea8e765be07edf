#pragma once

#include <Eigen/Core>
#include <array>
#include <string>
#include <vector>

#include "depsev/corpus.hpp"

namespace depsev {

// ─── Metrics ────────────────────────────────────────────────────────────────

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t support = 0;
    /// Nothing was predicted as this class, so precision defaulted to 0.
    bool no_predicted_positives = false;
    /// The class is absent from the truth, so recall defaulted to 0.
    bool no_support = false;
};

struct MetricsReport {
    std::array<ClassMetrics, kNumLabels> per_class;
    double weighted_precision = 0.0;
    double weighted_recall = 0.0;
    double weighted_f1 = 0.0;
    double accuracy = 0.0;
    std::size_t total = 0;
    /// Rows are truth, columns predictions, class order minimum to severe.
    Eigen::MatrixXd raw_confusion;
    /// Raw rows divided by their support; an empty row stays zero.
    Eigen::MatrixXd confusion;
};

/// Support-weighted precision, recall and F1 over the fixed class order.
MetricsReport evaluate(const std::vector<int>& predictions, const std::vector<int>& truth);

enum class Normalize { none, row };

Eigen::MatrixXd confusion_matrix(const std::vector<int>& predictions,
                                 const std::vector<int>& truth,
                                 Normalize normalize = Normalize::none);

// ─── Run aggregation ────────────────────────────────────────────────────────

struct MetricStat {
    double mean = 0.0;
    /// Sample standard deviation; 0 for a single run.
    double std = 0.0;
};

struct RunSummary {
    std::vector<MetricsReport> runs;
    MetricStat weighted_precision;
    MetricStat weighted_recall;
    MetricStat weighted_f1;
    MetricStat accuracy;
};

RunSummary summarize_runs(const std::vector<MetricsReport>& runs);

// ─── Rendering ──────────────────────────────────────────────────────────────

enum class ReportFormat { json, csv, markdown };

ReportFormat parse_report_format(const std::string& token);

/// json and csv round numbers losslessly; markdown is a fixed-precision
/// table in the weighted precision / recall / F1 column layout.
std::string render_report(const MetricsReport& report, ReportFormat format);

/// csv carries one row per run plus mean and std rows; markdown shows
/// mean +/- std once more than one run is present.
std::string render_report(const RunSummary& summary, ReportFormat format);

MetricsReport parse_metrics_json(const std::string& text);

}  // namespace depsev
