#include "depsev/evaluator.hpp"

#include <cmath>
#include <iomanip>
#include <nlohmann/json.hpp>
#include <sstream>

#include "depsev/common.hpp"
#include "depsev/csv.hpp"

namespace depsev {

namespace {

using nlohmann::json;

void check_labels(const std::vector<int>& predictions, const std::vector<int>& truth) {
    if (predictions.size() != truth.size()) {
        throw ArgumentError("evaluate: " + std::to_string(predictions.size()) +
                            " predictions against " + std::to_string(truth.size()) + " labels");
    }
    if (truth.empty()) throw ArgumentError("evaluate: empty label set");
    for (int v : predictions) {
        if (v < 0 || v >= kNumLabels)
            throw ArgumentError("evaluate: prediction " + std::to_string(v) + " out of range");
    }
    for (int v : truth) {
        if (v < 0 || v >= kNumLabels)
            throw ArgumentError("evaluate: label " + std::to_string(v) + " out of range");
    }
}

Eigen::MatrixXd raw_confusion_of(const std::vector<int>& predictions,
                                 const std::vector<int>& truth) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(kNumLabels, kNumLabels);
    for (std::size_t i = 0; i < truth.size(); ++i) m(truth[i], predictions[i]) += 1.0;
    return m;
}

std::string full_precision(double v) {
    std::ostringstream out;
    out << std::setprecision(17) << v;
    return out.str();
}

std::string fixed4(double v) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(4) << v;
    return out.str();
}

json report_to_json(const MetricsReport& r) {
    json classes = json::array();
    for (int c = 0; c < kNumLabels; ++c) {
        const ClassMetrics& m = r.per_class[static_cast<std::size_t>(c)];
        classes.push_back({{"label", label_name(c)},
                           {"precision", m.precision},
                           {"recall", m.recall},
                           {"f1", m.f1},
                           {"support", m.support},
                           {"no_predicted_positives", m.no_predicted_positives},
                           {"no_support", m.no_support}});
    }
    auto matrix = [](const Eigen::MatrixXd& m) {
        json rows = json::array();
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            json row = json::array();
            for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
            rows.push_back(std::move(row));
        }
        return rows;
    };
    return json{{"total", r.total},
                {"accuracy", r.accuracy},
                {"weighted",
                 {{"precision", r.weighted_precision},
                  {"recall", r.weighted_recall},
                  {"f1", r.weighted_f1}}},
                {"classes", classes},
                {"raw_confusion", matrix(r.raw_confusion)},
                {"confusion", matrix(r.confusion)}};
}

std::string markdown_summary_table(const std::string& p, const std::string& rec,
                                   const std::string& f1) {
    std::ostringstream out;
    out << "| weighted precision | weighted recall | weighted F1 |\n";
    out << "| --- | --- | --- |\n";
    out << "| " << p << " | " << rec << " | " << f1 << " |\n";
    return out.str();
}

}  // namespace

// ─── Metrics ────────────────────────────────────────────────────────────────

MetricsReport evaluate(const std::vector<int>& predictions, const std::vector<int>& truth) {
    check_labels(predictions, truth);

    MetricsReport r;
    r.total = truth.size();
    r.raw_confusion = raw_confusion_of(predictions, truth);
    r.confusion = Eigen::MatrixXd::Zero(kNumLabels, kNumLabels);
    for (Eigen::Index row = 0; row < kNumLabels; ++row) {
        const double sum = r.raw_confusion.row(row).sum();
        if (sum > 0.0) r.confusion.row(row) = r.raw_confusion.row(row) / sum;
    }

    const double total = static_cast<double>(r.total);
    for (int c = 0; c < kNumLabels; ++c) {
        ClassMetrics& m = r.per_class[static_cast<std::size_t>(c)];
        const double tp = r.raw_confusion(c, c);
        const double support = r.raw_confusion.row(c).sum();
        const double predicted = r.raw_confusion.col(c).sum();

        m.support = static_cast<std::size_t>(std::llround(support));
        if (predicted > 0.0) {
            m.precision = tp / predicted;
        } else {
            m.no_predicted_positives = true;
        }
        if (support > 0.0) {
            m.recall = tp / support;
        } else {
            m.no_support = true;
        }
        if (m.precision + m.recall > 0.0)
            m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);

        r.weighted_precision += support * m.precision / total;
        r.weighted_recall += support * m.recall / total;
        r.weighted_f1 += support * m.f1 / total;
    }
    r.accuracy = r.raw_confusion.trace() / total;
    return r;
}

Eigen::MatrixXd confusion_matrix(const std::vector<int>& predictions,
                                 const std::vector<int>& truth, Normalize normalize) {
    check_labels(predictions, truth);
    Eigen::MatrixXd m = raw_confusion_of(predictions, truth);
    if (normalize == Normalize::row) {
        for (Eigen::Index row = 0; row < m.rows(); ++row) {
            const double sum = m.row(row).sum();
            if (sum > 0.0) m.row(row) /= sum;
        }
    }
    return m;
}

// ─── Run aggregation ────────────────────────────────────────────────────────

RunSummary summarize_runs(const std::vector<MetricsReport>& runs) {
    if (runs.empty()) throw ArgumentError("summarize_runs: no runs");

    RunSummary s;
    s.runs = runs;
    auto stat = [&](auto accessor) {
        MetricStat st;
        for (const auto& r : runs) st.mean += accessor(r);
        st.mean /= static_cast<double>(runs.size());
        if (runs.size() > 1) {
            double acc = 0.0;
            for (const auto& r : runs) {
                const double d = accessor(r) - st.mean;
                acc += d * d;
            }
            st.std = std::sqrt(acc / static_cast<double>(runs.size() - 1));
        }
        return st;
    };
    s.weighted_precision = stat([](const MetricsReport& r) { return r.weighted_precision; });
    s.weighted_recall = stat([](const MetricsReport& r) { return r.weighted_recall; });
    s.weighted_f1 = stat([](const MetricsReport& r) { return r.weighted_f1; });
    s.accuracy = stat([](const MetricsReport& r) { return r.accuracy; });
    return s;
}

// ─── Rendering ──────────────────────────────────────────────────────────────

ReportFormat parse_report_format(const std::string& token) {
    if (token == "json") return ReportFormat::json;
    if (token == "csv") return ReportFormat::csv;
    if (token == "markdown" || token == "md") return ReportFormat::markdown;
    throw ConfigError("unknown report format: " + token);
}

std::string render_report(const MetricsReport& report, ReportFormat format) {
    switch (format) {
        case ReportFormat::json:
            return report_to_json(report).dump(2) + "\n";
        case ReportFormat::csv: {
            std::ostringstream out;
            csv::write_row(out, {"class", "precision", "recall", "f1", "support"});
            for (int c = 0; c < kNumLabels; ++c) {
                const ClassMetrics& m = report.per_class[static_cast<std::size_t>(c)];
                csv::write_row(out, {label_name(c), full_precision(m.precision),
                                     full_precision(m.recall), full_precision(m.f1),
                                     std::to_string(m.support)});
            }
            csv::write_row(out, {"weighted", full_precision(report.weighted_precision),
                                 full_precision(report.weighted_recall),
                                 full_precision(report.weighted_f1),
                                 std::to_string(report.total)});
            csv::write_row(out, {"accuracy", "", "", full_precision(report.accuracy),
                                 std::to_string(report.total)});
            return out.str();
        }
        case ReportFormat::markdown: {
            std::ostringstream out;
            out << markdown_summary_table(fixed4(report.weighted_precision),
                                          fixed4(report.weighted_recall),
                                          fixed4(report.weighted_f1));
            out << "\n| class | precision | recall | F1 | support |\n";
            out << "| --- | --- | --- | --- | --- |\n";
            for (int c = 0; c < kNumLabels; ++c) {
                const ClassMetrics& m = report.per_class[static_cast<std::size_t>(c)];
                out << "| " << label_name(c) << " | " << fixed4(m.precision) << " | "
                    << fixed4(m.recall) << " | " << fixed4(m.f1) << " | " << m.support << " |\n";
            }
            out << "\n| truth \\ predicted |";
            for (int c = 0; c < kNumLabels; ++c) out << " " << label_name(c) << " |";
            out << "\n| --- | --- | --- | --- | --- |\n";
            for (int row = 0; row < kNumLabels; ++row) {
                out << "| " << label_name(row) << " |";
                for (int col = 0; col < kNumLabels; ++col)
                    out << " " << fixed4(report.confusion(row, col)) << " |";
                out << "\n";
            }
            out << "\naccuracy " << fixed4(report.accuracy) << " over " << report.total
                << " samples\n";
            return out.str();
        }
    }
    return {};
}

std::string render_report(const RunSummary& summary, ReportFormat format) {
    switch (format) {
        case ReportFormat::json: {
            json runs = json::array();
            for (const auto& r : summary.runs) runs.push_back(report_to_json(r));
            auto stat = [](const MetricStat& s) {
                return json{{"mean", s.mean}, {"std", s.std}};
            };
            json doc{{"runs", runs},
                     {"aggregate",
                      {{"weighted_precision", stat(summary.weighted_precision)},
                       {"weighted_recall", stat(summary.weighted_recall)},
                       {"weighted_f1", stat(summary.weighted_f1)},
                       {"accuracy", stat(summary.accuracy)}}}};
            return doc.dump(2) + "\n";
        }
        case ReportFormat::csv: {
            std::ostringstream out;
            csv::write_row(out, {"run", "weighted_precision", "weighted_recall", "weighted_f1",
                                 "accuracy"});
            for (std::size_t i = 0; i < summary.runs.size(); ++i) {
                const MetricsReport& r = summary.runs[i];
                csv::write_row(out, {std::to_string(i + 1), full_precision(r.weighted_precision),
                                     full_precision(r.weighted_recall),
                                     full_precision(r.weighted_f1), full_precision(r.accuracy)});
            }
            csv::write_row(out, {"mean", full_precision(summary.weighted_precision.mean),
                                 full_precision(summary.weighted_recall.mean),
                                 full_precision(summary.weighted_f1.mean),
                                 full_precision(summary.accuracy.mean)});
            csv::write_row(out, {"std", full_precision(summary.weighted_precision.std),
                                 full_precision(summary.weighted_recall.std),
                                 full_precision(summary.weighted_f1.std),
                                 full_precision(summary.accuracy.std)});
            return out.str();
        }
        case ReportFormat::markdown: {
            auto cell = [&](const MetricStat& s) {
                if (summary.runs.size() > 1) return fixed4(s.mean) + " ± " + fixed4(s.std);
                return fixed4(s.mean);
            };
            std::ostringstream out;
            out << markdown_summary_table(cell(summary.weighted_precision),
                                          cell(summary.weighted_recall),
                                          cell(summary.weighted_f1));
            out << "\n" << summary.runs.size() << " run"
                << (summary.runs.size() == 1 ? "" : "s") << ", accuracy "
                << cell(summary.accuracy) << "\n";
            return out.str();
        }
    }
    return {};
}

MetricsReport parse_metrics_json(const std::string& text) {
    try {
        json doc = json::parse(text);
        MetricsReport r;
        r.total = doc.at("total").get<std::size_t>();
        r.accuracy = doc.at("accuracy").get<double>();
        r.weighted_precision = doc.at("weighted").at("precision").get<double>();
        r.weighted_recall = doc.at("weighted").at("recall").get<double>();
        r.weighted_f1 = doc.at("weighted").at("f1").get<double>();

        const json& classes = doc.at("classes");
        if (!classes.is_array() || classes.size() != kNumLabels)
            throw SchemaError("metrics json: expected " + std::to_string(kNumLabels) + " classes");
        for (int c = 0; c < kNumLabels; ++c) {
            const json& entry = classes.at(static_cast<std::size_t>(c));
            ClassMetrics& m = r.per_class[static_cast<std::size_t>(c)];
            if (entry.at("label").get<std::string>() != label_name(c))
                throw SchemaError("metrics json: classes out of order");
            m.precision = entry.at("precision").get<double>();
            m.recall = entry.at("recall").get<double>();
            m.f1 = entry.at("f1").get<double>();
            m.support = entry.at("support").get<std::size_t>();
            m.no_predicted_positives = entry.at("no_predicted_positives").get<bool>();
            m.no_support = entry.at("no_support").get<bool>();
        }

        auto matrix = [](const json& rows) {
            if (rows.size() != kNumLabels) throw SchemaError("metrics json: bad confusion shape");
            Eigen::MatrixXd m(kNumLabels, kNumLabels);
            for (Eigen::Index i = 0; i < kNumLabels; ++i) {
                const json& row = rows.at(static_cast<std::size_t>(i));
                if (row.size() != kNumLabels)
                    throw SchemaError("metrics json: bad confusion shape");
                for (Eigen::Index j = 0; j < kNumLabels; ++j)
                    m(i, j) = row.at(static_cast<std::size_t>(j)).get<double>();
            }
            return m;
        };
        r.raw_confusion = matrix(doc.at("raw_confusion"));
        r.confusion = matrix(doc.at("confusion"));
        return r;
    } catch (const json::exception& e) {
        throw SchemaError(std::string("metrics json: ") + e.what());
    }
}

}  // namespace depsev
