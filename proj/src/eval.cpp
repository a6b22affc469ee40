#include "dgen/eval.hpp"

#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "dgen/errors.hpp"

namespace dgen {

double f1_score(double precision, double recall) {
    if (precision + recall == 0.0) return 0.0;
    return 2.0 * precision * recall / (precision + recall);
}

namespace {

double ratio(std::size_t num, std::size_t denom) {
    return denom == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(denom);
}

struct LabelCounts {
    std::size_t tp = 0;
    std::size_t pred = 0;
    std::size_t gold = 0;
};

struct SpanTotals {
    std::size_t kept = 0;
    std::size_t filtered = 0;
    std::size_t tp = 0;
    std::size_t pred_spans = 0;
    std::size_t gold_spans = 0;
    std::size_t token_match = 0;
    std::size_t token_total = 0;
    std::map<std::string, LabelCounts> per_label;

    void merge(const SpanTotals& other) {
        kept += other.kept;
        filtered += other.filtered;
        tp += other.tp;
        pred_spans += other.pred_spans;
        gold_spans += other.gold_spans;
        token_match += other.token_match;
        token_total += other.token_total;
        for (const auto& [label, counts] : other.per_label) {
            LabelCounts& mine = per_label[label];
            mine.tp += counts.tp;
            mine.pred += counts.pred;
            mine.gold += counts.gold;
        }
    }
};

// Scores one aligned sentence pair. Both span lists are sorted by start and
// overlap-free, so starts are unique and a two-pointer walk finds the exact
// (start, end, label) matches.
SpanTotals score_pair(const TaggedSentence& pred, const TaggedSentence& gold) {
    SpanTotals totals;
    if (!filter_length_mismatch(pred, gold)) {
        totals.filtered = 1;
        return totals;
    }
    totals.kept = 1;

    auto pred_spans = tags_to_spans(pred);
    auto gold_spans = tags_to_spans(gold);
    totals.pred_spans = pred_spans.size();
    totals.gold_spans = gold_spans.size();
    for (const auto& span : pred_spans) totals.per_label[span.label].pred++;
    for (const auto& span : gold_spans) totals.per_label[span.label].gold++;

    std::size_t p = 0, g = 0;
    while (p < pred_spans.size() && g < gold_spans.size()) {
        if (pred_spans[p].start_token < gold_spans[g].start_token) {
            ++p;
        } else if (gold_spans[g].start_token < pred_spans[p].start_token) {
            ++g;
        } else {
            if (pred_spans[p] == gold_spans[g]) {
                totals.tp++;
                totals.per_label[pred_spans[p].label].tp++;
            }
            ++p;
            ++g;
        }
    }

    totals.token_total = gold.tags.size();
    for (std::size_t i = 0; i < gold.tags.size(); ++i)
        if (pred.tags[i] == gold.tags[i]) totals.token_match++;
    return totals;
}

AgreementReport report_from_totals(const SpanTotals& totals) {
    AgreementReport report;
    report.task = AgreementTask::SpanLabeling;
    report.n_scored = totals.kept;
    report.n_filtered = totals.filtered;
    report.precision = ratio(totals.tp, totals.pred_spans);
    report.recall = ratio(totals.tp, totals.gold_spans);
    report.f1 = f1_score(report.precision, report.recall);
    report.accuracy = ratio(totals.token_match, totals.token_total);
    for (const auto& [label, counts] : totals.per_label) {
        PerLabelScore score;
        score.precision = ratio(counts.tp, counts.pred);
        score.recall = ratio(counts.tp, counts.gold);
        score.f1 = f1_score(score.precision, score.recall);
        score.support = counts.gold;
        report.per_label[label] = score;
    }
    return report;
}

} // namespace

AgreementReport classification_agreement(const Dataset& pred, const Dataset& gold,
                                         const std::string& label_column) {
    if (pred.num_rows() != gold.num_rows())
        throw RowCountMismatch(pred.num_rows(), gold.num_rows());
    if (!pred.has_column(label_column) || !gold.has_column(label_column))
        throw UnknownColumn(label_column);

    AgreementReport report;
    report.task = AgreementTask::Classification;
    report.n_scored = gold.num_rows();

    std::size_t matches = 0;
    std::map<std::string, LabelCounts> counts;
    for (std::size_t r = 0; r < gold.num_rows(); ++r) {
        const Value& pv = pred.rows[r].at(label_column);
        const Value& gv = gold.rows[r].at(label_column);
        std::string gold_label = value_to_string(gv);
        counts[gold_label].gold++;
        if (is_null(pv)) {
            report.null_predictions++;
            continue;
        }
        std::string pred_label = value_to_string(pv);
        counts[pred_label].pred++;
        if (pred_label == gold_label) {
            ++matches;
            counts[gold_label].tp++;
        }
    }
    report.accuracy = ratio(matches, gold.num_rows());
    for (const auto& [label, c] : counts) {
        PerLabelScore score;
        score.precision = ratio(c.tp, c.pred);
        score.recall = ratio(c.tp, c.gold);
        score.f1 = f1_score(score.precision, score.recall);
        score.support = c.gold;
        report.per_label[label] = score;
    }
    return report;
}

AgreementReport span_agreement(const std::vector<TaggedSentence>& pred,
                               const std::vector<TaggedSentence>& gold, ExecMode mode,
                               int num_threads) {
    if (pred.size() != gold.size()) throw ListLengthMismatch(pred.size(), gold.size());

    SpanTotals totals;
    if (mode == ExecMode::Serial || num_threads <= 1) {
        for (std::size_t i = 0; i < pred.size(); ++i)
            totals.merge(score_pair(pred[i], gold[i]));
        return report_from_totals(totals);
    }

#if defined(_OPENMP)
#pragma omp parallel num_threads(num_threads)
    {
        SpanTotals local;
#pragma omp for schedule(static) nowait
        for (long long i = 0; i < static_cast<long long>(pred.size()); ++i)
            local.merge(score_pair(pred[static_cast<std::size_t>(i)],
                                   gold[static_cast<std::size_t>(i)]));
#pragma omp critical(dgen_span_totals)
        totals.merge(local);
    }
#else
    for (std::size_t i = 0; i < pred.size(); ++i)
        totals.merge(score_pair(pred[i], gold[i]));
#endif
    return report_from_totals(totals);
}

namespace {

const char* task_name(AgreementTask task) {
    return task == AgreementTask::Classification ? "classification" : "spans";
}

} // namespace

std::string AgreementReport::to_table() const {
    std::ostringstream out;
    out << std::fixed << std::setprecision(4);
    out << "task: " << task_name(task) << "\n";
    out << "scored: " << n_scored << "  filtered: " << n_filtered
        << "  null_predictions: " << null_predictions << "\n";
    out << "accuracy: " << accuracy << "\n";
    if (task == AgreementTask::SpanLabeling)
        out << "precision: " << precision << "  recall: " << recall << "  f1: " << f1 << "\n";
    if (!per_label.empty()) {
        out << std::left << std::setw(20) << "label" << std::right << std::setw(10)
            << "precision" << std::setw(10) << "recall" << std::setw(10) << "f1"
            << std::setw(10) << "support" << "\n";
        for (const auto& [label, score] : per_label) {
            out << std::left << std::setw(20) << label << std::right << std::setw(10)
                << score.precision << std::setw(10) << score.recall << std::setw(10)
                << score.f1 << std::setw(10) << score.support << "\n";
        }
    }
    return out.str();
}

std::string AgreementReport::to_json_string() const {
    nlohmann::ordered_json j;
    j["task"] = task_name(task);
    j["n_scored"] = n_scored;
    j["n_filtered"] = n_filtered;
    j["null_predictions"] = null_predictions;
    j["accuracy"] = accuracy;
    if (task == AgreementTask::SpanLabeling) {
        j["precision"] = precision;
        j["recall"] = recall;
        j["f1"] = f1;
    }
    nlohmann::ordered_json labels = nlohmann::ordered_json::object();
    for (const auto& [label, score] : per_label) {
        labels[label] = {{"precision", score.precision},
                         {"recall", score.recall},
                         {"f1", score.f1},
                         {"support", score.support}};
    }
    j["per_label"] = labels;
    return j.dump(2);
}

} // namespace dgen
