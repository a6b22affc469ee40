#pragma once

#include <map>
#include <string>
#include <vector>

#include "dgen/dataset.hpp"
#include "dgen/parallel.hpp"
#include "dgen/seqlabel.hpp"

namespace dgen {

struct PerLabelScore {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t support = 0;
};

enum class AgreementTask { Classification, SpanLabeling };

struct AgreementReport {
    AgreementTask task = AgreementTask::Classification;
    std::size_t n_scored = 0;
    std::size_t n_filtered = 0;
    std::size_t null_predictions = 0;
    double accuracy = 0.0; // classification accuracy / token accuracy for spans
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::map<std::string, PerLabelScore> per_label;

    std::string to_table() const;
    std::string to_json_string() const;
};

// f1 = 0 when precision + recall == 0, else the harmonic mean.
double f1_score(double precision, double recall);

// Index-aligned label agreement. Null predictions count as mismatches and
// are reported in null_predictions.
AgreementReport classification_agreement(const Dataset& pred, const Dataset& gold,
                                         const std::string& label_column);

// Span-level micro P/R/F1 over exact (start, end, label) matches, plus token
// accuracy, after dropping length-mismatched pairs. The serial path is the
// reference; Parallel runs the per-pair scoring as an OpenMP reduction.
AgreementReport span_agreement(const std::vector<TaggedSentence>& pred,
                               const std::vector<TaggedSentence>& gold,
                               ExecMode mode = ExecMode::Serial, int num_threads = 0);

} // namespace dgen
