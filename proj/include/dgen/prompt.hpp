#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dgen/dataset.hpp"

namespace dgen {

// Task description plus the column wiring needed to assemble a prompt:
// which column the model must produce, which columns appear as few-shot
// context, and the fixed label options for label-conditioned work.
struct PromptTemplate {
    std::string task_description; // may contain one {} placeholder
    std::optional<std::vector<std::string>> label_options;
    std::string generate_data_for_column;
    std::vector<std::string> fewshot_example_columns;
    std::string inner_separator = ": ";
    std::string example_separator = "\n\n";
};

struct RenderedPrompt {
    std::string text;
    std::optional<std::string> conditioned_label;
    std::optional<std::size_t> source_row_index;
};

// Number of {} placeholders in the task description (0 or 1 expected).
std::size_t placeholder_count(const std::string& task_description);

// Checks the template invariants; throws PlaceholderMismatch or ConfigError.
void validate_template(const PromptTemplate& tmpl);

// Assembles the prompt: the filled task description, one block per few-shot
// record (context columns then target column), and a final block whose last
// line is the dangling completion cue `target_column + inner_separator`.
// Blocks are joined by example_separator.
RenderedPrompt render(const PromptTemplate& tmpl,
                      const std::optional<std::string>& label,
                      std::span<const Record> fewshot,
                      const Record* input_row,
                      std::optional<std::size_t> source_row_index = std::nullopt);

// Annotation variant: the placeholder is filled with label_options joined by
// ", " and the final block embeds the row being annotated.
RenderedPrompt render_annotation(const PromptTemplate& tmpl,
                                 std::span<const Record> fewshot,
                                 const Record& input_row,
                                 std::size_t source_row_index);

} // namespace dgen
