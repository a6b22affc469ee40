#include "dgen/prompt.hpp"

#include <algorithm>

#include "dgen/errors.hpp"

namespace dgen {

namespace {

std::string fill_placeholder(const std::string& text, const std::string& value) {
    auto pos = text.find("{}");
    std::string out = text;
    out.replace(pos, 2, value);
    return out;
}

// A null cell counts as absent: few-shot demonstrations must show a value.
const Value& require_value(const Record& record, const std::string& column,
                           const std::string& which) {
    auto it = record.find(column);
    if (it == record.end() || is_null(it->second)) throw MissingColumn(column, which);
    return it->second;
}

std::string fewshot_block(const PromptTemplate& tmpl, const Record& record,
                          const std::string& which) {
    std::string block;
    for (const auto& column : tmpl.fewshot_example_columns) {
        block += column + tmpl.inner_separator +
                 value_to_string(require_value(record, column, which)) + "\n";
    }
    block += tmpl.generate_data_for_column + tmpl.inner_separator +
             value_to_string(require_value(record, tmpl.generate_data_for_column, which));
    return block;
}

std::string completion_block(const PromptTemplate& tmpl, const Record* input_row,
                             const std::string& which) {
    std::string block;
    if (input_row != nullptr) {
        for (const auto& column : tmpl.fewshot_example_columns) {
            block += column + tmpl.inner_separator +
                     value_to_string(require_value(*input_row, column, which)) + "\n";
        }
    }
    block += tmpl.generate_data_for_column + tmpl.inner_separator;
    return block;
}

RenderedPrompt assemble(const PromptTemplate& tmpl, const std::string& task_text,
                        std::span<const Record> fewshot, const Record* input_row,
                        std::optional<std::string> conditioned_label,
                        std::optional<std::size_t> source_row_index) {
    std::string text = task_text;
    for (std::size_t i = 0; i < fewshot.size(); ++i) {
        text += tmpl.example_separator;
        text += fewshot_block(tmpl, fewshot[i], "few-shot record #" + std::to_string(i));
    }
    text += tmpl.example_separator;
    text += completion_block(tmpl, input_row, "input row");
    return RenderedPrompt{std::move(text), std::move(conditioned_label), source_row_index};
}

} // namespace

std::size_t placeholder_count(const std::string& task_description) {
    std::size_t count = 0;
    for (auto pos = task_description.find("{}"); pos != std::string::npos;
         pos = task_description.find("{}", pos + 2))
        ++count;
    return count;
}

void validate_template(const PromptTemplate& tmpl) {
    std::size_t placeholders = placeholder_count(tmpl.task_description);
    if (placeholders > 1)
        throw PlaceholderMismatch("task description contains " + std::to_string(placeholders) +
                                  " placeholders; at most one is supported");
    if (tmpl.label_options.has_value() && placeholders != 1)
        throw PlaceholderMismatch(
            "label_options set but task description has no {} placeholder");
    if (tmpl.generate_data_for_column.empty())
        throw ConfigError("generate_data_for_column must be set");
    if (std::find(tmpl.fewshot_example_columns.begin(), tmpl.fewshot_example_columns.end(),
                  tmpl.generate_data_for_column) != tmpl.fewshot_example_columns.end())
        throw ConfigError("target column '" + tmpl.generate_data_for_column +
                          "' must not appear in fewshot_example_columns");
}

RenderedPrompt render(const PromptTemplate& tmpl, const std::optional<std::string>& label,
                      std::span<const Record> fewshot, const Record* input_row,
                      std::optional<std::size_t> source_row_index) {
    validate_template(tmpl);
    bool has_placeholder = placeholder_count(tmpl.task_description) == 1;
    if (has_placeholder && !label.has_value())
        throw PlaceholderMismatch("task description has a {} placeholder but no label given");
    if (!has_placeholder && label.has_value())
        throw PlaceholderMismatch("label given but task description has no {} placeholder");
    if (label.has_value() && tmpl.label_options.has_value()) {
        const auto& options = *tmpl.label_options;
        if (std::find(options.begin(), options.end(), *label) == options.end())
            throw ConfigError("label '" + *label + "' is not one of the label options");
    }
    std::string task_text =
        has_placeholder ? fill_placeholder(tmpl.task_description, *label) : tmpl.task_description;
    return assemble(tmpl, task_text, fewshot, input_row, label, source_row_index);
}

RenderedPrompt render_annotation(const PromptTemplate& tmpl, std::span<const Record> fewshot,
                                 const Record& input_row, std::size_t source_row_index) {
    validate_template(tmpl);
    if (!tmpl.label_options.has_value() || tmpl.label_options->empty())
        throw PlaceholderMismatch("annotation rendering requires non-empty label_options");
    std::string joined;
    for (std::size_t i = 0; i < tmpl.label_options->size(); ++i) {
        if (i > 0) joined += ", ";
        joined += (*tmpl.label_options)[i];
    }
    std::string task_text = fill_placeholder(tmpl.task_description, joined);
    return assemble(tmpl, task_text, fewshot, &input_row, std::nullopt, source_row_index);
}

} // namespace dgen
