#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace dgen {

// A cell value. std::monostate is the explicit null marker; lists cover both
// free text lists and tag sequences.
using TextList = std::vector<std::string>;
using Value = std::variant<std::monostate, std::string, std::int64_t, TextList>;

bool is_null(const Value& v);

// Canonical string form used for prompts, class grouping and verbalizer
// lookup: strings pass through, integers print in decimal, lists join with
// single spaces, null is the empty string.
std::string value_to_string(const Value& v);

using Record = std::map<std::string, Value>;

// In-memory tabular dataset. Rows always carry exactly the keys listed in
// `columns`; absent cells hold an explicit null. All operations below return
// new datasets, so a constructed Dataset can be shared across threads.
struct Dataset {
    std::vector<std::string> columns;
    std::vector<Record> rows;
    std::string provenance; // free text, not persisted and not compared

    std::size_t num_rows() const { return rows.size(); }
    bool has_column(const std::string& name) const;

    // Appends a row, registering unseen keys as new columns (first-seen
    // order) and null-filling gaps in both directions.
    void add_row(Record row);

    friend bool operator==(const Dataset& a, const Dataset& b) {
        return a.columns == b.columns && a.rows == b.rows;
    }
};

struct LabelVerbalizer {
    std::string column;
    // Raw value (stringified) -> natural-language label. Must be injective.
    std::map<std::string, std::string> mapping;
};

Dataset load_jsonl(const std::filesystem::path& path);
void save_jsonl(const Dataset& dataset, const std::filesystem::path& path);

// CSV is limited to flat text/integer/null cells; list values are JSONL-only.
// Loading yields text columns (no type inference).
Dataset load_csv(const std::filesystem::path& path);
void save_csv(const Dataset& dataset, const std::filesystem::path& path);

Dataset verbalize(const Dataset& dataset, const LabelVerbalizer& verbalizer);
Dataset split_columns(const Dataset& dataset, const std::vector<std::string>& keep);

} // namespace dgen
