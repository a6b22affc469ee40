#include "dgen/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "dgen/errors.hpp"

namespace dgen {

bool is_null(const Value& v) {
    return std::holds_alternative<std::monostate>(v);
}

std::string value_to_string(const Value& v) {
    struct Visitor {
        std::string operator()(std::monostate) const { return ""; }
        std::string operator()(const std::string& s) const { return s; }
        std::string operator()(std::int64_t i) const { return std::to_string(i); }
        std::string operator()(const TextList& l) const {
            std::string out;
            for (std::size_t i = 0; i < l.size(); ++i) {
                if (i > 0) out += ' ';
                out += l[i];
            }
            return out;
        }
    };
    return std::visit(Visitor{}, v);
}

bool Dataset::has_column(const std::string& name) const {
    return std::find(columns.begin(), columns.end(), name) != columns.end();
}

void Dataset::add_row(Record row) {
    for (const auto& [key, value] : row) {
        if (!has_column(key)) {
            columns.push_back(key);
            for (auto& existing : rows) existing.emplace(key, Value{});
        }
    }
    for (const auto& column : columns) {
        row.try_emplace(column, Value{});
    }
    rows.push_back(std::move(row));
}

namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

Value value_from_json(const ordered_json& j, std::size_t line_no) {
    if (j.is_null()) return Value{};
    if (j.is_string()) return j.get<std::string>();
    if (j.is_number_integer()) return j.get<std::int64_t>();
    if (j.is_array()) {
        TextList list;
        list.reserve(j.size());
        for (const auto& item : j) {
            if (!item.is_string())
                throw MalformedLine(line_no, "array values must contain only strings");
            list.push_back(item.get<std::string>());
        }
        return list;
    }
    throw MalformedLine(line_no, "unsupported value type: " + std::string(j.type_name()));
}

ordered_json value_to_json(const Value& v) {
    struct Visitor {
        ordered_json operator()(std::monostate) const { return nullptr; }
        ordered_json operator()(const std::string& s) const { return s; }
        ordered_json operator()(std::int64_t i) const { return i; }
        ordered_json operator()(const TextList& l) const { return l; }
    };
    return std::visit(Visitor{}, v);
}

} // namespace

Dataset load_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure("cannot open " + path.string());

    Dataset dataset;
    dataset.provenance = path.string();
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        ordered_json parsed = ordered_json::parse(line, nullptr, false);
        if (parsed.is_discarded())
            throw MalformedLine(line_no, "not valid JSON");
        if (!parsed.is_object())
            throw MalformedLine(line_no, "expected a JSON object");
        // Column order comes from the JSON text, not from the sorted record.
        Record record;
        for (const auto& [key, value] : parsed.items()) {
            if (key.empty()) throw MalformedLine(line_no, "empty column name");
            if (!dataset.has_column(key)) {
                dataset.columns.push_back(key);
                for (auto& existing : dataset.rows) existing.emplace(key, Value{});
            }
            record[key] = value_from_json(value, line_no);
        }
        dataset.add_row(std::move(record));
    }
    return dataset;
}

void save_jsonl(const Dataset& dataset, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoFailure("cannot open " + path.string() + " for writing");
    for (const auto& row : dataset.rows) {
        ordered_json obj = ordered_json::object();
        for (const auto& column : dataset.columns) {
            auto it = row.find(column);
            obj[column] = it == row.end() ? ordered_json(nullptr) : value_to_json(it->second);
        }
        out << obj.dump() << '\n';
    }
    if (!out) throw IoFailure("write failed: " + path.string());
}

namespace {

// RFC-4180: quote when the field contains comma, quote or a line break;
// embedded quotes are doubled.
std::string csv_escape(const std::string& field) {
    bool needs_quotes = field.find_first_of(",\"\r\n") != std::string::npos;
    if (!needs_quotes) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

std::vector<std::vector<std::string>> parse_csv(std::istream& in) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> fields;
    std::string field;
    bool in_quotes = false;
    bool row_started = false;
    char c;
    while (in.get(c)) {
        if (in_quotes) {
            if (c == '"') {
                if (in.peek() == '"') {
                    in.get(c);
                    field += '"';
                } else {
                    in_quotes = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        switch (c) {
        case '"':
            in_quotes = true;
            row_started = true;
            break;
        case ',':
            fields.push_back(std::move(field));
            field.clear();
            row_started = true;
            break;
        case '\r':
            break;
        case '\n':
            if (row_started || !field.empty() || !fields.empty()) {
                fields.push_back(std::move(field));
                field.clear();
                records.push_back(std::move(fields));
                fields.clear();
                row_started = false;
            }
            break;
        default:
            field += c;
            row_started = true;
            break;
        }
    }
    if (row_started || !field.empty() || !fields.empty()) {
        fields.push_back(std::move(field));
        records.push_back(std::move(fields));
    }
    return records;
}

} // namespace

Dataset load_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure("cannot open " + path.string());
    auto records = parse_csv(in);

    Dataset dataset;
    dataset.provenance = path.string();
    if (records.empty()) return dataset;

    dataset.columns = records.front();
    for (std::size_t r = 1; r < records.size(); ++r) {
        if (records[r].size() != dataset.columns.size())
            throw MalformedLine(r + 1, "expected " + std::to_string(dataset.columns.size()) +
                                           " fields, got " + std::to_string(records[r].size()));
        Record record;
        for (std::size_t i = 0; i < dataset.columns.size(); ++i)
            record[dataset.columns[i]] = records[r][i];
        dataset.rows.push_back(std::move(record));
    }
    return dataset;
}

void save_csv(const Dataset& dataset, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoFailure("cannot open " + path.string() + " for writing");
    for (std::size_t i = 0; i < dataset.columns.size(); ++i) {
        if (i > 0) out << ',';
        out << csv_escape(dataset.columns[i]);
    }
    out << '\n';
    for (std::size_t r = 0; r < dataset.rows.size(); ++r) {
        const auto& row = dataset.rows[r];
        for (std::size_t i = 0; i < dataset.columns.size(); ++i) {
            if (i > 0) out << ',';
            const Value& v = row.at(dataset.columns[i]);
            if (std::holds_alternative<TextList>(v))
                throw ConfigError("column '" + dataset.columns[i] +
                                  "' holds list values at row " + std::to_string(r) +
                                  "; lists are JSONL-only");
            out << csv_escape(value_to_string(v));
        }
        out << '\n';
    }
    if (!out) throw IoFailure("write failed: " + path.string());
}

Dataset verbalize(const Dataset& dataset, const LabelVerbalizer& verbalizer) {
    if (!dataset.has_column(verbalizer.column)) throw UnknownColumn(verbalizer.column);
    {
        std::set<std::string> seen;
        for (const auto& [raw, verbal] : verbalizer.mapping) {
            if (!seen.insert(verbal).second)
                throw ConfigError("verbalizer mapping is not injective: '" + verbal +
                                  "' appears twice");
        }
    }
    Dataset out = dataset;
    for (std::size_t r = 0; r < out.rows.size(); ++r) {
        Value& v = out.rows[r].at(verbalizer.column);
        std::string key = value_to_string(v);
        auto it = verbalizer.mapping.find(key);
        if (is_null(v) || it == verbalizer.mapping.end()) throw UnmappedValue(key, r);
        v = it->second;
    }
    return out;
}

Dataset split_columns(const Dataset& dataset, const std::vector<std::string>& keep) {
    for (const auto& name : keep)
        if (!dataset.has_column(name)) throw UnknownColumn(name);
    Dataset out;
    out.columns = keep;
    out.provenance = dataset.provenance;
    out.rows.reserve(dataset.rows.size());
    for (const auto& row : dataset.rows) {
        Record projected;
        for (const auto& name : keep) projected[name] = row.at(name);
        out.rows.push_back(std::move(projected));
    }
    return out;
}

} // namespace dgen
