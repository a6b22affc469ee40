#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace dgen {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoFailure : public Error {
public:
    using Error::Error;
};

class MalformedLine : public Error {
public:
    MalformedLine(std::size_t line, const std::string& detail)
        : Error("malformed line " + std::to_string(line) + ": " + detail), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

class UnknownColumn : public Error {
public:
    explicit UnknownColumn(const std::string& name)
        : Error("unknown column: " + name), name_(name) {}
    const std::string& name() const { return name_; }

private:
    std::string name_;
};

class MissingColumn : public Error {
public:
    MissingColumn(const std::string& column, const std::string& which_record)
        : Error("missing column '" + column + "' in " + which_record), column_(column) {}
    const std::string& column() const { return column_; }

private:
    std::string column_;
};

class UnmappedValue : public Error {
public:
    UnmappedValue(const std::string& value, std::size_t row_index)
        : Error("no verbalizer mapping for value '" + value + "' at row " +
                std::to_string(row_index)),
          value_(value), row_index_(row_index) {}
    const std::string& value() const { return value_; }
    std::size_t row_index() const { return row_index_; }

private:
    std::string value_;
    std::size_t row_index_;
};

class PlaceholderMismatch : public Error {
public:
    using Error::Error;
};

class EmptyClass : public Error {
public:
    explicit EmptyClass(const std::string& label)
        : Error("declared label option '" + label + "' has zero rows"), label_(label) {}
    const std::string& label() const { return label_; }

private:
    std::string label_;
};

class InsufficientExamples : public Error {
public:
    InsufficientExamples(const std::string& label, std::size_t needed, std::size_t available)
        : Error("class '" + label + "' needs " + std::to_string(needed) +
                " examples but only " + std::to_string(available) + " available"),
          label_(label), needed_(needed), available_(available) {}
    const std::string& label() const { return label_; }
    std::size_t needed() const { return needed_; }
    std::size_t available() const { return available_; }

private:
    std::string label_;
    std::size_t needed_;
    std::size_t available_;
};

class AuthFailure : public Error {
public:
    using Error::Error;
};

class RetriesExhausted : public Error {
public:
    RetriesExhausted(int last_status, const std::string& detail)
        : Error("request failed after retries (last status " + std::to_string(last_status) +
                "): " + detail),
          last_status_(last_status) {}
    int last_status() const { return last_status_; }

private:
    int last_status_;
};

class MalformedResponse : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class RowCountMismatch : public Error {
public:
    RowCountMismatch(std::size_t lhs, std::size_t rhs)
        : Error("row counts differ: " + std::to_string(lhs) + " vs " + std::to_string(rhs)) {}
};

class ListLengthMismatch : public Error {
public:
    ListLengthMismatch(std::size_t lhs, std::size_t rhs)
        : Error("sentence lists differ in length: " + std::to_string(lhs) + " vs " +
                std::to_string(rhs)) {}
};

class InvalidTag : public Error {
public:
    InvalidTag(std::size_t position, const std::string& tag)
        : Error("invalid tag '" + tag + "' at position " + std::to_string(position)),
          position_(position), tag_(tag) {}
    std::size_t position() const { return position_; }
    const std::string& tag() const { return tag_; }

private:
    std::size_t position_;
    std::string tag_;
};

class OverlappingSpans : public Error {
public:
    using Error::Error;
};

class UnmatchedLabel : public Error {
public:
    explicit UnmatchedLabel(const std::string& raw)
        : Error("no label option matches reply: '" + raw + "'"), raw_(raw) {}
    const std::string& raw() const { return raw_; }

private:
    std::string raw_;
};

class AmbiguousLabel : public Error {
public:
    AmbiguousLabel(const std::string& raw, std::vector<std::string> candidates)
        : Error("several label options match reply: '" + raw + "'"),
          raw_(raw), candidates_(std::move(candidates)) {}
    const std::string& raw() const { return raw_; }
    const std::vector<std::string>& candidates() const { return candidates_; }

private:
    std::string raw_;
    std::vector<std::string> candidates_;
};

} // namespace dgen
