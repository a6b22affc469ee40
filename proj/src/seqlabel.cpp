#include "dgen/seqlabel.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "dgen/errors.hpp"

namespace dgen {

bool is_valid_tag(const std::string& tag) {
    if (tag == "O") return true;
    if (tag.size() < 3 || tag[1] != '-') return false;
    char head = tag[0];
    return head == 'B' || head == 'I' || head == 'E' || head == 'S';
}

namespace {

std::string join_tokens(const std::vector<std::string>& tokens, std::size_t start,
                        std::size_t end) {
    std::string out;
    for (std::size_t i = start; i < end; ++i) {
        if (i > start) out += ' ';
        out += tokens[i];
    }
    return out;
}

std::vector<std::string> whitespace_split(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream stream(text);
    std::string token;
    while (stream >> token) out.push_back(token);
    return out;
}

} // namespace

std::vector<EntitySpan> tags_to_spans(const TaggedSentence& sentence, DecodeMode mode) {
    if (sentence.tokens.size() != sentence.tags.size())
        throw InvalidTag(sentence.tags.size(), "token/tag count mismatch");

    std::vector<EntitySpan> spans;
    std::size_t open_start = 0;
    std::string open_label;
    bool open = false;

    auto close = [&](std::size_t end) {
        if (!open) return;
        spans.push_back({open_start, end, open_label,
                         join_tokens(sentence.tokens, open_start, end)});
        open = false;
    };

    for (std::size_t i = 0; i < sentence.tags.size(); ++i) {
        const std::string& tag = sentence.tags[i];
        if (!is_valid_tag(tag)) throw InvalidTag(i, tag);
        if (tag == "O") {
            close(i);
            continue;
        }
        char head = tag[0];
        std::string label = tag.substr(2);
        switch (head) {
        case 'B':
            close(i);
            open = true;
            open_start = i;
            open_label = label;
            break;
        case 'S':
            close(i);
            spans.push_back({i, i + 1, label, join_tokens(sentence.tokens, i, i + 1)});
            break;
        case 'I':
            if (open && open_label == label) break; // extend
            if (mode == DecodeMode::Strict) throw InvalidTag(i, tag);
            close(i);
            open = true;
            open_start = i;
            open_label = label;
            break;
        case 'E':
            if (open && open_label == label) {
                close(i + 1);
            } else {
                if (mode == DecodeMode::Strict) throw InvalidTag(i, tag);
                close(i);
                spans.push_back({i, i + 1, label, join_tokens(sentence.tokens, i, i + 1)});
            }
            break;
        }
    }
    close(sentence.tags.size());
    return spans;
}

TaggedSentence spans_to_tags(const std::vector<std::string>& tokens,
                             const std::vector<EntitySpan>& spans) {
    std::vector<EntitySpan> sorted = spans;
    std::sort(sorted.begin(), sorted.end(), [](const EntitySpan& a, const EntitySpan& b) {
        return a.start_token < b.start_token;
    });

    TaggedSentence out;
    out.tokens = tokens;
    out.tags.assign(tokens.size(), "O");
    std::size_t previous_end = 0;
    bool first = true;
    for (const auto& span : sorted) {
        if (span.start_token >= span.end_token || span.end_token > tokens.size())
            throw OverlappingSpans("span [" + std::to_string(span.start_token) + ", " +
                                   std::to_string(span.end_token) + ") is not valid for " +
                                   std::to_string(tokens.size()) + " tokens");
        if (!first && span.start_token < previous_end)
            throw OverlappingSpans("span starting at " + std::to_string(span.start_token) +
                                   " overlaps the previous span");
        out.tags[span.start_token] = "B-" + span.label;
        for (std::size_t i = span.start_token + 1; i < span.end_token; ++i)
            out.tags[i] = "I-" + span.label;
        previous_end = span.end_token;
        first = false;
    }
    return out;
}

AlignmentResult align_mentions(const std::vector<std::string>& tokens,
                               const std::vector<Mention>& mentions) {
    AlignmentResult result;
    result.sentence.tokens = tokens;
    result.sentence.tags.assign(tokens.size(), "O");
    std::vector<bool> claimed(tokens.size(), false);

    for (const auto& mention : mentions) {
        std::vector<std::string> needle = whitespace_split(mention.surface);
        bool placed = false;
        if (!needle.empty() && needle.size() <= tokens.size()) {
            for (std::size_t start = 0; start + needle.size() <= tokens.size(); ++start) {
                bool match = true;
                for (std::size_t j = 0; j < needle.size(); ++j) {
                    if (claimed[start + j] || tokens[start + j] != needle[j]) {
                        match = false;
                        break;
                    }
                }
                if (!match) continue;
                result.sentence.tags[start] = "B-" + mention.label;
                claimed[start] = true;
                for (std::size_t j = 1; j < needle.size(); ++j) {
                    result.sentence.tags[start + j] = "I-" + mention.label;
                    claimed[start + j] = true;
                }
                placed = true;
                break;
            }
        }
        if (!placed) result.unaligned.push_back(mention);
    }
    return result;
}

bool filter_length_mismatch(const TaggedSentence& predicted, const TaggedSentence& gold) {
    return predicted.tokens.size() == gold.tokens.size();
}

std::vector<TaggedSentence> load_conll(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure("cannot open " + path.string());

    std::vector<TaggedSentence> sentences;
    TaggedSentence current;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) {
            if (!current.tokens.empty()) {
                sentences.push_back(std::move(current));
                current = {};
            }
            continue;
        }
        auto tab = line.find('\t');
        if (tab == std::string::npos || tab == 0 || tab + 1 >= line.size())
            throw MalformedLine(line_no, "expected token<TAB>tag");
        std::string token = line.substr(0, tab);
        std::string tag = line.substr(tab + 1);
        if (!is_valid_tag(tag)) throw MalformedLine(line_no, "invalid tag '" + tag + "'");
        current.tokens.push_back(std::move(token));
        current.tags.push_back(std::move(tag));
    }
    if (!current.tokens.empty()) sentences.push_back(std::move(current));
    return sentences;
}

void save_conll(const std::vector<TaggedSentence>& sentences,
                const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoFailure("cannot open " + path.string() + " for writing");
    for (std::size_t s = 0; s < sentences.size(); ++s) {
        if (s > 0) out << '\n';
        const auto& sentence = sentences[s];
        for (std::size_t i = 0; i < sentence.tokens.size(); ++i)
            out << sentence.tokens[i] << '\t' << sentence.tags[i] << '\n';
    }
    if (!out) throw IoFailure("write failed: " + path.string());
}

} // namespace dgen
