#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace dgen {

// Token-index span, end exclusive. `surface` is the space-joined token text.
struct EntitySpan {
    std::size_t start_token = 0;
    std::size_t end_token = 0;
    std::string label;
    std::string surface;

    friend bool operator==(const EntitySpan& a, const EntitySpan& b) {
        return a.start_token == b.start_token && a.end_token == b.end_token &&
               a.label == b.label;
    }
};

struct TaggedSentence {
    std::vector<std::string> tokens;
    std::vector<std::string> tags; // `O` or `{B,I,E,S}-<TYPE>`

    friend bool operator==(const TaggedSentence& a, const TaggedSentence& b) {
        return a.tokens == b.tokens && a.tags == b.tags;
    }
};

struct Mention {
    std::string surface;
    std::string label;
};

enum class DecodeMode {
    // Orphan I-/E- tags open a span (LLM annotations are noisy; this matches
    // common evaluation practice).
    Lenient,
    // Orphan continuation tags raise InvalidTag.
    Strict,
};

bool is_valid_tag(const std::string& tag);

// BIO/BIOES decoding into sorted, non-overlapping spans.
std::vector<EntitySpan> tags_to_spans(const TaggedSentence& sentence,
                                      DecodeMode mode = DecodeMode::Lenient);

// Inverse of tags_to_spans under the plain BIO scheme.
TaggedSentence spans_to_tags(const std::vector<std::string>& tokens,
                             const std::vector<EntitySpan>& spans);

struct AlignmentResult {
    TaggedSentence sentence;
    std::vector<Mention> unaligned;
};

// Greedy left-to-right, first-occurrence match of each mention's
// whitespace-tokenized surface against unclaimed token positions. Misses are
// data, not errors: they land in `unaligned`.
AlignmentResult align_mentions(const std::vector<std::string>& tokens,
                               const std::vector<Mention>& mentions);

// Keep the pair only when both sides tokenized to the same length.
bool filter_length_mismatch(const TaggedSentence& predicted, const TaggedSentence& gold);

// CoNLL-style column format: `token<TAB>tag` lines, one blank line between
// sentences.
std::vector<TaggedSentence> load_conll(const std::filesystem::path& path);
void save_conll(const std::vector<TaggedSentence>& sentences,
                const std::filesystem::path& path);

} // namespace dgen
