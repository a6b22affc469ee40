#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dgen/dataset.hpp"
#include "dgen/llm_client.hpp"
#include "dgen/parallel.hpp"
#include "dgen/prompt.hpp"
#include "dgen/sampling.hpp"

namespace dgen {

enum class Workflow { GenerateUnlabeled, GenerateLabelConditioned, Annotate };

struct GenerationJob {
    Workflow workflow = Workflow::GenerateLabelConditioned;
    PromptTemplate prompt;
    std::optional<FewshotPolicy> policy;       // requires fewshot_dataset
    std::optional<Dataset> fewshot_dataset;
    std::optional<Dataset> unlabeled_dataset;  // required iff workflow == Annotate
    std::size_t max_prompt_calls = 0;
    std::optional<std::size_t> target_count;   // desired output rows (generate modes)
    ProviderConfig provider;
    std::optional<std::filesystem::path> cache_dir;
    bool dry_run = false;
    std::uint64_t seed = 0;
    // Output column for the drawn label in label-conditioned generation;
    // defaults to the policy's sampling column, else "label".
    std::optional<std::string> label_column;
    ExecMode execution = ExecMode::Parallel;
};

struct GenerationReport {
    std::size_t rows_produced = 0;
    std::size_t prompt_calls = 0;
    std::size_t parse_failures = 0;
    std::size_t truncated = 0;
    std::size_t cache_hits = 0;
    std::chrono::milliseconds wall_time{0};

    std::string to_json_string() const;
};

// Stable content hash of (prompt text, model, max_tokens, temperature).
// Identical inputs give identical keys across runs and machines.
std::string cache_key(const CompletionRequest& request, const ProviderConfig& provider);

// Directory of {key -> response JSON} files under {dir}/{first-2-hex}/{key}.json.
// Writes go to a temp file first and are renamed into place, so an
// interrupted job never leaves a partial entry behind.
class ResponseCache {
public:
    explicit ResponseCache(std::filesystem::path dir);

    std::optional<CompletionResponse> lookup(const std::string& key) const;
    void store(const std::string& key, const CompletionResponse& response) const;
    std::filesystem::path path_for(const std::string& key) const;

private:
    std::filesystem::path dir_;
};

struct LabelParse {
    enum class Outcome { Matched, Unmatched, Ambiguous };
    Outcome outcome = Outcome::Unmatched;
    std::optional<std::string> label;
    std::vector<std::string> candidates; // stage candidates when Ambiguous
};

// Match cascade over normalized text (trim, lowercase, strip terminal
// punctuation): exact equality, then prefix, then unique substring. The
// first stage with a unique winner decides.
LabelParse try_parse_label(const std::string& raw,
                           const std::vector<std::string>& label_options);

// Throwing variant: UnmatchedLabel / AmbiguousLabel.
std::string parse_label(const std::string& raw, const std::vector<std::string>& label_options);

// False when some option contains another after normalization; the parse
// cascade prefers non-overlapping option sets.
bool options_mutually_non_substring(const std::vector<std::string>& options);

// Runs the job: plans every prompt call (sampling and rendering are pure
// functions of the call index), executes them serially or under OpenMP, and
// assembles rows in call order so concurrency never changes the output.
std::pair<Dataset, GenerationReport> generate(const GenerationJob& job);
std::pair<Dataset, GenerationReport> generate(const GenerationJob& job,
                                              const std::shared_ptr<CompletionClient>& client);

// First n fully rendered prompts, zero LLM calls.
std::vector<RenderedPrompt> dry_run(const GenerationJob& job, std::size_t n);

} // namespace dgen
