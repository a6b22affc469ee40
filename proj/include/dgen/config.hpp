#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dgen/generator.hpp"

namespace dgen {

// Declarative description of one job: the flat union of template, few-shot
// policy, provider and run settings. Unknown keys are rejected and `version`
// must match kJobConfigVersion, so typos fail fast.
struct JobConfig {
    static constexpr int kJobConfigVersion = 1;

    Workflow workflow = Workflow::GenerateLabelConditioned;

    // Prompt template.
    std::string task_description;
    std::optional<std::vector<std::string>> label_options;
    std::string target_column;
    std::vector<std::string> fewshot_columns;
    std::string inner_separator = ": ";
    std::string example_separator = "\n\n";

    // Few-shot sampling. examples-per-prompt or pool-per-class of 0 turns
    // few-shot off; for uniform draws examples-per-prompt is clamped down to
    // the pool size so sweep grids stay runnable.
    std::optional<std::string> fewshot_dataset;
    SamplingStrategy fewshot_strategy = SamplingStrategy::Uniform;
    std::size_t fewshot_examples_per_prompt = 1;
    std::string fewshot_sampling_column;
    std::optional<std::size_t> fewshot_pool_per_class;
    std::uint64_t seed = 0;

    // Optional few-shot label verbalization applied after loading.
    std::optional<std::string> verbalizer_column;
    std::map<std::string, std::string> verbalizer_mapping;

    // Run settings.
    std::optional<std::string> input_dataset; // required for annotate
    std::optional<std::string> output_path;
    std::optional<std::string> report_path;
    std::size_t max_prompt_calls = 0;
    std::optional<std::size_t> target_count;
    std::optional<std::string> cache_dir;
    std::optional<std::string> label_column;
    ExecMode execution = ExecMode::Parallel;
    bool drop_unparsed = false;

    ProviderConfig provider;

    static JobConfig from_json_text(const std::string& text);
    static JobConfig load(const std::filesystem::path& path);
};

// Applies one `key=value` override onto raw config JSON before parsing.
// Values are parsed as JSON when possible, else taken as strings.
void apply_override(std::string& config_json_text, const std::string& assignment);

// Loads datasets, applies the verbalizer and clamping rules and produces a
// runnable job.
GenerationJob build_job(const JobConfig& config);

} // namespace dgen
