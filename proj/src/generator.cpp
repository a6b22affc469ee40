#include "dgen/generator.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <fstream>
#include <iostream>

#include <json.hpp>
#include <openssl/evp.h>

#include "dgen/errors.hpp"
#include "dgen/rng.hpp"

namespace dgen {

namespace {

std::string sha256_hex(const std::string& data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(), nullptr);
    static const char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(length * 2);
    for (unsigned int i = 0; i < length; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xF];
    }
    return out;
}

} // namespace

std::string cache_key(const CompletionRequest& request, const ProviderConfig& provider) {
    nlohmann::json canonical = {
        {"max_tokens", request.max_tokens.value_or(provider.max_tokens)},
        {"model", provider.model},
        {"prompt", request.prompt_text},
        {"temperature", request.temperature.value_or(provider.temperature)},
    };
    return sha256_hex(canonical.dump());
}

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
}

std::filesystem::path ResponseCache::path_for(const std::string& key) const {
    return dir_ / key.substr(0, 2) / (key + ".json");
}

std::optional<CompletionResponse> ResponseCache::lookup(const std::string& key) const {
    std::ifstream in(path_for(key), std::ios::binary);
    if (!in) return std::nullopt;
    nlohmann::json entry = nlohmann::json::parse(in, nullptr, false);
    if (entry.is_discarded() || !entry.contains("text") || !entry["text"].is_string())
        return std::nullopt; // treat damaged entries as misses
    CompletionResponse response;
    response.text = entry["text"].get<std::string>();
    response.finish_reason = finish_reason_from_string(entry.value("finish_reason", "stop"));
    response.attempt_count = 1;
    return response;
}

void ResponseCache::store(const std::string& key, const CompletionResponse& response) const {
    auto target = path_for(key);
    std::filesystem::create_directories(target.parent_path());
    static std::atomic<std::uint64_t> counter{0};
    auto temp = target;
    temp += ".tmp" + std::to_string(counter.fetch_add(1));
    {
        std::ofstream out(temp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoFailure("cannot write cache entry " + temp.string());
        nlohmann::ordered_json entry = {
            {"text", response.text},
            {"finish_reason", to_string(response.finish_reason)},
        };
        out << entry.dump();
        if (!out) throw IoFailure("cache write failed: " + temp.string());
    }
    std::filesystem::rename(temp, target);
}

namespace {

std::string normalize_reply(const std::string& raw) {
    std::size_t begin = 0;
    std::size_t end = raw.size();
    auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
    auto is_terminal_punct = [](unsigned char c) {
        return c == '.' || c == '!' || c == '?' || c == ',' || c == ';' || c == ':';
    };
    while (begin < end && is_space(raw[begin])) ++begin;
    for (;;) {
        std::size_t previous = end;
        while (end > begin && is_space(raw[end - 1])) --end;
        while (end > begin && is_terminal_punct(raw[end - 1])) --end;
        if (end == previous) break;
    }
    std::string out;
    out.reserve(end - begin);
    for (std::size_t i = begin; i < end; ++i)
        out += static_cast<char>(std::tolower(static_cast<unsigned char>(raw[i])));
    return out;
}

} // namespace

LabelParse try_parse_label(const std::string& raw,
                           const std::vector<std::string>& label_options) {
    if (label_options.empty()) throw ConfigError("label options are empty");
    std::string text = normalize_reply(raw);
    std::vector<std::string> normalized;
    normalized.reserve(label_options.size());
    for (const auto& option : label_options) normalized.push_back(normalize_reply(option));

    auto stage = [&](auto&& predicate) {
        std::vector<std::string> candidates;
        for (std::size_t i = 0; i < label_options.size(); ++i)
            if (predicate(normalized[i])) candidates.push_back(label_options[i]);
        return candidates;
    };

    std::vector<std::vector<std::string>> stages = {
        stage([&](const std::string& opt) { return text == opt; }),
        stage([&](const std::string& opt) { return text.rfind(opt, 0) == 0; }),
        stage([&](const std::string& opt) { return text.find(opt) != std::string::npos; }),
    };

    for (auto& candidates : stages) {
        if (candidates.size() == 1)
            return LabelParse{LabelParse::Outcome::Matched, candidates.front(), {}};
        if (candidates.size() > 1)
            return LabelParse{LabelParse::Outcome::Ambiguous, std::nullopt,
                              std::move(candidates)};
    }
    return LabelParse{LabelParse::Outcome::Unmatched, std::nullopt, {}};
}

std::string parse_label(const std::string& raw, const std::vector<std::string>& label_options) {
    LabelParse parsed = try_parse_label(raw, label_options);
    switch (parsed.outcome) {
    case LabelParse::Outcome::Matched: return *parsed.label;
    case LabelParse::Outcome::Ambiguous: throw AmbiguousLabel(raw, parsed.candidates);
    case LabelParse::Outcome::Unmatched: break;
    }
    throw UnmatchedLabel(raw);
}

bool options_mutually_non_substring(const std::vector<std::string>& options) {
    std::vector<std::string> normalized;
    normalized.reserve(options.size());
    for (const auto& option : options) normalized.push_back(normalize_reply(option));
    for (std::size_t i = 0; i < normalized.size(); ++i)
        for (std::size_t j = 0; j < normalized.size(); ++j)
            if (i != j && normalized[i].find(normalized[j]) != std::string::npos) return false;
    return true;
}

namespace {

struct JobPlan {
    std::size_t total_calls = 0;
    std::optional<ClassPool> pool;
    std::string label_column;
};

const std::vector<std::string>& require_options(const GenerationJob& job) {
    if (!job.prompt.label_options.has_value() || job.prompt.label_options->empty())
        throw ConfigError("workflow requires non-empty label_options in the prompt template");
    return *job.prompt.label_options;
}

JobPlan validate_and_plan(const GenerationJob& job) {
    if (job.max_prompt_calls == 0) throw ConfigError("max_prompt_calls must be at least 1");
    validate_template(job.prompt);
    if (job.policy.has_value() != job.fewshot_dataset.has_value())
        throw ConfigError("fewshot policy and fewshot dataset must be given together");
    if (job.target_count.has_value() && *job.target_count == 0)
        throw ConfigError("target_count must be at least 1");

    JobPlan plan;
    switch (job.workflow) {
    case Workflow::GenerateUnlabeled:
        if (placeholder_count(job.prompt.task_description) != 0)
            throw ConfigError("unlabeled generation has no label to fill the {} placeholder");
        plan.total_calls =
            std::min(job.max_prompt_calls, job.target_count.value_or(job.max_prompt_calls));
        break;
    case Workflow::GenerateLabelConditioned: {
        require_options(job);
        plan.total_calls =
            std::min(job.max_prompt_calls, job.target_count.value_or(job.max_prompt_calls));
        plan.label_column = job.label_column.value_or(
            job.policy.has_value() ? job.policy->sampling_column : std::string("label"));
        if (plan.label_column.empty() || plan.label_column == job.prompt.generate_data_for_column)
            throw ConfigError("label column must be set and differ from the target column");
        break;
    }
    case Workflow::Annotate:
        require_options(job);
        if (!job.unlabeled_dataset.has_value())
            throw ConfigError("annotation requires an unlabeled dataset");
        if (job.unlabeled_dataset->has_column(job.prompt.generate_data_for_column))
            throw ConfigError("unlabeled dataset already has column '" +
                              job.prompt.generate_data_for_column + "'");
        plan.total_calls = std::min(job.max_prompt_calls, job.unlabeled_dataset->num_rows());
        break;
    }

    if (job.policy.has_value()) {
        const FewshotPolicy& policy = *job.policy;
        if (policy.examples_per_prompt == 0)
            throw ConfigError("examples_per_prompt must be at least 1");
        if (policy.strategy == SamplingStrategy::Uniform && policy.pool_per_class.has_value() &&
            *policy.pool_per_class < policy.examples_per_prompt)
            throw ConfigError("pool_per_class must be >= examples_per_prompt for uniform draws");
        bool conditioned_uniform = job.workflow == Workflow::GenerateLabelConditioned &&
                                   policy.strategy == SamplingStrategy::Uniform;
        plan.pool = build_pool(*job.fewshot_dataset, policy,
                               conditioned_uniform ? job.prompt.label_options : std::nullopt);
    }
    return plan;
}

struct CallPlan {
    RenderedPrompt prompt;
    std::optional<std::string> drawn_label;
};

CallPlan plan_call(const GenerationJob& job, const JobPlan& plan, std::size_t call_index) {
    std::vector<Record> fewshot;
    std::optional<std::string> drawn_label;

    switch (job.workflow) {
    case Workflow::GenerateUnlabeled:
        if (job.policy)
            fewshot = draw(*plan.pool, *job.policy, call_index).examples;
        return {render(job.prompt, std::nullopt, fewshot, nullptr), std::nullopt};

    case Workflow::GenerateLabelConditioned: {
        const auto& options = *job.prompt.label_options;
        if (job.policy && job.policy->strategy == SamplingStrategy::Uniform) {
            FewshotDraw d = draw(*plan.pool, *job.policy, call_index, job.prompt.label_options);
            fewshot = std::move(d.examples);
            drawn_label = std::move(d.drawn_label);
        } else {
            drawn_label = pick_uniform_label(options, job.seed, call_index);
            if (job.policy)
                fewshot = draw(*plan.pool, *job.policy, call_index).examples;
        }
        return {render(job.prompt, drawn_label, fewshot, nullptr), drawn_label};
    }

    case Workflow::Annotate: {
        if (job.policy)
            fewshot = draw(*plan.pool, *job.policy, call_index).examples;
        const Record& row = job.unlabeled_dataset->rows[call_index];
        return {render_annotation(job.prompt, fewshot, row, call_index), std::nullopt};
    }
    }
    throw ConfigError("unknown workflow");
}

struct CallResult {
    CompletionResponse response;
    std::optional<std::string> drawn_label;
    bool cache_hit = false;
};

} // namespace

std::pair<Dataset, GenerationReport> generate(const GenerationJob& job) {
    return generate(job, make_client(job.provider));
}

std::pair<Dataset, GenerationReport> generate(const GenerationJob& job,
                                              const std::shared_ptr<CompletionClient>& client) {
    auto started = std::chrono::steady_clock::now();
    if (job.dry_run)
        throw ConfigError("dry_run jobs render prompts only; use dry_run()");
    JobPlan plan = validate_and_plan(job);

    if (job.workflow == Workflow::Annotate &&
        !options_mutually_non_substring(*job.prompt.label_options))
        std::cerr << "warning: label options overlap as substrings; "
                     "reply parsing may report ambiguity\n";

    std::optional<ResponseCache> cache;
    if (job.cache_dir) cache.emplace(*job.cache_dir);

    std::vector<CallResult> slots(plan.total_calls);
    indexed_for(plan.total_calls, job.execution, job.provider.max_concurrent,
                [&](std::size_t i) {
                    CallPlan call = plan_call(job, plan, i);
                    CompletionRequest request;
                    request.prompt_text = std::move(call.prompt.text);
                    request.request_id = cache_key(request, job.provider);

                    CallResult result;
                    result.drawn_label = std::move(call.drawn_label);
                    if (cache) {
                        if (auto hit = cache->lookup(request.request_id)) {
                            result.response = std::move(*hit);
                            result.cache_hit = true;
                            slots[i] = std::move(result);
                            return;
                        }
                    }
                    result.response = client->complete(request);
                    if (cache) cache->store(request.request_id, result.response);
                    slots[i] = std::move(result);
                });

    GenerationReport report;
    report.prompt_calls = plan.total_calls;

    Dataset output;
    switch (job.workflow) {
    case Workflow::GenerateUnlabeled:
        output.columns = {job.prompt.generate_data_for_column};
        break;
    case Workflow::GenerateLabelConditioned:
        output.columns = {job.prompt.generate_data_for_column, plan.label_column};
        break;
    case Workflow::Annotate:
        output.columns = job.unlabeled_dataset->columns;
        output.columns.push_back(job.prompt.generate_data_for_column);
        break;
    }

    for (std::size_t i = 0; i < slots.size(); ++i) {
        CallResult& slot = slots[i];
        if (slot.cache_hit) report.cache_hits++;
        if (slot.response.finish_reason == FinishReason::Length) report.truncated++;

        Record row;
        switch (job.workflow) {
        case Workflow::GenerateUnlabeled:
            row[job.prompt.generate_data_for_column] = std::move(slot.response.text);
            report.rows_produced++;
            break;
        case Workflow::GenerateLabelConditioned:
            row[job.prompt.generate_data_for_column] = std::move(slot.response.text);
            row[plan.label_column] = *slot.drawn_label;
            report.rows_produced++;
            break;
        case Workflow::Annotate: {
            row = job.unlabeled_dataset->rows[i];
            LabelParse parsed =
                try_parse_label(slot.response.text, *job.prompt.label_options);
            if (parsed.outcome == LabelParse::Outcome::Matched) {
                row[job.prompt.generate_data_for_column] = std::move(*parsed.label);
                report.rows_produced++;
            } else {
                row[job.prompt.generate_data_for_column] = Value{};
                report.parse_failures++;
            }
            break;
        }
        }
        output.rows.push_back(std::move(row));
    }

    report.wall_time = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - started);
    return {std::move(output), std::move(report)};
}

std::vector<RenderedPrompt> dry_run(const GenerationJob& job, std::size_t n) {
    if (n == 0) throw ConfigError("dry_run needs n >= 1");
    JobPlan plan = validate_and_plan(job);
    std::vector<RenderedPrompt> prompts;
    std::size_t count = std::min(n, plan.total_calls);
    prompts.reserve(count);
    for (std::size_t i = 0; i < count; ++i)
        prompts.push_back(plan_call(job, plan, i).prompt);
    return prompts;
}

std::string GenerationReport::to_json_string() const {
    nlohmann::ordered_json j = {
        {"rows_produced", rows_produced},
        {"prompt_calls", prompt_calls},
        {"parse_failures", parse_failures},
        {"truncated", truncated},
        {"cache_hits", cache_hits},
        {"wall_time_ms", wall_time.count()},
    };
    return j.dump(2);
}

} // namespace dgen
