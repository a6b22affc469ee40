#include "dgen/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <json.hpp>

#include "dgen/errors.hpp"

namespace dgen {

namespace {

using json = nlohmann::json;

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        "version",
        "workflow",
        "task_description",
        "label_options",
        "target_column",
        "fewshot_columns",
        "inner_separator",
        "example_separator",
        "fewshot_dataset",
        "fewshot_strategy",
        "fewshot_examples_per_prompt",
        "fewshot_sampling_column",
        "fewshot_pool_per_class",
        "seed",
        "verbalizer_column",
        "verbalizer_mapping",
        "input_dataset",
        "output_path",
        "report_path",
        "max_prompt_calls",
        "target_count",
        "cache_dir",
        "label_column",
        "execution",
        "drop_unparsed",
        "provider_type",
        "base_url",
        "model",
        "api_key_env",
        "max_tokens",
        "temperature",
        "request_timeout_ms",
        "max_retries",
        "retry_backoff_ms",
        "max_concurrent",
        "requests_per_minute",
        "rate_window_ms",
        "mock_rules",
        "mock_default_reply",
        "mock_latency_ms",
        "mock_fail_after_calls",
    };
    return keys;
}

template <class T>
T get_as(const json& j, const std::string& key, const char* type_name) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config key '" + key + "' must be a " + type_name);
    }
}

std::string get_string(const json& j, const std::string& key) {
    return get_as<std::string>(j, key, "string");
}

std::int64_t get_int(const json& j, const std::string& key) {
    if (!j.at(key).is_number_integer())
        throw ConfigError("config key '" + key + "' must be an integer");
    return j.at(key).get<std::int64_t>();
}

std::size_t get_nonnegative(const json& j, const std::string& key) {
    std::int64_t v = get_int(j, key);
    if (v < 0) throw ConfigError("config key '" + key + "' must be >= 0");
    return static_cast<std::size_t>(v);
}

Workflow workflow_from_string(const std::string& name) {
    if (name == "generate_unlabeled") return Workflow::GenerateUnlabeled;
    if (name == "generate_label_conditioned") return Workflow::GenerateLabelConditioned;
    if (name == "annotate") return Workflow::Annotate;
    throw ConfigError("unknown workflow '" + name +
                      "' (expected generate_unlabeled, generate_label_conditioned or annotate)");
}

} // namespace

JobConfig JobConfig::from_json_text(const std::string& text) {
    json raw = json::parse(text, nullptr, false);
    if (raw.is_discarded()) throw ConfigError("config is not valid JSON");
    if (!raw.is_object()) throw ConfigError("config must be a JSON object");

    for (const auto& [key, value] : raw.items()) {
        if (known_keys().find(key) == known_keys().end())
            throw ConfigError("unknown config key '" + key + "'");
    }
    if (!raw.contains("version")) throw ConfigError("config is missing 'version'");
    if (get_int(raw, "version") != kJobConfigVersion)
        throw ConfigError("unsupported config version " + raw.at("version").dump() +
                          " (expected " + std::to_string(kJobConfigVersion) + ")");

    JobConfig config;
    if (!raw.contains("workflow")) throw ConfigError("config is missing 'workflow'");
    config.workflow = workflow_from_string(get_string(raw, "workflow"));

    if (!raw.contains("task_description"))
        throw ConfigError("config is missing 'task_description'");
    config.task_description = get_string(raw, "task_description");
    if (raw.contains("label_options"))
        config.label_options = get_as<std::vector<std::string>>(raw, "label_options",
                                                                "list of strings");
    if (!raw.contains("target_column")) throw ConfigError("config is missing 'target_column'");
    config.target_column = get_string(raw, "target_column");
    if (raw.contains("fewshot_columns"))
        config.fewshot_columns =
            get_as<std::vector<std::string>>(raw, "fewshot_columns", "list of strings");
    if (raw.contains("inner_separator"))
        config.inner_separator = get_string(raw, "inner_separator");
    if (raw.contains("example_separator"))
        config.example_separator = get_string(raw, "example_separator");

    if (raw.contains("fewshot_dataset")) config.fewshot_dataset = get_string(raw, "fewshot_dataset");
    if (raw.contains("fewshot_strategy")) {
        std::string strategy = get_string(raw, "fewshot_strategy");
        if (strategy == "uniform") config.fewshot_strategy = SamplingStrategy::Uniform;
        else if (strategy == "stratified") config.fewshot_strategy = SamplingStrategy::Stratified;
        else throw ConfigError("fewshot_strategy must be 'uniform' or 'stratified'");
    }
    if (raw.contains("fewshot_examples_per_prompt"))
        config.fewshot_examples_per_prompt = get_nonnegative(raw, "fewshot_examples_per_prompt");
    if (raw.contains("fewshot_sampling_column"))
        config.fewshot_sampling_column = get_string(raw, "fewshot_sampling_column");
    if (raw.contains("fewshot_pool_per_class"))
        config.fewshot_pool_per_class = get_nonnegative(raw, "fewshot_pool_per_class");
    if (raw.contains("seed")) config.seed = static_cast<std::uint64_t>(get_int(raw, "seed"));

    if (raw.contains("verbalizer_column"))
        config.verbalizer_column = get_string(raw, "verbalizer_column");
    if (raw.contains("verbalizer_mapping"))
        config.verbalizer_mapping = get_as<std::map<std::string, std::string>>(
            raw, "verbalizer_mapping", "string-to-string object");

    if (raw.contains("input_dataset")) config.input_dataset = get_string(raw, "input_dataset");
    if (raw.contains("output_path")) config.output_path = get_string(raw, "output_path");
    if (raw.contains("report_path")) config.report_path = get_string(raw, "report_path");
    if (!raw.contains("max_prompt_calls"))
        throw ConfigError("config is missing 'max_prompt_calls'");
    config.max_prompt_calls = get_nonnegative(raw, "max_prompt_calls");
    if (raw.contains("target_count")) config.target_count = get_nonnegative(raw, "target_count");
    if (raw.contains("cache_dir")) config.cache_dir = get_string(raw, "cache_dir");
    if (raw.contains("label_column")) config.label_column = get_string(raw, "label_column");
    if (raw.contains("execution")) {
        std::string execution = get_string(raw, "execution");
        if (execution == "serial") config.execution = ExecMode::Serial;
        else if (execution == "parallel") config.execution = ExecMode::Parallel;
        else throw ConfigError("execution must be 'serial' or 'parallel'");
    }
    if (raw.contains("drop_unparsed"))
        config.drop_unparsed = get_as<bool>(raw, "drop_unparsed", "boolean");

    ProviderConfig& provider = config.provider;
    if (!raw.contains("provider_type")) throw ConfigError("config is missing 'provider_type'");
    provider.kind = get_string(raw, "provider_type");
    if (provider.kind != "mock" && provider.kind != "openai")
        throw ConfigError("provider_type must be 'mock' or 'openai'");
    if (raw.contains("base_url")) provider.base_url = get_string(raw, "base_url");
    if (raw.contains("model")) provider.model = get_string(raw, "model");
    if (raw.contains("api_key_env")) provider.api_key_env = get_string(raw, "api_key_env");
    if (raw.contains("max_tokens"))
        provider.max_tokens = static_cast<int>(get_nonnegative(raw, "max_tokens"));
    if (raw.contains("temperature")) {
        if (!raw.at("temperature").is_number())
            throw ConfigError("config key 'temperature' must be a number");
        provider.temperature = raw.at("temperature").get<double>();
        if (provider.temperature < 0) throw ConfigError("temperature must be >= 0");
    }
    if (raw.contains("request_timeout_ms"))
        provider.request_timeout =
            std::chrono::milliseconds(get_nonnegative(raw, "request_timeout_ms"));
    if (raw.contains("max_retries"))
        provider.max_retries = static_cast<int>(get_nonnegative(raw, "max_retries"));
    if (raw.contains("retry_backoff_ms"))
        provider.retry_backoff_base =
            std::chrono::milliseconds(get_nonnegative(raw, "retry_backoff_ms"));
    if (raw.contains("max_concurrent")) {
        provider.max_concurrent = static_cast<int>(get_nonnegative(raw, "max_concurrent"));
        if (provider.max_concurrent == 0) throw ConfigError("max_concurrent must be >= 1");
    }
    if (raw.contains("requests_per_minute"))
        provider.requests_per_minute = static_cast<int>(get_nonnegative(raw, "requests_per_minute"));
    if (raw.contains("rate_window_ms"))
        provider.rate_window = std::chrono::milliseconds(get_nonnegative(raw, "rate_window_ms"));
    if (raw.contains("mock_rules")) {
        if (!raw.at("mock_rules").is_array())
            throw ConfigError("config key 'mock_rules' must be a list");
        for (const auto& entry : raw.at("mock_rules")) {
            if (!entry.is_object()) throw ConfigError("mock_rules entries must be objects");
            for (const auto& [key, value] : entry.items()) {
                if (key != "contains" && key != "reply")
                    throw ConfigError("unknown mock_rules key '" + key + "'");
            }
            MockRule rule;
            rule.contains = get_string(entry, "contains");
            rule.reply = get_string(entry, "reply");
            provider.mock_rules.push_back(std::move(rule));
        }
    }
    if (raw.contains("mock_default_reply"))
        provider.mock_default_reply = get_string(raw, "mock_default_reply");
    if (raw.contains("mock_latency_ms"))
        provider.mock_latency = std::chrono::milliseconds(get_nonnegative(raw, "mock_latency_ms"));
    if (raw.contains("mock_fail_after_calls"))
        provider.mock_fail_after_calls =
            static_cast<int>(get_nonnegative(raw, "mock_fail_after_calls"));

    if (provider.kind == "openai") {
        if (!raw.contains("base_url")) throw ConfigError("openai provider requires 'base_url'");
        if (!raw.contains("model")) throw ConfigError("openai provider requires 'model'");
    }
    return config;
}

JobConfig JobConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_json_text(text);
}

void apply_override(std::string& config_json_text, const std::string& assignment) {
    auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ConfigError("override must look like key=value: " + assignment);
    std::string key = assignment.substr(0, eq);
    std::string value_text = assignment.substr(eq + 1);
    if (known_keys().find(key) == known_keys().end())
        throw ConfigError("unknown config key '" + key + "'");

    json config = json::parse(config_json_text, nullptr, false);
    if (config.is_discarded()) throw ConfigError("config is not valid JSON");
    json value = json::parse(value_text, nullptr, false);
    if (value.is_discarded()) value = value_text; // plain string
    config[key] = value;
    config_json_text = config.dump();
}

GenerationJob build_job(const JobConfig& config) {
    GenerationJob job;
    job.workflow = config.workflow;
    job.prompt.task_description = config.task_description;
    job.prompt.label_options = config.label_options;
    job.prompt.generate_data_for_column = config.target_column;
    job.prompt.fewshot_example_columns = config.fewshot_columns;
    job.prompt.inner_separator = config.inner_separator;
    job.prompt.example_separator = config.example_separator;
    job.max_prompt_calls = config.max_prompt_calls;
    job.target_count = config.target_count;
    job.provider = config.provider;
    job.seed = config.seed;
    job.label_column = config.label_column;
    job.execution = config.execution;
    if (config.cache_dir) job.cache_dir = std::filesystem::path(*config.cache_dir);

    bool fewshot_enabled = config.fewshot_dataset.has_value() &&
                           config.fewshot_examples_per_prompt > 0 &&
                           (!config.fewshot_pool_per_class.has_value() ||
                            *config.fewshot_pool_per_class > 0);
    if (fewshot_enabled) {
        if (config.fewshot_sampling_column.empty())
            throw ConfigError("fewshot_sampling_column is required with a fewshot_dataset");
        FewshotPolicy policy;
        policy.strategy = config.fewshot_strategy;
        policy.examples_per_prompt = config.fewshot_examples_per_prompt;
        policy.sampling_column = config.fewshot_sampling_column;
        policy.pool_per_class = config.fewshot_pool_per_class;
        policy.seed = config.seed;
        // Sweep-friendliness: a uniform draw can never need more examples
        // than one class's pool holds.
        if (policy.strategy == SamplingStrategy::Uniform && policy.pool_per_class.has_value())
            policy.examples_per_prompt =
                std::min(policy.examples_per_prompt, *policy.pool_per_class);

        Dataset fewshot = load_jsonl(*config.fewshot_dataset);
        if (config.verbalizer_column) {
            LabelVerbalizer verbalizer{*config.verbalizer_column, config.verbalizer_mapping};
            fewshot = verbalize(fewshot, verbalizer);
        }
        job.fewshot_dataset = std::move(fewshot);
        job.policy = policy;
    }

    if (config.workflow == Workflow::Annotate) {
        if (!config.input_dataset)
            throw ConfigError("annotate requires 'input_dataset'");
        job.unlabeled_dataset = load_jsonl(*config.input_dataset);
    }
    return job;
}

} // namespace dgen
