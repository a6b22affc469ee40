#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dgen/config.hpp"
#include "dgen/dataset.hpp"
#include "dgen/errors.hpp"
#include "dgen/eval.hpp"
#include "dgen/generator.hpp"
#include "dgen/seqlabel.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitProvider = 3;

struct RunOptions {
    std::string config_path;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> max_prompt_calls;
    std::optional<std::size_t> fewshot_examples_per_prompt;
    std::optional<std::size_t> fewshot_pool_per_class;
    std::optional<std::string> out;
    std::optional<std::string> report;
    std::size_t dry_run_count = 0;
    bool drop_unparsed = false;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw dgen::ConfigError("cannot open config file " + path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

dgen::JobConfig load_config(const RunOptions& options) {
    std::string text = read_file(options.config_path);
    for (const auto& assignment : options.overrides) dgen::apply_override(text, assignment);
    auto set = [&text](const std::string& key, const std::string& value) {
        dgen::apply_override(text, key + "=" + value);
    };
    if (options.seed) set("seed", std::to_string(*options.seed));
    if (options.max_prompt_calls) set("max_prompt_calls", std::to_string(*options.max_prompt_calls));
    if (options.fewshot_examples_per_prompt)
        set("fewshot_examples_per_prompt", std::to_string(*options.fewshot_examples_per_prompt));
    if (options.fewshot_pool_per_class)
        set("fewshot_pool_per_class", std::to_string(*options.fewshot_pool_per_class));
    if (options.out) set("output_path", *options.out);
    if (options.report) set("report_path", *options.report);

    dgen::JobConfig config = dgen::JobConfig::from_json_text(text);
    config.drop_unparsed = config.drop_unparsed || options.drop_unparsed;
    return config;
}

int run_dry(const dgen::GenerationJob& job, std::size_t count) {
    auto prompts = dgen::dry_run(job, count);
    for (std::size_t i = 0; i < prompts.size(); ++i) {
        std::cout << "--- prompt " << i << " ---\n" << prompts[i].text << "\n";
    }
    return kExitOk;
}

int run_job(const RunOptions& options, std::optional<dgen::Workflow> forced_workflow) {
    dgen::JobConfig config = load_config(options);
    if (forced_workflow && config.workflow != *forced_workflow)
        throw dgen::ConfigError("config workflow does not match this subcommand");

    dgen::GenerationJob job = dgen::build_job(config);
    if (options.dry_run_count > 0) return run_dry(job, options.dry_run_count);

    if (!config.output_path)
        throw dgen::ConfigError("no output path (set 'output_path' or pass --out)");

    auto [dataset, report] = dgen::generate(job);

    if (config.drop_unparsed && config.workflow == dgen::Workflow::Annotate) {
        dgen::Dataset kept;
        kept.columns = dataset.columns;
        for (auto& row : dataset.rows)
            if (!dgen::is_null(row.at(config.target_column))) kept.rows.push_back(std::move(row));
        dataset = std::move(kept);
    }

    dgen::save_jsonl(dataset, *config.output_path);
    std::string report_json = report.to_json_string();
    if (config.report_path) {
        std::ofstream out(*config.report_path, std::ios::binary | std::ios::trunc);
        out << report_json << '\n';
    }
    std::cerr << report_json << '\n';
    if (report.prompt_calls == job.max_prompt_calls &&
        (config.workflow == dgen::Workflow::Annotate
             ? job.unlabeled_dataset->num_rows() > report.prompt_calls
             : job.target_count.value_or(job.max_prompt_calls) > report.prompt_calls))
        std::cerr << "note: stopped early after reaching max_prompt_calls\n";
    return kExitOk;
}

int run_convert(const std::string& direction, const std::string& in_path,
                const std::string& out_path) {
    if (direction == "tags2spans") {
        auto sentences = dgen::load_conll(in_path);
        std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
        if (!out) throw dgen::IoFailure("cannot open " + out_path + " for writing");
        for (const auto& sentence : sentences) {
            nlohmann::ordered_json row;
            row["tokens"] = sentence.tokens;
            nlohmann::ordered_json spans = nlohmann::ordered_json::array();
            for (const auto& span : dgen::tags_to_spans(sentence)) {
                spans.push_back({{"start", span.start_token},
                                 {"end", span.end_token},
                                 {"label", span.label},
                                 {"surface", span.surface}});
            }
            row["spans"] = spans;
            out << row.dump() << '\n';
        }
        return kExitOk;
    }
    if (direction == "spans2tags") {
        std::ifstream in(in_path, std::ios::binary);
        if (!in) throw dgen::IoFailure("cannot open " + in_path);
        std::vector<dgen::TaggedSentence> sentences;
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            nlohmann::json row = nlohmann::json::parse(line, nullptr, false);
            if (row.is_discarded() || !row.is_object() || !row.contains("tokens") ||
                !row.contains("spans"))
                throw dgen::MalformedLine(line_no, "expected {tokens, spans} object");
            std::vector<std::string> tokens = row["tokens"].get<std::vector<std::string>>();
            std::vector<dgen::EntitySpan> spans;
            for (const auto& s : row["spans"]) {
                dgen::EntitySpan span;
                span.start_token = s.at("start").get<std::size_t>();
                span.end_token = s.at("end").get<std::size_t>();
                span.label = s.at("label").get<std::string>();
                span.surface = s.value("surface", "");
                spans.push_back(std::move(span));
            }
            sentences.push_back(dgen::spans_to_tags(tokens, spans));
        }
        dgen::save_conll(sentences, out_path);
        return kExitOk;
    }
    throw dgen::ConfigError("direction must be tags2spans or spans2tags");
}

int run_eval(const std::string& task, const std::string& pred_path,
             const std::string& gold_path, const std::string& label_column,
             const std::optional<std::string>& json_path) {
    dgen::AgreementReport report;
    if (task == "classification") {
        dgen::Dataset pred = dgen::load_jsonl(pred_path);
        dgen::Dataset gold = dgen::load_jsonl(gold_path);
        report = dgen::classification_agreement(pred, gold, label_column);
    } else if (task == "spans") {
        auto pred = dgen::load_conll(pred_path);
        auto gold = dgen::load_conll(gold_path);
        report = dgen::span_agreement(pred, gold);
    } else {
        throw dgen::ConfigError("task must be classification or spans");
    }
    std::cout << report.to_table();
    if (json_path) {
        std::ofstream out(*json_path, std::ios::binary | std::ios::trunc);
        out << report.to_json_string() << '\n';
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"dataset generation and annotation with teacher LLMs"};
    app.require_subcommand(1);

    RunOptions options;
    auto add_run_options = [&options](CLI::App* cmd) {
        cmd->add_option("--config", options.config_path, "job config JSON")->required();
        cmd->add_option("--set", options.overrides, "config override key=value (repeatable)");
        cmd->add_option("--seed", options.seed, "override seed");
        cmd->add_option("--max-prompt-calls", options.max_prompt_calls, "override max_prompt_calls");
        cmd->add_option("--fewshot-examples-per-prompt", options.fewshot_examples_per_prompt,
                        "override fewshot_examples_per_prompt");
        cmd->add_option("--fewshot-pool-per-class", options.fewshot_pool_per_class,
                        "override fewshot_pool_per_class");
        cmd->add_option("--out", options.out, "override output_path");
        cmd->add_option("--report", options.report, "override report_path");
    };

    CLI::App* generate = app.add_subcommand("generate", "run a generation job");
    add_run_options(generate);
    generate->add_option("--dry-run", options.dry_run_count,
                         "render N prompts and exit without any LLM calls");

    CLI::App* annotate = app.add_subcommand("annotate", "annotate an unlabeled dataset");
    add_run_options(annotate);
    annotate->add_flag("--drop-unparsed", options.drop_unparsed,
                       "drop rows whose reply did not parse to a label");

    CLI::App* dry = app.add_subcommand("dry-run", "render prompts without any LLM calls");
    add_run_options(dry);
    dry->add_option("-n,--count", options.dry_run_count, "number of prompts")->default_val(1);

    std::string direction, in_path, out_path;
    CLI::App* convert = app.add_subcommand("convert", "convert between CoNLL tags and span JSONL");
    convert->add_option("--direction", direction, "tags2spans or spans2tags")->required();
    convert->add_option("--in", in_path, "input file")->required();
    convert->add_option("--out", out_path, "output file")->required();

    std::string task, pred_path, gold_path, label_column = "label";
    std::optional<std::string> eval_json;
    CLI::App* eval = app.add_subcommand("eval", "score agreement against gold labels");
    eval->add_option("--task", task, "classification or spans")->required();
    eval->add_option("--pred", pred_path, "predicted file")->required();
    eval->add_option("--gold", gold_path, "gold file")->required();
    eval->add_option("--label-column", label_column, "label column (classification)");
    eval->add_option("--json", eval_json, "also write the report as JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (generate->parsed()) return run_job(options, std::nullopt);
        if (annotate->parsed()) return run_job(options, dgen::Workflow::Annotate);
        if (dry->parsed()) {
            if (options.dry_run_count == 0) options.dry_run_count = 1;
            dgen::JobConfig config = load_config(options);
            return run_dry(dgen::build_job(config), options.dry_run_count);
        }
        if (convert->parsed()) return run_convert(direction, in_path, out_path);
        if (eval->parsed()) return run_eval(task, pred_path, gold_path, label_column, eval_json);
    } catch (const dgen::AuthFailure& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitProvider;
    } catch (const dgen::RetriesExhausted& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitProvider;
    } catch (const dgen::MalformedResponse& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitProvider;
    } catch (const dgen::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    }
    return kExitConfig;
}
