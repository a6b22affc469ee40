// Acceptance suite: one pass/fail line per criterion, offline via the mock
// provider and an in-process fake endpoint. Takes the CLI binary as argv[1].
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <sys/wait.h>
#include <vector>

#include <json.hpp>

#include "dgen/config.hpp"
#include "dgen/dataset.hpp"
#include "dgen/errors.hpp"
#include "dgen/eval.hpp"
#include "dgen/generator.hpp"
#include "dgen/rng.hpp"
#include "dgen/sampling.hpp"
#include "dgen/seqlabel.hpp"

#include "support/corpus_gen.hpp"
#include "support/fake_openai_server.hpp"
#include "support/temp_dir.hpp"

using namespace dgen;
using dgen::test::FakeOpenAiServer;
using dgen::test::TempDir;

namespace {

std::string g_binary;
int g_failed = 0;

void report(int criterion, const std::string& name, bool pass, const std::string& detail = "") {
    std::cout << (pass ? "PASS" : "FAIL") << " criterion " << criterion << ": " << name;
    if (!pass && !detail.empty()) std::cout << " (" << detail << ")";
    std::cout << std::endl;
    if (!pass) ++g_failed;
}

int run_cli(const TempDir& dir, const std::string& args) {
    std::string command = g_binary + " " + args + " >" + dir.file("cli.out").string() + " 2>" +
                          dir.file("cli.err").string();
    int status = std::system(command.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string listing_one_config(const TempDir& dir) {
    std::string fewshot;
    for (int i = 0; i < 8; ++i) {
        fewshot += "{\"text\":\"An uplifting ride " + std::to_string(i) + ".\",\"label\":1}\n";
        fewshot += "{\"text\":\"A dreary slog " + std::to_string(i) + ".\",\"label\":0}\n";
    }
    dir.write("imdb_fewshot.jsonl", fewshot);
    std::string config = R"({
        "version": 1,
        "workflow": "generate_label_conditioned",
        "task_description": "Generate a {} movie review.",
        "label_options": ["positive", "negative"],
        "target_column": "text",
        "fewshot_dataset": ")" + dir.file("imdb_fewshot.jsonl").string() + R"(",
        "fewshot_strategy": "uniform",
        "fewshot_examples_per_prompt": 1,
        "fewshot_sampling_column": "label",
        "fewshot_pool_per_class": 6,
        "verbalizer_column": "label",
        "verbalizer_mapping": {"0": "negative", "1": "positive"},
        "seed": 42,
        "max_prompt_calls": 2000,
        "target_count": 1000,
        "provider_type": "mock",
        "mock_rules": [
            {"contains": "positive", "reply": "Loved every minute of it."},
            {"contains": "negative", "reply": "A complete waste of time."}
        ],
        "mock_default_reply": "It was a movie."
    })";
    dir.write("listing1.json", config);
    return dir.file("listing1.json").string();
}

void criterion_1_listing_one() {
    TempDir dir("dgen-acc1");
    std::string config = listing_one_config(dir);
    auto first = dir.file("run1.jsonl");
    auto second = dir.file("run2.jsonl");

    auto started = std::chrono::steady_clock::now();
    int code1 = run_cli(dir, "generate --config " + config + " --out " + first.string());
    auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - started);
    int code2 = run_cli(dir, "generate --config " + config + " --out " + second.string());

    bool pass = code1 == 0 && code2 == 0;
    std::string detail;
    if (pass) {
        Dataset d = load_jsonl(first);
        pass = d.columns == std::vector<std::string>{"text", "label"} && d.num_rows() == 1000;
        if (!pass) detail = "wrong shape";
        if (pass) {
            pass = dgen::test::slurp(first) == dgen::test::slurp(second);
            if (!pass) detail = "runs differ";
        }
        if (pass) {
            pass = elapsed.count() < 5000;
            if (!pass) detail = "took " + std::to_string(elapsed.count()) + " ms";
        }
    } else {
        detail = "cli exit codes " + std::to_string(code1) + "/" + std::to_string(code2);
    }
    report(1, "Listing-1 replication: 1000 rows, byte-identical reruns, < 5 s", pass, detail);
}

GenerationJob conditioned_mock_job() {
    GenerationJob job;
    job.workflow = Workflow::GenerateLabelConditioned;
    job.prompt.task_description = "Generate a {} movie review.";
    job.prompt.label_options = std::vector<std::string>{"positive", "negative"};
    job.prompt.generate_data_for_column = "text";
    job.provider.kind = "mock";
    job.provider.mock_default_reply = "text";
    job.seed = 5;
    job.execution = ExecMode::Serial;
    return job;
}

void criterion_2_stop_conditions() {
    GenerationJob generate_job = conditioned_mock_job();
    generate_job.max_prompt_calls = 10;
    generate_job.target_count = 1000;
    auto [generated, generate_report] = generate(generate_job);
    bool cap_ok = generate_report.prompt_calls == 10 && generate_report.rows_produced == 10 &&
                  generated.num_rows() == 10;

    GenerationJob annotate_job;
    annotate_job.workflow = Workflow::Annotate;
    annotate_job.prompt.task_description = "Annotate the movie review either as: {}.";
    annotate_job.prompt.label_options = std::vector<std::string>{"positive", "negative"};
    annotate_job.prompt.generate_data_for_column = "label";
    annotate_job.prompt.fewshot_example_columns = {"text"};
    annotate_job.max_prompt_calls = 100;
    annotate_job.provider.kind = "mock";
    annotate_job.provider.mock_default_reply = "positive";
    annotate_job.execution = ExecMode::Serial;
    Dataset unlabeled;
    for (int i = 0; i < 5; ++i) unlabeled.add_row({{"text", "r" + std::to_string(i)}});
    annotate_job.unlabeled_dataset = unlabeled;
    auto [labeled, annotate_report] = generate(annotate_job);
    bool exhaust_ok = annotate_report.prompt_calls == 5 && labeled.num_rows() == 5;

    report(2, "stop conditions: call cap and dataset exhaustion", cap_ok && exhaust_ok,
           cap_ok ? "exhaustion path failed" : "call-cap path failed");
}

void criterion_3_sampler_statistics() {
    Dataset d;
    for (int i = 0; i < 12; ++i)
        d.add_row({{"text", "t" + std::to_string(i)}, {"label", i % 2 ? "a" : "b"}});

    FewshotPolicy uniform;
    uniform.strategy = SamplingStrategy::Uniform;
    uniform.examples_per_prompt = 1;
    uniform.sampling_column = "label";
    uniform.seed = 42;
    ClassPool pool = build_pool(d, uniform);

    std::map<std::string, int> counts;
    for (std::uint64_t i = 0; i < 10000; ++i)
        counts[*draw(pool, uniform, i, std::vector<std::string>{"a", "b"}).drawn_label]++;
    bool uniform_ok = counts["a"] >= 4700 && counts["a"] <= 5300 &&
                      counts["a"] + counts["b"] == 10000;

    FewshotPolicy stratified;
    stratified.strategy = SamplingStrategy::Stratified;
    stratified.examples_per_prompt = 4;
    stratified.sampling_column = "label";
    stratified.seed = 42;
    int violations = 0;
    for (std::uint64_t i = 0; i < 1000; ++i) {
        FewshotDraw result = draw(pool, stratified, i);
        std::map<std::string, int> per_class;
        for (const auto& record : result.examples)
            per_class[value_to_string(record.at("label"))]++;
        if (per_class["a"] != 2 || per_class["b"] != 2) ++violations;
    }

    report(3, "sampler statistics: binomial uniform labels, exact stratified balance",
           uniform_ok && violations == 0,
           "a=" + std::to_string(counts["a"]) + " violations=" + std::to_string(violations));
}

void criterion_4_sweep_grid() {
    TempDir dir("dgen-acc4");
    // TREC-style six-class pool, 16 examples per class; 8 rows to annotate.
    static const std::vector<std::string> classes = {"ABBR", "DESC", "ENTY",
                                                     "HUM",  "LOC",  "NUM"};
    std::string fewshot;
    for (const auto& cls : classes)
        for (int i = 0; i < 16; ++i)
            fewshot += "{\"text\":\"example " + cls + " " + std::to_string(i) +
                       "\",\"coarse_label\":\"" + cls + "\"}\n";
    dir.write("trec_fewshot.jsonl", fewshot);
    std::string unlabeled;
    for (int i = 0; i < 8; ++i)
        unlabeled += "{\"text\":\"question number " + std::to_string(i) + "\"}\n";
    dir.write("trec_unlabeled.jsonl", unlabeled);

    std::string config = R"({
        "version": 1,
        "workflow": "annotate",
        "task_description": "Classify the question as one of: {}",
        "label_options": ["ABBR", "DESC", "ENTY", "HUM", "LOC", "NUM"],
        "target_column": "coarse_label",
        "fewshot_columns": ["text"],
        "fewshot_dataset": ")" + dir.file("trec_fewshot.jsonl").string() + R"(",
        "fewshot_strategy": "uniform",
        "fewshot_sampling_column": "coarse_label",
        "input_dataset": ")" + dir.file("trec_unlabeled.jsonl").string() + R"(",
        "seed": 42,
        "max_prompt_calls": 50,
        "provider_type": "mock",
        "mock_default_reply": "DESC"
    })";
    dir.write("sweep.json", config);

    std::vector<int> pools = {0, 2, 4, 8, 16};
    std::vector<int> per_prompt = {0, 1, 2, 3, 4};
    int produced = 0;
    bool accounting_ok = true;
    for (int pool : pools) {
        for (int k : per_prompt) {
            std::string cell = "cell_" + std::to_string(pool) + "_" + std::to_string(k);
            auto out = dir.file(cell + ".jsonl");
            auto rep = dir.file(cell + ".report.json");
            int code = run_cli(dir, "annotate --config " + dir.file("sweep.json").string() +
                                        " --fewshot-pool-per-class " + std::to_string(pool) +
                                        " --fewshot-examples-per-prompt " + std::to_string(k) +
                                        " --out " + out.string() + " --report " + rep.string());
            if (code != 0) {
                accounting_ok = false;
                continue;
            }
            if (std::filesystem::exists(out)) ++produced;
            auto parsed = nlohmann::json::parse(dgen::test::slurp(rep), nullptr, false);
            if (parsed.is_discarded() || parsed["prompt_calls"].get<int>() != 8 ||
                load_jsonl(out).num_rows() != 8)
                accounting_ok = false;
        }
    }
    report(4, "sweep mechanics: 5x5 grid from one config, per-cell call accounting",
           produced == 25 && accounting_ok,
           std::to_string(produced) + "/25 files, accounting " +
               (accounting_ok ? "ok" : "bad"));
}

void criterion_5_bio_round_trip() {
    SplitMix64 rng(20240915);
    std::size_t failures = 0;
    for (int i = 0; i < 10000; ++i) {
        TaggedSentence s = dgen::test::random_bio_sentence(rng, 20, 4);
        if (spans_to_tags(s.tokens, tags_to_spans(s)) != s) ++failures;
    }
    report(5, "BIO round-trip holds on 10,000 random sentences", failures == 0,
           std::to_string(failures) + " failures");
}

// Independent of the two-pointer implementation in eval: set intersection by
// exhaustive pairing.
void criterion_6_span_f1_oracle() {
    SplitMix64 rng(88);
    bool all_match = true;
    for (int corpus = 0; corpus < 200; ++corpus) {
        std::vector<TaggedSentence> pred, gold;
        std::size_t n = 1 + rng.bounded(10);
        for (std::size_t i = 0; i < n; ++i) {
            TaggedSentence g;
            do {
                g = dgen::test::random_bio_sentence(rng, 10, 3);
            } while (tags_to_spans(g).size() > 4);
            TaggedSentence p = g;
            if (rng.bounded(2) == 0) {
                do {
                    p = dgen::test::random_bio_sentence(rng, 10, 3);
                } while (tags_to_spans(p).size() > 4);
            }
            gold.push_back(g);
            pred.push_back(p);
        }

        std::size_t tp = 0, pred_total = 0, gold_total = 0, filtered = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (pred[i].tokens.size() != gold[i].tokens.size()) {
                ++filtered;
                continue;
            }
            auto ps = tags_to_spans(pred[i]);
            auto gs = tags_to_spans(gold[i]);
            pred_total += ps.size();
            gold_total += gs.size();
            for (const auto& a : ps)
                for (const auto& b : gs)
                    if (a.start_token == b.start_token && a.end_token == b.end_token &&
                        a.label == b.label)
                        ++tp;
        }
        double precision = pred_total ? double(tp) / pred_total : 0.0;
        double recall = gold_total ? double(tp) / gold_total : 0.0;
        double expected =
            precision + recall == 0 ? 0.0 : 2 * precision * recall / (precision + recall);

        AgreementReport r = span_agreement(pred, gold);
        if (std::abs(r.f1 - expected) >= 1e-9 || r.n_filtered != filtered) all_match = false;
    }

    TaggedSentence gold{{"a", "b", "c", "d"}, {"B-PER", "O", "B-LOC", "O"}};
    TaggedSentence pred{{"a", "b", "c", "d"}, {"B-PER", "O", "O", "B-LOC"}};
    AgreementReport hand = span_agreement({pred}, {gold});
    bool hand_ok = hand.f1 == 0.5;

    report(6, "span micro-F1 equals the brute-force oracle; TP=1/FP=1/FN=1 gives 0.5",
           all_match && hand_ok, all_match ? "hand case failed" : "oracle mismatch");
}

void criterion_7_mention_alignment() {
    auto one = align_mentions({"John", "lives", "in", "Berlin"}, {{"Berlin", "LOC"}});
    bool ex1 = one.sentence.tags == std::vector<std::string>{"O", "O", "O", "B-LOC"} &&
               one.unaligned.empty();
    auto two = align_mentions({"John", "lives", "here"}, {{"Paris", "LOC"}});
    bool ex2 = two.sentence.tags == std::vector<std::string>{"O", "O", "O"} &&
               two.unaligned.size() == 1 && two.unaligned[0].surface == "Paris";
    auto three = align_mentions({"John", "lives", "in", "Berlin"}, {{"in Berlin", "LOC"}});
    bool ex3 = three.sentence.tags == std::vector<std::string>{"O", "O", "B-LOC", "I-LOC"};

    // Realigning a sentence's own gold surfaces reconstructs the tags (F1 1.0)
    // whenever every surface occurs exactly once.
    SplitMix64 rng(1337);
    bool property_ok = true;
    int tested = 0;
    while (tested < 200) {
        TaggedSentence s = dgen::test::random_bio_sentence(rng, 14, 4);
        auto spans = tags_to_spans(s);
        if (spans.empty()) continue;
        bool unique = true;
        for (const auto& span : spans) {
            std::size_t occurrences = 0;
            std::size_t width = span.end_token - span.start_token;
            for (std::size_t i = 0; i + width <= s.tokens.size(); ++i) {
                bool match = true;
                for (std::size_t j = 0; j < width; ++j)
                    if (s.tokens[i + j] != s.tokens[span.start_token + j]) match = false;
                if (match) ++occurrences;
            }
            if (occurrences != 1) unique = false;
        }
        if (!unique) continue;
        ++tested;
        std::vector<Mention> mentions;
        for (const auto& span : spans) mentions.push_back({span.surface, span.label});
        auto result = align_mentions(s.tokens, mentions);
        AgreementReport r = span_agreement({result.sentence}, {s});
        if (r.f1 != 1.0 || !result.unaligned.empty()) property_ok = false;
    }

    report(7, "mention alignment examples and self-reconstruction F1 = 1.0",
           ex1 && ex2 && ex3 && property_ok, "");
}

void criterion_8_length_filter() {
    SplitMix64 rng(4242);
    std::vector<TaggedSentence> pred, gold;
    for (int i = 0; i < 100; ++i) {
        TaggedSentence g = dgen::test::random_bio_sentence(rng, 12, 3);
        TaggedSentence p = g;
        if (i < 38) {
            // Retokenized differently: one token more or fewer.
            p.tokens.push_back("extra");
            p.tags.push_back("O");
        }
        gold.push_back(g);
        pred.push_back(p);
    }
    AgreementReport r = span_agreement(pred, gold);
    report(8, "38 of 100 length-mismatched pairs are filtered and counted",
           r.n_filtered == 38 && r.n_scored == 62,
           "n_filtered=" + std::to_string(r.n_filtered));
}

void criterion_9_network_robustness() {
    bool retry_ok = false, limiter_ok = false, auth_ok = false;
    setenv("DGEN_ACCEPTANCE_KEY", "acceptance-secret", 1);

    {
        FakeOpenAiServer server;
        server.set_status_sequence({429, 429, 200});
        ProviderConfig config;
        config.kind = "openai";
        config.base_url = server.base_url();
        config.model = "m";
        config.api_key_env = "DGEN_ACCEPTANCE_KEY";
        config.retry_backoff_base = std::chrono::milliseconds(10);
        auto client = make_client(config);
        CompletionRequest request;
        request.prompt_text = "x";
        CompletionResponse response = client->complete(request);
        retry_ok = response.attempt_count == 3 && server.request_count() == 3;
    }

    {
        std::cout << "  (rate-limit window check: 30 requests at 10 rpm, ~2 min)" << std::endl;
        FakeOpenAiServer server;
        ProviderConfig config;
        config.kind = "openai";
        config.base_url = server.base_url();
        config.model = "m";
        config.api_key_env = "DGEN_ACCEPTANCE_KEY";
        config.requests_per_minute = 10; // true 60 s window
        config.max_concurrent = 16;
        auto client = make_client(config);

        std::vector<std::thread> workers;
        for (int i = 0; i < 30; ++i)
            workers.emplace_back([&client] {
                CompletionRequest request;
                request.prompt_text = "x";
                client->complete(request);
            });
        for (auto& worker : workers) worker.join();

        auto times = server.request_times();
        std::sort(times.begin(), times.end());
        limiter_ok = times.size() == 30;
        for (std::size_t i = 0; i + 10 < times.size(); ++i) {
            auto window =
                std::chrono::duration_cast<std::chrono::milliseconds>(times[i + 10] - times[i]);
            if (window.count() < 60000) limiter_ok = false;
        }
    }

    {
        FakeOpenAiServer server;
        server.set_status_sequence({401});
        ProviderConfig config;
        config.kind = "openai";
        config.base_url = server.base_url();
        config.model = "m";
        config.api_key_env = "DGEN_ACCEPTANCE_KEY";
        auto client = make_client(config);
        try {
            CompletionRequest request;
            request.prompt_text = "x";
            client->complete(request);
        } catch (const AuthFailure&) {
            auth_ok = server.request_count() == 1;
        }
    }

    report(9, "network robustness: retry on 429, 60 s sliding window, fast 401",
           retry_ok && limiter_ok && auth_ok,
           std::string(retry_ok ? "" : "retry ") + (limiter_ok ? "" : "limiter ") +
               (auth_ok ? "" : "auth"));
}

void criterion_10_resume() {
    TempDir dir("dgen-acc10");
    std::string unlabeled;
    for (int i = 0; i < 100; ++i)
        unlabeled += "{\"text\":\"review number " + std::to_string(i) + "\"}\n";
    dir.write("unlabeled.jsonl", unlabeled);
    std::string config = R"({
        "version": 1,
        "workflow": "annotate",
        "task_description": "Annotate the movie review either as: {}.",
        "label_options": ["positive", "negative"],
        "target_column": "label",
        "fewshot_columns": ["text"],
        "input_dataset": ")" + dir.file("unlabeled.jsonl").string() + R"(",
        "max_prompt_calls": 1000,
        "provider_type": "mock",
        "mock_rules": [{"contains": "number 3", "reply": "negative"}],
        "mock_default_reply": "positive",
        "execution": "serial",
        "cache_dir": ")" + dir.file("cache").string() + R"("
    })";
    dir.write("resume.json", config);
    std::string config_path = dir.file("resume.json").string();

    // Interrupt mid-run: the provider dies after 50 successful calls.
    int first = run_cli(dir, "annotate --config " + config_path +
                                 " --set mock_fail_after_calls=50 --out " +
                                 dir.file("dead.jsonl").string());
    bool interrupted = first == 3 && !std::filesystem::exists(dir.file("dead.jsonl"));

    int second = run_cli(dir, "annotate --config " + config_path + " --report " +
                                  dir.file("resumed.report.json").string() + " --out " +
                                  dir.file("resumed.jsonl").string());
    auto resumed_report =
        nlohmann::json::parse(dgen::test::slurp(dir.file("resumed.report.json")), nullptr, false);
    bool resumed = second == 0 && !resumed_report.is_discarded() &&
                   resumed_report["cache_hits"].get<int>() >= 50;

    // Uninterrupted reference run without any cache.
    std::string no_cache = dgen::test::slurp(dir.file("resume.json"));
    apply_override(no_cache, "cache_dir=" + dir.file("cache-fresh").string());
    dir.write("fresh.json", no_cache);
    int third = run_cli(dir, "annotate --config " + dir.file("fresh.json").string() +
                                 " --out " + dir.file("fresh.jsonl").string());
    bool identical = third == 0 && dgen::test::slurp(dir.file("resumed.jsonl")) ==
                                       dgen::test::slurp(dir.file("fresh.jsonl"));

    report(10, "resume idempotence: interrupted run + rerun equals one uninterrupted run",
           interrupted && resumed && identical,
           std::string(interrupted ? "" : "interrupt ") + (resumed ? "" : "cache-hits ") +
               (identical ? "" : "bytes"));
}

void criterion_11_parse_label() {
    std::vector<std::string> options = {"positive", "negative"};
    bool examples_ok = true;
    try {
        examples_ok = parse_label(" Positive.", options) == "positive" &&
                      parse_label("The review is clearly negative in tone", options) ==
                          "negative" &&
                      parse_label("positive, though a bit long", options) == "positive";
        parse_label("neutral", options);
        examples_ok = false; // must throw
    } catch (const UnmatchedLabel&) {
    } catch (...) {
        examples_ok = false;
    }

    SplitMix64 rng(2718);
    bool property_ok = true;
    static const std::vector<std::string> leads = {"", " ", "  ", "\t"};
    static const std::vector<std::string> tails = {"", ".", "!", "?", ",", ";", ":", " .", ".  "};
    std::vector<std::string> trec = {"location", "person", "number", "description"};
    for (int trial = 0; trial < 2000; ++trial) {
        const auto& pool = rng.bounded(2) == 0 ? options : trec;
        std::string option = pool[rng.bounded(pool.size())];
        std::string decorated = option;
        for (auto& c : decorated)
            if (rng.bounded(2) == 0) c = static_cast<char>(std::toupper(c));
        decorated = leads[rng.bounded(leads.size())] + decorated + tails[rng.bounded(tails.size())];
        if (parse_label(decorated, pool) != option) property_ok = false;
    }

    report(11, "parse_label cascade examples and decoration property", examples_ok && property_ok,
           examples_ok ? "property failed" : "examples failed");
}

} // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: acceptance <path-to-dgen-binary>\n";
        return 2;
    }
    g_binary = argv[1];

    criterion_1_listing_one();
    criterion_2_stop_conditions();
    criterion_3_sampler_statistics();
    criterion_4_sweep_grid();
    criterion_5_bio_round_trip();
    criterion_6_span_f1_oracle();
    criterion_7_mention_alignment();
    criterion_8_length_filter();
    criterion_9_network_robustness();
    criterion_10_resume();
    criterion_11_parse_label();

    if (g_failed > 0) {
        std::cout << g_failed << " criteria failed" << std::endl;
        return 1;
    }
    std::cout << "all acceptance criteria passed" << std::endl;
    return 0;
}
