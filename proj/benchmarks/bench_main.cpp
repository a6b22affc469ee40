// Serial-vs-parallel comparison for the two index-parallel hot paths: the
// prompt-call loop (latency-bound) and corpus span scoring (CPU-bound).
#include <chrono>
#include <cstdio>
#include <vector>

#include "dgen/eval.hpp"
#include "dgen/generator.hpp"
#include "dgen/rng.hpp"

#include "../tests/support/corpus_gen.hpp"

using namespace dgen;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

GenerationJob latency_job(std::size_t calls, int workers, ExecMode mode) {
    GenerationJob job;
    job.workflow = Workflow::GenerateLabelConditioned;
    job.prompt.task_description = "Generate a {} movie review.";
    job.prompt.label_options = std::vector<std::string>{"positive", "negative"};
    job.prompt.generate_data_for_column = "text";
    job.max_prompt_calls = calls;
    job.provider.kind = "mock";
    job.provider.mock_default_reply = "A fine film.";
    job.provider.mock_latency = std::chrono::milliseconds(2);
    job.provider.max_concurrent = workers;
    job.seed = 3;
    job.execution = mode;
    return job;
}

void bench_generation(std::size_t calls, int workers) {
    auto serial_start = Clock::now();
    auto [serial_out, serial_report] = generate(latency_job(calls, workers, ExecMode::Serial));
    double serial_s = seconds_since(serial_start);

    auto parallel_start = Clock::now();
    auto [parallel_out, parallel_report] =
        generate(latency_job(calls, workers, ExecMode::Parallel));
    double parallel_s = seconds_since(parallel_start);

    bool identical = serial_out == parallel_out;
    std::printf("generation  %6zu calls x 2ms  serial %7.3fs  parallel(%d) %7.3fs  "
                "speedup %5.2fx  outputs %s\n",
                calls, serial_s, workers, parallel_s, serial_s / parallel_s,
                identical ? "identical" : "DIFFER");
}

void bench_span_scoring(std::size_t sentences, int workers) {
    SplitMix64 rng(515);
    std::vector<TaggedSentence> gold, pred;
    gold.reserve(sentences);
    pred.reserve(sentences);
    for (std::size_t i = 0; i < sentences; ++i) {
        TaggedSentence g = dgen::test::random_bio_sentence(rng, 20, 4);
        gold.push_back(g);
        pred.push_back(rng.bounded(4) == 0 ? dgen::test::random_bio_sentence(rng, 20, 4) : g);
    }

    auto serial_start = Clock::now();
    AgreementReport serial = span_agreement(pred, gold, ExecMode::Serial);
    double serial_s = seconds_since(serial_start);

    auto parallel_start = Clock::now();
    AgreementReport parallel = span_agreement(pred, gold, ExecMode::Parallel, workers);
    double parallel_s = seconds_since(parallel_start);

    bool identical = serial.f1 == parallel.f1 && serial.accuracy == parallel.accuracy &&
                     serial.n_filtered == parallel.n_filtered;
    std::printf("span-eval   %6zu sentences     serial %7.3fs  parallel(%d) %7.3fs  "
                "speedup %5.2fx  reports %s (F1 %.4f)\n",
                sentences, serial_s, workers, parallel_s, serial_s / parallel_s,
                identical ? "identical" : "DIFFER", serial.f1);
}

} // namespace

int main() {
    bench_generation(1000, 8);
    bench_span_scoring(300000, 8);
    return 0;
}
