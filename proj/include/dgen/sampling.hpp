#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dgen/dataset.hpp"

namespace dgen {

enum class SamplingStrategy {
    // One class per prompt: pick a label uniformly, then draw all
    // demonstrations from that label's pool.
    Uniform,
    // Class-balanced mixture: spread the draw as evenly as possible across
    // all classes (per-class counts differ by at most one).
    Stratified,
};

struct FewshotPolicy {
    SamplingStrategy strategy = SamplingStrategy::Uniform;
    std::size_t examples_per_prompt = 1;
    std::string sampling_column;
    std::optional<std::size_t> pool_per_class;
    std::uint64_t seed = 0;
};

// Rows grouped by class value, labels in first-seen dataset order.
struct ClassPool {
    std::vector<std::string> labels;
    std::vector<std::vector<Record>> groups; // parallel to labels

    bool empty() const { return labels.empty(); }
    const std::vector<Record>* find(const std::string& label) const;
};

struct FewshotDraw {
    std::vector<Record> examples;
    std::optional<std::string> drawn_label; // set only by Uniform draws
};

// Groups rows by sampling_column. When pool_per_class is set, each class
// keeps the first pool_per_class rows after a seeded shuffle. When
// label_options is given, every option must have at least one row.
ClassPool build_pool(const Dataset& dataset, const FewshotPolicy& policy,
                     const std::optional<std::vector<std::string>>& label_options = std::nullopt);

// Draws the few-shot examples for one prompt call. Randomness is a pure
// function of (policy.seed, call_index). Sampling is without replacement
// within the draw, with replacement across draws.
FewshotDraw draw(const ClassPool& pool, const FewshotPolicy& policy, std::uint64_t call_index,
                 const std::optional<std::vector<std::string>>& label_options = std::nullopt);

// Uniform label pick for prompts that condition on a label without drawing
// demonstrations (zero-shot label-conditioned generation).
std::string pick_uniform_label(const std::vector<std::string>& options, std::uint64_t seed,
                               std::uint64_t call_index);

} // namespace dgen
