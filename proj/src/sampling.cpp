#include "dgen/sampling.hpp"

#include <algorithm>
#include <numeric>

#include "dgen/errors.hpp"
#include "dgen/rng.hpp"

namespace dgen {

namespace {
constexpr std::uint64_t kPoolStream = 0x706F6F6CULL;  // used for pool truncation
constexpr std::uint64_t kLabelSalt = 0x1ABE1ULL;      // used by pick_uniform_label
} // namespace

const std::vector<Record>* ClassPool::find(const std::string& label) const {
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] == label) return &groups[i];
    return nullptr;
}

ClassPool build_pool(const Dataset& dataset, const FewshotPolicy& policy,
                     const std::optional<std::vector<std::string>>& label_options) {
    if (!dataset.has_column(policy.sampling_column))
        throw MissingColumn(policy.sampling_column, "few-shot dataset");

    ClassPool pool;
    for (std::size_t r = 0; r < dataset.rows.size(); ++r) {
        const Value& v = dataset.rows[r].at(policy.sampling_column);
        if (is_null(v))
            throw MissingColumn(policy.sampling_column, "row #" + std::to_string(r));
        std::string label = value_to_string(v);
        auto it = std::find(pool.labels.begin(), pool.labels.end(), label);
        if (it == pool.labels.end()) {
            pool.labels.push_back(label);
            pool.groups.emplace_back();
            it = std::prev(pool.labels.end());
        }
        pool.groups[static_cast<std::size_t>(it - pool.labels.begin())].push_back(
            dataset.rows[r]);
    }

    if (label_options.has_value()) {
        for (const auto& option : *label_options)
            if (pool.find(option) == nullptr) throw EmptyClass(option);
    }

    if (policy.pool_per_class.has_value()) {
        for (std::size_t i = 0; i < pool.labels.size(); ++i) {
            auto& group = pool.groups[i];
            SplitMix64 rng =
                rng_for_stream(policy.seed ^ fnv1a64(pool.labels[i]), kPoolStream);
            rng.shuffle(group);
            if (group.size() > *policy.pool_per_class)
                group.resize(*policy.pool_per_class);
        }
    }
    return pool;
}

namespace {

// k indices sampled without replacement, in shuffled order.
std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, SplitMix64& rng) {
    std::vector<std::size_t> indices(n);
    std::iota(indices.begin(), indices.end(), std::size_t{0});
    rng.shuffle(indices);
    indices.resize(k);
    return indices;
}

FewshotDraw draw_uniform(const ClassPool& pool, const FewshotPolicy& policy, SplitMix64& rng,
                         const std::optional<std::vector<std::string>>& label_options) {
    const std::vector<std::string>& options =
        label_options.has_value() ? *label_options : pool.labels;
    const std::string& label = options[rng.bounded(options.size())];
    const std::vector<Record>* group = pool.find(label);
    std::size_t available = group ? group->size() : 0;
    if (available < policy.examples_per_prompt)
        throw InsufficientExamples(label, policy.examples_per_prompt, available);

    FewshotDraw result;
    result.drawn_label = label;
    for (std::size_t idx : sample_indices(available, policy.examples_per_prompt, rng))
        result.examples.push_back((*group)[idx]);
    return result;
}

FewshotDraw draw_stratified(const ClassPool& pool, const FewshotPolicy& policy,
                            SplitMix64& rng) {
    std::size_t k = pool.labels.size();
    std::size_t n = policy.examples_per_prompt;

    std::vector<std::size_t> class_order(k);
    std::iota(class_order.begin(), class_order.end(), std::size_t{0});
    rng.shuffle(class_order);

    // Evenness rule: n/k per class, the remainder spread over the first
    // classes in this call's shuffled order.
    std::vector<std::size_t> want(k, 0);
    for (std::size_t i = 0; i < k; ++i)
        want[class_order[i]] = n / k + (i < n % k ? 1 : 0);

    std::vector<std::vector<std::size_t>> picks(k);
    for (std::size_t c : class_order) {
        const auto& group = pool.groups[c];
        if (group.size() < want[c])
            throw InsufficientExamples(pool.labels[c], want[c], group.size());
        picks[c] = sample_indices(group.size(), want[c], rng);
    }

    FewshotDraw result;
    for (std::size_t round = 0; result.examples.size() < n; ++round) {
        for (std::size_t c : class_order) {
            if (round < picks[c].size())
                result.examples.push_back(pool.groups[c][picks[c][round]]);
        }
    }
    return result;
}

} // namespace

FewshotDraw draw(const ClassPool& pool, const FewshotPolicy& policy, std::uint64_t call_index,
                 const std::optional<std::vector<std::string>>& label_options) {
    if (pool.empty()) throw ConfigError("few-shot pool is empty");
    if (policy.examples_per_prompt == 0)
        throw ConfigError("examples_per_prompt must be at least 1");

    SplitMix64 rng = rng_for_call(policy.seed, call_index);
    if (policy.strategy == SamplingStrategy::Uniform)
        return draw_uniform(pool, policy, rng, label_options);
    return draw_stratified(pool, policy, rng);
}

std::string pick_uniform_label(const std::vector<std::string>& options, std::uint64_t seed,
                               std::uint64_t call_index) {
    if (options.empty()) throw ConfigError("label options are empty");
    SplitMix64 rng = rng_for_call(seed ^ kLabelSalt, call_index);
    return options[rng.bounded(options.size())];
}

} // namespace dgen
