#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rldec/automata.hpp"
#include "rldec/rng.hpp"

namespace rldec {

struct LabeledExample {
    std::string text;
    bool accept = false;

    bool operator==(const LabeledExample&) const = default;
};

// Balanced accept/reject sample for one language. Labels are oracle-checked
// against the MDFA at build time; strings are non-empty, unique per label,
// and at most max_len long.
struct LabeledDataset {
    std::vector<LabeledExample> examples;
    Alphabet alphabet;
    int max_len = 0;

    std::size_t size() const { return examples.size(); }
};

struct DatasetError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Random accepted string with 1 <= |w| <= max_len: a guided walk that only
// takes transitions keeping acceptance reachable within the remaining length
// budget, stopping at accepting states with probability 0.25.
std::string sample_positive(const Dfa& dfa, int max_len, Rng& rng);

// Negative via successive random transpositions of an accepted string; empty
// when max_tries swaps never leave the language.
std::optional<std::string> make_negative_swap(std::string_view w, const Dfa& dfa, Rng& rng,
                                              int max_tries);

// Negative via full random shuffles of an accepted string.
std::optional<std::string> make_negative_shuffle(std::string_view w, const Dfa& dfa, Rng& rng,
                                                 int max_tries);

// n examples, exactly n/2 accepted and n/2 rejected, deduplicated, every
// label oracle-verified. Negatives alternate swap/shuffle with a uniform
// random fallback. Throws DatasetError when the language (or complement) is
// too sparse to balance under max_len.
LabeledDataset build_dataset(const Dfa& dfa, int n, int max_len, Rng& rng);

// Line-oriented text format: a '#' header recording regex, alphabet, seed and
// max_len, then "<label>\t<string>" rows.
struct DatasetFile {
    std::string regex;
    std::uint64_t seed = 0;
    LabeledDataset data;
};

void save_dataset(const std::filesystem::path& path, const DatasetFile& file);
DatasetFile load_dataset(const std::filesystem::path& path);

} // namespace rldec
