#pragma once

#include "rldec/automata.hpp"
#include "rldec/regex.hpp"
#include "rldec/rng.hpp"

namespace rldec {

// Knobs for random regex sampling. Operator weights are relative and may be
// zero; depth caps recursion (leaves only at the cap). Generated trees are
// rejection-sampled until the compiled MDFA's live state count lands in
// [min_states, max_states].
struct GeneratorConfig {
    Alphabet alphabet;
    int max_depth = 4;
    int min_states = 3;   // live (non-sink) MDFA states
    int max_states = 14;
    int max_attempts = 2000;

    double w_literal = 1.0;
    double w_class = 1.5;
    double w_concat = 3.0;
    double w_alternation = 1.0;
    double w_star = 0.8;
    double w_plus = 0.8;
    double w_optional = 0.8;
    double w_repeat = 1.0;

    int max_concat_parts = 4;
    int max_alt_branches = 3;
    int max_class_size = 4;
    int max_repeat = 3;
};

struct GeneratorError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Draws a random AST whose minimized automaton has a live state count inside
// the configured range. Deterministic given (config, rng state). Throws
// GeneratorError when max_attempts rejections pass without a hit.
RegexPtr random_regex(const GeneratorConfig& config, Rng& rng);

} // namespace rldec
