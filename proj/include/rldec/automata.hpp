#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "rldec/regex.hpp"

namespace rldec {

// Complete deterministic automaton over a fixed alphabet. States are dense
// indices; delta is total (compilation adds a rejecting sink when needed).
struct Dfa {
    Alphabet alphabet;
    int num_states = 0;
    int start = 0;
    std::vector<int> delta;              // num_states * |alphabet|, row per state
    std::vector<std::uint8_t> accepting; // per state
    bool minimal = false;

    int next(int state, int sym) const { return delta[static_cast<std::size_t>(state) * alphabet.size() + sym]; }
    int step(int state, char c) const { return next(state, static_cast<int>(alphabet.index(c))); }
    bool is_accepting(int state) const { return accepting[state] != 0; }

    // states from which an accepting state is reachable ("live"); the paper
    // counts MDFA nodes this way, excluding the completion sink
    int live_state_count() const;
    // the all-rejecting sink, if present (unique in a minimal DFA)
    std::optional<int> dead_state() const;

    // throws std::logic_error if a structural invariant is broken
    void check() const;
};

// Thompson construction -> subset construction -> completion. Accepts exactly
// the AST's language; every AST symbol must be in `alphabet`.
Dfa compile(const RegexPtr& ast, const Alphabet& alphabet);

// Hopcroft minimization plus canonical breadth-first renumbering from the
// start state, so equal languages over equal alphabets yield identical
// structures. Idempotent.
Dfa minimize(const Dfa& dfa);

bool accepts(const Dfa& dfa, std::string_view w);

// state sequence q_0..q_T visited while reading w; length |w|+1
std::vector<int> trace(const Dfa& dfa, std::string_view w);

// language equality via the product automaton: true iff no reachable pair
// disagrees on acceptance. Requires equal alphabets.
bool equivalent(const Dfa& a, const Dfa& b);

// minimum number of steps from each state to an accepting state; -1 if none
std::vector<int> steps_to_accepting(const Dfa& dfa);

// length of the shortest non-empty string leading from the start state to a
// state with the given acceptance flag; -1 if no such string exists
int shortest_nonempty_word(const Dfa& dfa, bool accepting_target);

// Partition of an MDFA's states into superstates. Each merge coarsens the
// partition by one; the induced NFA accepts a superset of the base language.
struct AbstractionNfa {
    std::shared_ptr<const Dfa> base;
    std::vector<std::vector<int>> blocks; // disjoint, sorted, cover all states
    std::vector<int> block_of;            // state -> block index
    int coarseness = 0;

    int num_blocks() const { return static_cast<int>(blocks.size()); }
    bool block_accepting(int b) const;
};

// coarseness-0 abstraction: all singleton blocks
AbstractionNfa identity_abstraction(std::shared_ptr<const Dfa> mdfa);

// Returns a copy with blocks i and j unioned (placed at min(i,j); later block
// indices shift down by one) and coarseness incremented.
AbstractionNfa merge(const AbstractionNfa& nfa, int i, int j);

// index of the block containing MDFA state q
int abstract_state(const AbstractionNfa& nfa, int q);

// block-image transition relation, derived on demand: all blocks reachable
// from block b on symbol index sym
std::vector<int> block_image(const AbstractionNfa& nfa, int b, int sym);

// NFA acceptance under the lifted transition relation
bool nfa_accepts(const AbstractionNfa& nfa, std::string_view w);

} // namespace rldec
