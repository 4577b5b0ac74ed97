#include "rldec/automata.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <numeric>
#include <queue>
#include <stdexcept>

namespace rldec {

void Dfa::check() const {
    if (alphabet.empty()) throw std::logic_error("dfa: empty alphabet");
    if (num_states <= 0) throw std::logic_error("dfa: no states");
    if (start < 0 || start >= num_states) throw std::logic_error("dfa: bad start state");
    if (delta.size() != static_cast<std::size_t>(num_states) * alphabet.size())
        throw std::logic_error("dfa: delta is not total");
    if (accepting.size() != static_cast<std::size_t>(num_states))
        throw std::logic_error("dfa: accepting flags wrong size");
    for (int t : delta)
        if (t < 0 || t >= num_states) throw std::logic_error("dfa: transition target out of range");
}

int Dfa::live_state_count() const {
    std::vector<int> dist = steps_to_accepting(*this);
    return static_cast<int>(std::count_if(dist.begin(), dist.end(), [](int d) { return d >= 0; }));
}

std::optional<int> Dfa::dead_state() const {
    std::vector<int> dist = steps_to_accepting(*this);
    std::optional<int> found;
    for (int s = 0; s < num_states; ++s) {
        if (dist[s] < 0) {
            if (found) return std::nullopt;  // not unique; caller wants the minimized sink
            found = s;
        }
    }
    return found;
}

std::vector<int> steps_to_accepting(const Dfa& dfa) {
    const int n = dfa.num_states;
    const int k = static_cast<int>(dfa.alphabet.size());
    // reverse adjacency
    std::vector<std::vector<int>> rev(n);
    for (int s = 0; s < n; ++s)
        for (int a = 0; a < k; ++a) rev[dfa.next(s, a)].push_back(s);
    std::vector<int> dist(n, -1);
    std::deque<int> queue;
    for (int s = 0; s < n; ++s)
        if (dfa.is_accepting(s)) { dist[s] = 0; queue.push_back(s); }
    while (!queue.empty()) {
        int s = queue.front();
        queue.pop_front();
        for (int p : rev[s])
            if (dist[p] < 0) { dist[p] = dist[s] + 1; queue.push_back(p); }
    }
    return dist;
}

int shortest_nonempty_word(const Dfa& dfa, bool accepting_target) {
    const int k = static_cast<int>(dfa.alphabet.size());
    std::vector<int> dist(dfa.num_states, -1);
    std::deque<int> queue;
    for (int a = 0; a < k; ++a) {
        int t = dfa.next(dfa.start, a);
        if (dist[t] < 0) { dist[t] = 1; queue.push_back(t); }
    }
    int best = -1;
    while (!queue.empty()) {
        int s = queue.front();
        queue.pop_front();
        if (dfa.is_accepting(s) == accepting_target) {
            if (best < 0 || dist[s] < best) best = dist[s];
            continue;  // any extension is longer
        }
        for (int a = 0; a < k; ++a) {
            int t = dfa.next(s, a);
            if (dist[t] < 0) { dist[t] = dist[s] + 1; queue.push_back(t); }
        }
    }
    return best;
}

bool accepts(const Dfa& dfa, std::string_view w) {
    int state = dfa.start;
    for (char c : w) state = dfa.step(state, c);
    return dfa.is_accepting(state);
}

std::vector<int> trace(const Dfa& dfa, std::string_view w) {
    std::vector<int> states;
    states.reserve(w.size() + 1);
    int state = dfa.start;
    states.push_back(state);
    for (char c : w) {
        state = dfa.step(state, c);
        states.push_back(state);
    }
    return states;
}

// ---- compilation ----

namespace {

// Thompson NFA: one accept state per fragment, epsilon edges allowed
struct ThompsonNfa {
    struct State {
        std::vector<std::pair<int, int>> moves;  // (symbol index, target)
        std::vector<int> eps;
    };
    std::vector<State> states;

    int add() {
        states.emplace_back();
        return static_cast<int>(states.size()) - 1;
    }
    void edge(int from, int sym, int to) { states[from].moves.emplace_back(sym, to); }
    void eps(int from, int to) { states[from].eps.push_back(to); }
};

struct Frag {
    int start, accept;
};

class ThompsonBuilder {
public:
    ThompsonBuilder(const Alphabet& alphabet) : alphabet_(alphabet) {}

    Frag build(const RegexNode& node) {
        switch (node.kind) {
        case RegexKind::Literal: {
            Frag f{nfa_.add(), nfa_.add()};
            nfa_.edge(f.start, static_cast<int>(alphabet_.index(node.symbol)), f.accept);
            return f;
        }
        case RegexKind::CharClass: {
            Frag f{nfa_.add(), nfa_.add()};
            for (char c : node.symbols)
                nfa_.edge(f.start, static_cast<int>(alphabet_.index(c)), f.accept);
            return f;
        }
        case RegexKind::Epsilon: {
            Frag f{nfa_.add(), nfa_.add()};
            nfa_.eps(f.start, f.accept);
            return f;
        }
        case RegexKind::Concat: {
            Frag all = build(*node.children.front());
            for (std::size_t i = 1; i < node.children.size(); ++i) {
                Frag next = build(*node.children[i]);
                nfa_.eps(all.accept, next.start);
                all.accept = next.accept;
            }
            return all;
        }
        case RegexKind::Alternation: {
            Frag f{nfa_.add(), nfa_.add()};
            for (const auto& child : node.children) {
                Frag c = build(*child);
                nfa_.eps(f.start, c.start);
                nfa_.eps(c.accept, f.accept);
            }
            return f;
        }
        case RegexKind::Star: {
            Frag c = build(*node.child);
            Frag f{nfa_.add(), nfa_.add()};
            nfa_.eps(f.start, f.accept);
            nfa_.eps(f.start, c.start);
            nfa_.eps(c.accept, c.start);
            nfa_.eps(c.accept, f.accept);
            return f;
        }
        case RegexKind::Plus: {
            Frag c = build(*node.child);
            Frag f{nfa_.add(), nfa_.add()};
            nfa_.eps(f.start, c.start);
            nfa_.eps(c.accept, c.start);
            nfa_.eps(c.accept, f.accept);
            return f;
        }
        case RegexKind::Optional: {
            Frag c = build(*node.child);
            Frag f{nfa_.add(), nfa_.add()};
            nfa_.eps(f.start, c.start);
            nfa_.eps(f.start, f.accept);
            nfa_.eps(c.accept, f.accept);
            return f;
        }
        case RegexKind::Repeat: {
            // unroll: min copies, then (max-min) optionals or a trailing star
            Frag f{nfa_.add(), nfa_.add()};
            int tail = f.start;
            for (int i = 0; i < node.min; ++i) {
                Frag c = build(*node.child);
                nfa_.eps(tail, c.start);
                tail = c.accept;
            }
            if (!node.max) {
                Frag c = build(*node.child);
                nfa_.eps(tail, c.start);
                nfa_.eps(c.accept, c.start);
                nfa_.eps(c.accept, f.accept);
                nfa_.eps(tail, f.accept);
            } else {
                for (int i = node.min; i < *node.max; ++i) {
                    Frag c = build(*node.child);
                    nfa_.eps(tail, c.start);
                    nfa_.eps(tail, f.accept);
                    tail = c.accept;
                }
                nfa_.eps(tail, f.accept);
            }
            return f;
        }
        }
        throw std::logic_error("compile: unknown node kind");
    }

    ThompsonNfa& nfa() { return nfa_; }

private:
    const Alphabet& alphabet_;
    ThompsonNfa nfa_;
};

std::vector<int> eps_closure(const ThompsonNfa& nfa, std::vector<int> states) {
    std::vector<std::uint8_t> in(nfa.states.size(), 0);
    std::vector<int> stack = states;
    for (int s : states) in[s] = 1;
    while (!stack.empty()) {
        int s = stack.back();
        stack.pop_back();
        for (int t : nfa.states[s].eps)
            if (!in[t]) { in[t] = 1; states.push_back(t); stack.push_back(t); }
    }
    std::sort(states.begin(), states.end());
    return states;
}

void check_symbols_in_alphabet(const RegexNode& node, const Alphabet& alphabet) {
    switch (node.kind) {
    case RegexKind::Literal:
        if (!alphabet.contains(node.symbol))
            throw std::invalid_argument(std::string("compile: symbol '") + node.symbol + "' not in alphabet");
        return;
    case RegexKind::CharClass:
        for (char c : node.symbols)
            if (!alphabet.contains(c))
                throw std::invalid_argument(std::string("compile: symbol '") + c + "' not in alphabet");
        return;
    case RegexKind::Concat:
    case RegexKind::Alternation:
        for (const auto& c : node.children) check_symbols_in_alphabet(*c, alphabet);
        return;
    case RegexKind::Star:
    case RegexKind::Plus:
    case RegexKind::Optional:
    case RegexKind::Repeat:
        check_symbols_in_alphabet(*node.child, alphabet);
        return;
    case RegexKind::Epsilon:
        return;
    }
}

} // namespace

Dfa compile(const RegexPtr& ast, const Alphabet& alphabet) {
    if (!ast) throw std::invalid_argument("compile: null tree");
    check_symbols_in_alphabet(*ast, alphabet);

    ThompsonBuilder builder(alphabet);
    Frag frag = builder.build(*ast);
    const ThompsonNfa& nfa = builder.nfa();

    const int k = static_cast<int>(alphabet.size());
    // subset construction; the empty subset doubles as the completion sink
    std::map<std::vector<int>, int> ids;
    std::vector<std::vector<int>> subsets;
    auto intern = [&](std::vector<int> subset) {
        auto [it, fresh] = ids.emplace(std::move(subset), static_cast<int>(subsets.size()));
        if (fresh) subsets.push_back(it->first);
        return it->second;
    };

    Dfa dfa;
    dfa.alphabet = alphabet;
    dfa.start = intern(eps_closure(nfa, {frag.start}));
    std::vector<int> delta;
    for (int s = 0; s < static_cast<int>(subsets.size()); ++s) {
        for (int a = 0; a < k; ++a) {
            std::vector<int> moved;
            for (int q : subsets[s])
                for (auto [sym, t] : nfa.states[q].moves)
                    if (sym == a) moved.push_back(t);
            std::sort(moved.begin(), moved.end());
            moved.erase(std::unique(moved.begin(), moved.end()), moved.end());
            delta.push_back(intern(eps_closure(nfa, std::move(moved))));
        }
    }
    dfa.num_states = static_cast<int>(subsets.size());
    dfa.delta = std::move(delta);
    dfa.accepting.resize(dfa.num_states, 0);
    for (int s = 0; s < dfa.num_states; ++s)
        dfa.accepting[s] =
            std::binary_search(subsets[s].begin(), subsets[s].end(), frag.accept) ? 1 : 0;
    dfa.check();
    return dfa;
}

// ---- minimization ----

namespace {

// drop states unreachable from the start
Dfa restrict_to_reachable(const Dfa& dfa) {
    const int k = static_cast<int>(dfa.alphabet.size());
    std::vector<int> remap(dfa.num_states, -1);
    std::vector<int> order;
    remap[dfa.start] = 0;
    order.push_back(dfa.start);
    for (std::size_t i = 0; i < order.size(); ++i)
        for (int a = 0; a < k; ++a) {
            int t = dfa.next(order[i], a);
            if (remap[t] < 0) {
                remap[t] = static_cast<int>(order.size());
                order.push_back(t);
            }
        }
    Dfa out;
    out.alphabet = dfa.alphabet;
    out.num_states = static_cast<int>(order.size());
    out.start = 0;
    out.delta.resize(static_cast<std::size_t>(out.num_states) * k);
    out.accepting.resize(out.num_states);
    for (std::size_t i = 0; i < order.size(); ++i) {
        out.accepting[i] = dfa.accepting[order[i]];
        for (int a = 0; a < k; ++a) out.delta[i * k + a] = remap[dfa.next(order[i], a)];
    }
    return out;
}

// Hopcroft partition refinement on a complete, reachable DFA.
// Returns block id per state.
std::vector<int> hopcroft_blocks(const Dfa& dfa) {
    const int n = dfa.num_states;
    const int k = static_cast<int>(dfa.alphabet.size());

    // reverse transitions, bucketed by symbol
    std::vector<std::vector<std::vector<int>>> rev(k, std::vector<std::vector<int>>(n));
    for (int s = 0; s < n; ++s)
        for (int a = 0; a < k; ++a) rev[a][dfa.next(s, a)].push_back(s);

    std::vector<int> block_of(n, 0);
    std::vector<std::vector<int>> blocks;
    {
        std::vector<int> acc, rej;
        for (int s = 0; s < n; ++s) (dfa.is_accepting(s) ? acc : rej).push_back(s);
        if (!acc.empty()) blocks.push_back(acc);
        if (!rej.empty()) blocks.push_back(rej);
        for (std::size_t b = 0; b < blocks.size(); ++b)
            for (int s : blocks[b]) block_of[s] = static_cast<int>(b);
    }

    // worklist of (block id, symbol) splitters
    std::deque<std::pair<int, int>> work;
    {
        int smaller = 0;
        if (blocks.size() == 2 && blocks[1].size() < blocks[0].size()) smaller = 1;
        for (int a = 0; a < k; ++a) {
            work.emplace_back(smaller, a);
            if (blocks.size() == 2) work.emplace_back(1 - smaller, a);
        }
    }

    std::vector<int> hits(n, 0);
    while (!work.empty()) {
        auto [splitter, sym] = work.front();
        work.pop_front();

        // states with a `sym`-transition into the splitter block
        std::vector<int> preimage;
        for (int t : blocks[splitter])
            for (int s : rev[sym][t]) preimage.push_back(s);
        if (preimage.empty()) continue;

        // group preimage states by current block
        std::vector<int> touched;
        for (int s : preimage) {
            if (hits[s]++ == 0) {
                int b = block_of[s];
                if (std::find(touched.begin(), touched.end(), b) == touched.end())
                    touched.push_back(b);
            }
        }

        for (int b : touched) {
            std::vector<int> in, out;
            for (int s : blocks[b]) (hits[s] > 0 ? in : out).push_back(s);
            if (!in.empty() && !out.empty()) {
                int fresh = static_cast<int>(blocks.size());
                // keep the larger part in place, split off the smaller
                if (in.size() <= out.size()) {
                    blocks[b] = std::move(out);
                    blocks.push_back(std::move(in));
                } else {
                    blocks[b] = std::move(in);
                    blocks.push_back(std::move(out));
                }
                for (int s : blocks[fresh]) block_of[s] = fresh;
                for (int a = 0; a < k; ++a) work.emplace_back(fresh, a);
            }
        }
        for (int s : preimage) hits[s] = 0;
    }
    return block_of;
}

} // namespace

Dfa minimize(const Dfa& input) {
    input.check();
    Dfa dfa = restrict_to_reachable(input);
    const int k = static_cast<int>(dfa.alphabet.size());

    std::vector<int> block_of = hopcroft_blocks(dfa);
    int block_count = *std::max_element(block_of.begin(), block_of.end()) + 1;

    // quotient automaton
    Dfa quo;
    quo.alphabet = dfa.alphabet;
    quo.num_states = block_count;
    quo.start = block_of[dfa.start];
    quo.delta.assign(static_cast<std::size_t>(block_count) * k, -1);
    quo.accepting.assign(block_count, 0);
    for (int s = 0; s < dfa.num_states; ++s) {
        int b = block_of[s];
        quo.accepting[b] = dfa.accepting[s];
        for (int a = 0; a < k; ++a) quo.delta[static_cast<std::size_t>(b) * k + a] = block_of[dfa.next(s, a)];
    }

    // canonical breadth-first numbering from the start state, exploring
    // symbols in alphabet order
    Dfa out = restrict_to_reachable(quo);
    out.minimal = true;
    out.check();
    return out;
}

bool equivalent(const Dfa& a, const Dfa& b) {
    if (!(a.alphabet == b.alphabet)) throw std::invalid_argument("equivalent: alphabet mismatch");
    const int k = static_cast<int>(a.alphabet.size());
    std::vector<std::uint8_t> seen(static_cast<std::size_t>(a.num_states) * b.num_states, 0);
    std::deque<std::pair<int, int>> queue;
    auto visit = [&](int p, int q) {
        std::size_t idx = static_cast<std::size_t>(p) * b.num_states + q;
        if (!seen[idx]) { seen[idx] = 1; queue.emplace_back(p, q); }
    };
    visit(a.start, b.start);
    while (!queue.empty()) {
        auto [p, q] = queue.front();
        queue.pop_front();
        if (a.is_accepting(p) != b.is_accepting(q)) return false;
        for (int sym = 0; sym < k; ++sym) visit(a.next(p, sym), b.next(q, sym));
    }
    return true;
}

// ---- abstraction NFA ----

bool AbstractionNfa::block_accepting(int b) const {
    for (int q : blocks[b])
        if (base->is_accepting(q)) return true;
    return false;
}

AbstractionNfa identity_abstraction(std::shared_ptr<const Dfa> mdfa) {
    if (!mdfa) throw std::invalid_argument("identity_abstraction: null base");
    AbstractionNfa nfa;
    nfa.base = std::move(mdfa);
    nfa.blocks.resize(nfa.base->num_states);
    nfa.block_of.resize(nfa.base->num_states);
    for (int q = 0; q < nfa.base->num_states; ++q) {
        nfa.blocks[q] = {q};
        nfa.block_of[q] = q;
    }
    nfa.coarseness = 0;
    return nfa;
}

AbstractionNfa merge(const AbstractionNfa& nfa, int i, int j) {
    if (i == j) throw std::invalid_argument("merge: superstate indices must differ");
    if (i < 0 || j < 0 || i >= nfa.num_blocks() || j >= nfa.num_blocks())
        throw std::out_of_range("merge: superstate index out of range");
    if (i > j) std::swap(i, j);

    AbstractionNfa out;
    out.base = nfa.base;
    out.coarseness = nfa.coarseness + 1;
    out.blocks.reserve(nfa.blocks.size() - 1);
    for (int b = 0; b < nfa.num_blocks(); ++b) {
        if (b == j) continue;
        out.blocks.push_back(nfa.blocks[b]);
        if (b == i) {
            auto& merged = out.blocks.back();
            merged.insert(merged.end(), nfa.blocks[j].begin(), nfa.blocks[j].end());
            std::sort(merged.begin(), merged.end());
        }
    }
    out.block_of.resize(nfa.block_of.size());
    for (int b = 0; b < out.num_blocks(); ++b)
        for (int q : out.blocks[b]) out.block_of[q] = b;
    return out;
}

int abstract_state(const AbstractionNfa& nfa, int q) {
    if (q < 0 || q >= static_cast<int>(nfa.block_of.size()))
        throw std::out_of_range("abstract_state: state out of range");
    return nfa.block_of[q];
}

std::vector<int> block_image(const AbstractionNfa& nfa, int b, int sym) {
    std::vector<int> image;
    for (int q : nfa.blocks[b]) {
        int t = nfa.block_of[nfa.base->next(q, sym)];
        if (std::find(image.begin(), image.end(), t) == image.end()) image.push_back(t);
    }
    std::sort(image.begin(), image.end());
    return image;
}

bool nfa_accepts(const AbstractionNfa& nfa, std::string_view w) {
    const Dfa& base = *nfa.base;
    std::vector<std::uint8_t> current(nfa.blocks.size(), 0);
    current[nfa.block_of[base.start]] = 1;
    for (char c : w) {
        int sym = static_cast<int>(base.alphabet.index(c));
        std::vector<std::uint8_t> next(nfa.blocks.size(), 0);
        for (int b = 0; b < nfa.num_blocks(); ++b)
            if (current[b])
                for (int t : block_image(nfa, b, sym)) next[t] = 1;
        current = std::move(next);
    }
    for (int b = 0; b < nfa.num_blocks(); ++b)
        if (current[b] && nfa.block_accepting(b)) return true;
    return false;
}

} // namespace rldec
