#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rldec {

// Ordered set of input symbols. Symbol order is part of the value: it fixes
// the one-hot layout, DFA transition columns and canonical state numbering
// everywhere downstream.
class Alphabet {
public:
    Alphabet() = default;
    explicit Alphabet(std::string_view symbols);

    std::size_t size() const { return symbols_.size(); }
    bool empty() const { return symbols_.empty(); }
    char symbol(std::size_t i) const { return symbols_.at(i); }
    bool contains(char c) const { return index_[byte(c)] >= 0; }
    // throws std::out_of_range for symbols not in the alphabet
    std::size_t index(char c) const;
    const std::string& symbols() const { return symbols_; }

    bool operator==(const Alphabet& other) const { return symbols_ == other.symbols_; }

private:
    static std::size_t byte(char c) { return static_cast<unsigned char>(c); }

    std::string symbols_;
    std::array<int, 256> index_{};  // -1 where absent

    void rebuild_index();
};

enum class RegexKind {
    Literal,
    CharClass,
    Concat,
    Alternation,
    Star,
    Plus,
    Optional,
    Repeat,
    Epsilon,
};

struct RegexNode;
using RegexPtr = std::shared_ptr<const RegexNode>;

// Immutable regex syntax tree. Construct through the factory functions below;
// they enforce the structural invariants (non-empty classes, list arity,
// repeat bounds).
struct RegexNode {
    RegexKind kind;
    char symbol = 0;                  // Literal
    std::string symbols;              // CharClass: ascending, deduplicated
    std::vector<RegexPtr> children;   // Concat / Alternation
    RegexPtr child;                   // Star / Plus / Optional / Repeat
    int min = 0;                      // Repeat
    std::optional<int> max;           // Repeat; nullopt = unbounded
};

RegexPtr literal(char c);
RegexPtr char_class(std::string symbols);
RegexPtr concat(std::vector<RegexPtr> parts);
RegexPtr alternation(std::vector<RegexPtr> branches);
RegexPtr star(RegexPtr child);
RegexPtr plus(RegexPtr child);
RegexPtr opt(RegexPtr child);
RegexPtr repeat(RegexPtr child, int min, std::optional<int> max);
RegexPtr epsilon();

struct ParseError : std::runtime_error {
    ParseError(const std::string& message, std::size_t position)
        : std::runtime_error(message + " (at position " + std::to_string(position) + ")"),
          position(position) {}
    std::size_t position;
};

// Parses the restricted dialect: literals, [x-y] classes, grouping, |, and
// the postfix operators * + ? {m} {m,n} {m,}. "()" is accepted as epsilon.
// Every symbol must belong to `alphabet`.
RegexPtr parse(std::string_view text, const Alphabet& alphabet);

// Canonical printer. parse(render(t)) denotes the same language as t.
std::string render(const RegexPtr& ast);

// Symbols usable as alphabet members (printable, not dialect metacharacters).
bool valid_symbol(char c);

// Ascending list of distinct symbols mentioned in the tree; the default
// per-regex alphabet.
Alphabet symbols_of(const RegexPtr& ast);

// Structural equality of trees (not language equivalence).
bool same_tree(const RegexPtr& a, const RegexPtr& b);

} // namespace rldec
