#include "rldec/regex.hpp"

#include <algorithm>
#include <set>

namespace rldec {

namespace {

constexpr std::string_view kMetaChars = "()[]{}|*+?-,";

} // namespace

bool valid_symbol(char c) {
    unsigned char u = static_cast<unsigned char>(c);
    if (u < 0x21 || u > 0x7e) return false;  // printable ASCII, no whitespace
    return kMetaChars.find(c) == std::string_view::npos;
}

Alphabet::Alphabet(std::string_view symbols) : symbols_(symbols) {
    if (symbols_.empty()) throw std::invalid_argument("alphabet must be non-empty");
    for (char c : symbols_) {
        if (!valid_symbol(c))
            throw std::invalid_argument(std::string("alphabet symbol not allowed: '") + c + "'");
    }
    std::string sorted = symbols_;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw std::invalid_argument("alphabet contains duplicate symbols");
    rebuild_index();
}

void Alphabet::rebuild_index() {
    index_.fill(-1);
    for (std::size_t i = 0; i < symbols_.size(); ++i)
        index_[byte(symbols_[i])] = static_cast<int>(i);
}

std::size_t Alphabet::index(char c) const {
    int i = index_[byte(c)];
    if (i < 0) throw std::out_of_range(std::string("symbol not in alphabet: '") + c + "'");
    return static_cast<std::size_t>(i);
}

// ---- AST factories ----

namespace {

RegexPtr make(RegexNode node) { return std::make_shared<const RegexNode>(std::move(node)); }

} // namespace

RegexPtr literal(char c) {
    RegexNode n{RegexKind::Literal};
    n.symbol = c;
    return make(std::move(n));
}

RegexPtr char_class(std::string symbols) {
    if (symbols.empty()) throw std::invalid_argument("character class must be non-empty");
    std::sort(symbols.begin(), symbols.end());
    symbols.erase(std::unique(symbols.begin(), symbols.end()), symbols.end());
    RegexNode n{RegexKind::CharClass};
    n.symbols = std::move(symbols);
    return make(std::move(n));
}

RegexPtr concat(std::vector<RegexPtr> parts) {
    if (parts.empty()) throw std::invalid_argument("concat needs at least one part");
    if (parts.size() == 1) return parts.front();
    RegexNode n{RegexKind::Concat};
    n.children = std::move(parts);
    return make(std::move(n));
}

RegexPtr alternation(std::vector<RegexPtr> branches) {
    if (branches.empty()) throw std::invalid_argument("alternation needs at least one branch");
    if (branches.size() == 1) return branches.front();
    RegexNode n{RegexKind::Alternation};
    n.children = std::move(branches);
    return make(std::move(n));
}

RegexPtr star(RegexPtr child) {
    RegexNode n{RegexKind::Star};
    n.child = std::move(child);
    return make(std::move(n));
}

RegexPtr plus(RegexPtr child) {
    RegexNode n{RegexKind::Plus};
    n.child = std::move(child);
    return make(std::move(n));
}

RegexPtr opt(RegexPtr child) {
    RegexNode n{RegexKind::Optional};
    n.child = std::move(child);
    return make(std::move(n));
}

RegexPtr repeat(RegexPtr child, int min, std::optional<int> max) {
    if (min < 0) throw std::invalid_argument("repeat: min must be >= 0");
    if (max && *max < min) throw std::invalid_argument("repeat: max must be >= min");
    RegexNode n{RegexKind::Repeat};
    n.child = std::move(child);
    n.min = min;
    n.max = max;
    return make(std::move(n));
}

RegexPtr epsilon() { return make(RegexNode{RegexKind::Epsilon}); }

// ---- parser ----

namespace {

class Parser {
public:
    Parser(std::string_view text, const Alphabet& alphabet) : text_(text), alphabet_(alphabet) {}

    RegexPtr run() {
        if (text_.empty()) throw ParseError("empty pattern", 0);
        RegexPtr ast = parse_alternation();
        if (pos_ != text_.size()) throw ParseError("unexpected character", pos_);
        return ast;
    }

private:
    std::string_view text_;
    const Alphabet& alphabet_;
    std::size_t pos_ = 0;

    bool done() const { return pos_ >= text_.size(); }
    char peek() const { return text_[pos_]; }
    char take() { return text_[pos_++]; }

    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, pos_); }

    RegexPtr parse_alternation() {
        std::vector<RegexPtr> branches;
        branches.push_back(parse_concat());
        while (!done() && peek() == '|') {
            take();
            branches.push_back(parse_concat());
        }
        return alternation(std::move(branches));
    }

    RegexPtr parse_concat() {
        std::vector<RegexPtr> parts;
        while (!done() && peek() != '|' && peek() != ')') {
            parts.push_back(parse_postfix());
        }
        if (parts.empty()) fail("empty branch");
        return concat(std::move(parts));
    }

    RegexPtr parse_postfix() {
        RegexPtr node = parse_atom();
        while (!done()) {
            char c = peek();
            if (c == '*') { take(); node = star(std::move(node)); }
            else if (c == '+') { take(); node = plus(std::move(node)); }
            else if (c == '?') { take(); node = opt(std::move(node)); }
            else if (c == '{') { node = parse_braces(std::move(node)); }
            else break;
        }
        return node;
    }

    RegexPtr parse_braces(RegexPtr node) {
        take();  // '{'
        int min = parse_count();
        std::optional<int> max = min;
        if (!done() && peek() == ',') {
            take();
            if (!done() && peek() == '}') max.reset();
            else max = parse_count();
        }
        if (done() || peek() != '}') fail("expected '}'");
        take();
        if (max && *max < min) fail("repeat bounds out of order");
        return repeat(std::move(node), min, max);
    }

    int parse_count() {
        if (done() || peek() < '0' || peek() > '9') fail("expected repetition count");
        long value = 0;
        while (!done() && peek() >= '0' && peek() <= '9') {
            value = value * 10 + (take() - '0');
            if (value > 1000) fail("repetition count too large");
        }
        return static_cast<int>(value);
    }

    RegexPtr parse_atom() {
        if (done()) fail("expected atom");
        char c = peek();
        if (c == '(') {
            take();
            if (!done() && peek() == ')') { take(); return epsilon(); }
            RegexPtr inner = parse_alternation();
            if (done() || peek() != ')') fail("expected ')'");
            take();
            return inner;
        }
        if (c == '[') return parse_class();
        if (!valid_symbol(c)) fail(std::string("unexpected character '") + c + "'");
        take();
        check_symbol(c, pos_ - 1);
        return literal(c);
    }

    RegexPtr parse_class() {
        std::size_t open = pos_;
        take();  // '['
        std::string symbols;
        while (!done() && peek() != ']') {
            char lo = take();
            if (!valid_symbol(lo)) fail(std::string("bad class character '") + lo + "'");
            if (!done() && peek() == '-' && pos_ + 1 < text_.size() && text_[pos_ + 1] != ']') {
                take();  // '-'
                char hi = take();
                if (!valid_symbol(hi)) fail(std::string("bad class character '") + hi + "'");
                if (hi < lo) fail("class range out of order");
                for (char s = lo; s <= hi; ++s) {
                    check_symbol(s, open);
                    symbols.push_back(s);
                }
            } else {
                check_symbol(lo, pos_ - 1);
                symbols.push_back(lo);
            }
        }
        if (done()) fail("unterminated character class");
        take();  // ']'
        if (symbols.empty()) throw ParseError("empty character class", open);
        return char_class(std::move(symbols));
    }

    void check_symbol(char c, std::size_t at) const {
        if (!alphabet_.contains(c))
            throw ParseError(std::string("symbol '") + c + "' not in alphabet", at);
    }
};

} // namespace

RegexPtr parse(std::string_view text, const Alphabet& alphabet) {
    return Parser(text, alphabet).run();
}

// ---- renderer ----

namespace {

// binding strength: alternation < concat < postfix operand
enum Level { kAlt = 0, kCat = 1, kAtom = 2 };

void render_class(const std::string& symbols, std::string& out) {
    out.push_back('[');
    std::size_t i = 0;
    while (i < symbols.size()) {
        std::size_t j = i;
        while (j + 1 < symbols.size() && symbols[j + 1] == symbols[j] + 1) ++j;
        if (j - i >= 2) {
            out.push_back(symbols[i]);
            out.push_back('-');
            out.push_back(symbols[j]);
        } else {
            for (std::size_t k = i; k <= j; ++k) out.push_back(symbols[k]);
        }
        i = j + 1;
    }
    out.push_back(']');
}

void render_node(const RegexNode& node, Level context, std::string& out);

void render_child_of_postfix(const RegexPtr& child, std::string& out) {
    bool needs_group = child->kind == RegexKind::Concat || child->kind == RegexKind::Alternation ||
                       child->kind == RegexKind::Star || child->kind == RegexKind::Plus ||
                       child->kind == RegexKind::Optional || child->kind == RegexKind::Repeat;
    if (needs_group) {
        out.push_back('(');
        render_node(*child, kAlt, out);
        out.push_back(')');
    } else {
        render_node(*child, kAtom, out);
    }
}

void render_node(const RegexNode& node, Level context, std::string& out) {
    switch (node.kind) {
    case RegexKind::Literal:
        out.push_back(node.symbol);
        return;
    case RegexKind::CharClass:
        render_class(node.symbols, out);
        return;
    case RegexKind::Epsilon:
        out += "()";
        return;
    case RegexKind::Concat: {
        bool group = context > kCat;
        if (group) out.push_back('(');
        for (const auto& part : node.children) render_node(*part, kCat, out);
        if (group) out.push_back(')');
        return;
    }
    case RegexKind::Alternation: {
        bool group = context > kAlt;
        if (group) out.push_back('(');
        for (std::size_t i = 0; i < node.children.size(); ++i) {
            if (i) out.push_back('|');
            render_node(*node.children[i], kAlt, out);
        }
        if (group) out.push_back(')');
        return;
    }
    case RegexKind::Star:
        render_child_of_postfix(node.child, out);
        out.push_back('*');
        return;
    case RegexKind::Plus:
        render_child_of_postfix(node.child, out);
        out.push_back('+');
        return;
    case RegexKind::Optional:
        render_child_of_postfix(node.child, out);
        out.push_back('?');
        return;
    case RegexKind::Repeat:
        render_child_of_postfix(node.child, out);
        out.push_back('{');
        out += std::to_string(node.min);
        if (!node.max) out += ",";
        else if (*node.max != node.min) { out += ","; out += std::to_string(*node.max); }
        out.push_back('}');
        return;
    }
    throw std::logic_error("render: unknown node kind");
}

void collect_symbols(const RegexNode& node, std::set<char>& out) {
    switch (node.kind) {
    case RegexKind::Literal: out.insert(node.symbol); return;
    case RegexKind::CharClass: out.insert(node.symbols.begin(), node.symbols.end()); return;
    case RegexKind::Concat:
    case RegexKind::Alternation:
        for (const auto& c : node.children) collect_symbols(*c, out);
        return;
    case RegexKind::Star:
    case RegexKind::Plus:
    case RegexKind::Optional:
    case RegexKind::Repeat:
        collect_symbols(*node.child, out);
        return;
    case RegexKind::Epsilon: return;
    }
}

} // namespace

std::string render(const RegexPtr& ast) {
    if (!ast) throw std::invalid_argument("render: null tree");
    std::string out;
    render_node(*ast, kAlt, out);
    return out;
}

Alphabet symbols_of(const RegexPtr& ast) {
    if (!ast) throw std::invalid_argument("symbols_of: null tree");
    std::set<char> symbols;
    collect_symbols(*ast, symbols);
    if (symbols.empty()) throw std::invalid_argument("symbols_of: regex mentions no symbols");
    return Alphabet(std::string(symbols.begin(), symbols.end()));
}

bool same_tree(const RegexPtr& a, const RegexPtr& b) {
    if (a == b) return true;
    if (!a || !b) return false;
    if (a->kind != b->kind || a->symbol != b->symbol || a->symbols != b->symbols ||
        a->min != b->min || a->max != b->max)
        return false;
    if (a->children.size() != b->children.size()) return false;
    for (std::size_t i = 0; i < a->children.size(); ++i)
        if (!same_tree(a->children[i], b->children[i])) return false;
    if (!a->child != !b->child) return false;
    if (a->child && !same_tree(a->child, b->child)) return false;
    return true;
}

} // namespace rldec
