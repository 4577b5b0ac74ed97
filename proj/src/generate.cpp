#include "rldec/generate.hpp"

#include <array>
#include <string>

namespace rldec {

namespace {

enum Op { kLiteral, kClass, kConcat, kAlternation, kStar, kPlus, kOptional, kRepeat, kOpCount };

RegexPtr random_node(const GeneratorConfig& cfg, Rng& rng, int depth);

RegexPtr random_leaf(const GeneratorConfig& cfg, Rng& rng) {
    double total_leaf = cfg.w_literal + cfg.w_class;
    bool use_class = total_leaf > 0.0
                         ? rng.real01() * total_leaf >= cfg.w_literal
                         : true;
    if (use_class && cfg.alphabet.size() > 1) {
        int span = 2 + rng.below_int(std::max(1, cfg.max_class_size - 1));
        span = std::min<int>(span, static_cast<int>(cfg.alphabet.size()));
        int lo = rng.below_int(static_cast<int>(cfg.alphabet.size()) - span + 1);
        std::string symbols;
        for (int i = 0; i < span; ++i) symbols.push_back(cfg.alphabet.symbol(lo + i));
        return char_class(std::move(symbols));
    }
    return literal(cfg.alphabet.symbol(rng.below(cfg.alphabet.size())));
}

RegexPtr random_node(const GeneratorConfig& cfg, Rng& rng, int depth) {
    if (depth >= cfg.max_depth) return random_leaf(cfg, rng);

    std::array<double, kOpCount> weights{cfg.w_literal, cfg.w_class,   cfg.w_concat,
                                         cfg.w_alternation, cfg.w_star, cfg.w_plus,
                                         cfg.w_optional, cfg.w_repeat};
    switch (static_cast<Op>(rng.weighted(weights))) {
    case kLiteral:
    case kClass:
        return random_leaf(cfg, rng);
    case kConcat: {
        int parts = 2 + rng.below_int(std::max(1, cfg.max_concat_parts - 1));
        std::vector<RegexPtr> children;
        for (int i = 0; i < parts; ++i) children.push_back(random_node(cfg, rng, depth + 1));
        return concat(std::move(children));
    }
    case kAlternation: {
        int branches = 2 + rng.below_int(std::max(1, cfg.max_alt_branches - 1));
        std::vector<RegexPtr> children;
        for (int i = 0; i < branches; ++i) children.push_back(random_node(cfg, rng, depth + 1));
        return alternation(std::move(children));
    }
    case kStar:
        return star(random_node(cfg, rng, depth + 1));
    case kPlus:
        return plus(random_node(cfg, rng, depth + 1));
    case kOptional:
        return opt(random_node(cfg, rng, depth + 1));
    case kRepeat: {
        int min = 1 + rng.below_int(cfg.max_repeat);
        std::optional<int> max;
        switch (rng.below_int(3)) {
        case 0: max = min; break;                                  // {m}
        case 1: max = min + rng.below_int(cfg.max_repeat); break;  // {m,n}
        case 2: max.reset(); break;                                // {m,}
        }
        return repeat(random_node(cfg, rng, depth + 1), min, max);
    }
    default:
        break;
    }
    throw std::logic_error("random_node: unreachable");
}

} // namespace

RegexPtr random_regex(const GeneratorConfig& cfg, Rng& rng) {
    if (cfg.alphabet.empty()) throw std::invalid_argument("random_regex: empty alphabet");
    if (cfg.min_states < 1 || cfg.max_states < cfg.min_states)
        throw std::invalid_argument("random_regex: bad state range");

    for (int attempt = 0; attempt < cfg.max_attempts; ++attempt) {
        RegexPtr ast = random_node(cfg, rng, 0);
        Dfa mdfa = minimize(compile(ast, cfg.alphabet));
        int live = mdfa.live_state_count();
        if (live >= cfg.min_states && live <= cfg.max_states) return ast;
    }
    throw GeneratorError("random_regex: exhausted " + std::to_string(cfg.max_attempts) +
                         " attempts without hitting the state range");
}

} // namespace rldec
