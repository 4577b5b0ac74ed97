#include "rldec/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace rldec {

namespace {

constexpr double kStopProbability = 0.25;

void verify_dataset(const LabeledDataset& ds, const Dfa& dfa, int n) {
    std::size_t positives = 0;
    std::set<std::pair<std::string, bool>> seen;
    for (const auto& ex : ds.examples) {
        if (ex.text.empty()) throw DatasetError("dataset invariant: empty string");
        if (static_cast<int>(ex.text.size()) > ds.max_len)
            throw DatasetError("dataset invariant: string over max_len");
        if (accepts(dfa, ex.text) != ex.accept)
            throw DatasetError("dataset invariant: label disagrees with the automaton");
        if (!seen.emplace(ex.text, ex.accept).second)
            throw DatasetError("dataset invariant: duplicate example");
        positives += ex.accept ? 1 : 0;
    }
    if (ds.examples.size() != static_cast<std::size_t>(n) || positives * 2 != ds.examples.size())
        throw DatasetError("dataset invariant: not balanced");
}

} // namespace

std::string sample_positive(const Dfa& dfa, int max_len, Rng& rng) {
    if (max_len < 1) throw std::invalid_argument("sample_positive: max_len must be >= 1");
    int shortest = shortest_nonempty_word(dfa, true);
    if (shortest < 0 || shortest > max_len)
        throw DatasetError("sample_positive: no accepted string of length in [1, max_len]");

    const std::vector<int> to_accept = steps_to_accepting(dfa);
    const int k = static_cast<int>(dfa.alphabet.size());
    std::string w;
    int state = dfa.start;
    while (true) {
        int remaining = max_len - static_cast<int>(w.size());
        bool may_stop = !w.empty() && dfa.is_accepting(state);
        if (may_stop && rng.chance(kStopProbability)) return w;

        // symbols whose successor can still reach acceptance in budget
        std::vector<int> viable;
        for (int a = 0; a < k; ++a) {
            int t = dfa.next(state, a);
            if (remaining >= 1 && to_accept[t] >= 0 && to_accept[t] <= remaining - 1)
                viable.push_back(a);
        }
        if (viable.empty()) {
            if (may_stop) return w;
            // unreachable given the precheck; guard anyway
            throw DatasetError("sample_positive: walk ran out of viable transitions");
        }
        int a = viable[rng.below(viable.size())];
        w.push_back(dfa.alphabet.symbol(a));
        state = dfa.next(state, a);
    }
}

std::optional<std::string> make_negative_swap(std::string_view w, const Dfa& dfa, Rng& rng,
                                              int max_tries) {
    if (w.size() < 2) return std::nullopt;
    std::string s(w);
    for (int attempt = 0; attempt < max_tries; ++attempt) {
        std::size_t i = rng.below(s.size());
        std::size_t j = rng.below(s.size() - 1);
        if (j >= i) ++j;
        std::swap(s[i], s[j]);
        if (!accepts(dfa, s)) return s;
    }
    return std::nullopt;
}

std::optional<std::string> make_negative_shuffle(std::string_view w, const Dfa& dfa, Rng& rng,
                                                 int max_tries) {
    if (w.size() < 2) return std::nullopt;
    std::string s(w);
    for (int attempt = 0; attempt < max_tries; ++attempt) {
        std::vector<char> chars(s.begin(), s.end());
        rng.shuffle(chars);
        std::string shuffled(chars.begin(), chars.end());
        if (!accepts(dfa, shuffled)) return shuffled;
    }
    return std::nullopt;
}

LabeledDataset build_dataset(const Dfa& dfa, int n, int max_len, Rng& rng) {
    if (n < 2 || n % 2 != 0) throw std::invalid_argument("build_dataset: n must be even and >= 2");
    if (shortest_nonempty_word(dfa, false) < 0)
        throw DatasetError("build_dataset: language accepts every string; no negatives exist");

    const int half = n / 2;
    const int budget = 200 * n;

    std::set<std::string> positives;
    int tries = 0;
    while (static_cast<int>(positives.size()) < half) {
        if (++tries > budget)
            throw DatasetError("build_dataset: language too sparse for " + std::to_string(half) +
                               " distinct accepted strings under max_len");
        positives.insert(sample_positive(dfa, max_len, rng));
    }

    // negatives: alternate swap and shuffle over the positives, then fall
    // back to uniform random rejected strings
    std::vector<std::string> pos_list(positives.begin(), positives.end());
    std::set<std::string> negatives;
    bool use_swap = true;
    std::size_t cursor = 0;
    tries = 0;
    while (static_cast<int>(negatives.size()) < half && tries < budget) {
        ++tries;
        const std::string& seed_string = pos_list[cursor % pos_list.size()];
        ++cursor;
        int max_tries = 10 * static_cast<int>(seed_string.size());
        auto negative = use_swap ? make_negative_swap(seed_string, dfa, rng, max_tries)
                                 : make_negative_shuffle(seed_string, dfa, rng, max_tries);
        use_swap = !use_swap;
        if (negative) negatives.insert(std::move(*negative));
    }
    tries = 0;
    while (static_cast<int>(negatives.size()) < half) {
        if (++tries > budget)
            throw DatasetError("build_dataset: complement too sparse to balance under max_len");
        int len = 1 + rng.below_int(max_len);
        std::string s;
        for (int i = 0; i < len; ++i)
            s.push_back(dfa.alphabet.symbol(rng.below(dfa.alphabet.size())));
        if (!accepts(dfa, s)) negatives.insert(std::move(s));
    }

    LabeledDataset ds;
    ds.alphabet = dfa.alphabet;
    ds.max_len = max_len;
    ds.examples.reserve(n);
    for (const auto& s : positives) ds.examples.push_back({s, true});
    for (const auto& s : negatives) ds.examples.push_back({s, false});
    verify_dataset(ds, dfa, n);
    return ds;
}

void save_dataset(const std::filesystem::path& path, const DatasetFile& file) {
    std::ofstream out(path);
    if (!out) throw DatasetError("save_dataset: cannot open " + path.string());
    out << "# regex=" << file.regex << "\talphabet=" << file.data.alphabet.symbols()
        << "\tseed=" << file.seed << "\tmax_len=" << file.data.max_len << "\n";
    for (const auto& ex : file.data.examples)
        out << (ex.accept ? "accept" : "reject") << '\t' << ex.text << '\n';
    if (!out) throw DatasetError("save_dataset: write failed for " + path.string());
}

DatasetFile load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DatasetError("load_dataset: cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || line.empty() || line[0] != '#')
        throw DatasetError("load_dataset: missing header line");

    DatasetFile file;
    std::istringstream header(line.substr(1));
    std::string field;
    std::string alphabet_symbols;
    while (std::getline(header, field, '\t')) {
        auto eq = field.find('=');
        if (eq == std::string::npos) continue;
        std::string key = field.substr(0, eq);
        std::string value = field.substr(eq + 1);
        while (!key.empty() && key.front() == ' ') key.erase(key.begin());
        if (key == "regex") file.regex = value;
        else if (key == "alphabet") alphabet_symbols = value;
        else if (key == "seed") file.seed = std::stoull(value);
        else if (key == "max_len") file.data.max_len = std::stoi(value);
    }
    if (alphabet_symbols.empty()) throw DatasetError("load_dataset: header lacks alphabet");
    file.data.alphabet = Alphabet(alphabet_symbols);

    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos) throw DatasetError("load_dataset: malformed row: " + line);
        std::string label = line.substr(0, tab);
        if (label != "accept" && label != "reject")
            throw DatasetError("load_dataset: unknown label: " + label);
        file.data.examples.push_back({line.substr(tab + 1), label == "accept"});
    }
    return file;
}

} // namespace rldec
