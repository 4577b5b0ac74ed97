#include "rldec/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace rldec {

PredictedStates predict_states(const Decoder& decoder, std::span<const Trajectory> trajectories) {
    PredictedStates out;
    out.reserve(trajectories.size());
    for (const auto& traj : trajectories) {
        Eigen::MatrixXd x(decoder.config.input_dim, traj.hidden.size());
        for (std::size_t t = 0; t < traj.hidden.size(); ++t) x.col(t) = traj.hidden[t];
        out.push_back(predict_batch(decoder, x));
    }
    return out;
}

namespace {

void check_metric_inputs(std::span<const Trajectory> trajectories,
                         const PredictedStates& predicted) {
    if (trajectories.empty()) throw std::invalid_argument("metric: empty trajectory set");
    if (predicted.size() != trajectories.size())
        throw std::invalid_argument("metric: prediction set size mismatch");
    for (std::size_t i = 0; i < trajectories.size(); ++i) {
        if (trajectories[i].text.empty())
            throw std::invalid_argument("metric: empty string in trajectory set");
        if (predicted[i].size() != trajectories[i].states.size())
            throw std::invalid_argument("metric: prediction length mismatch");
    }
}

} // namespace

double decoding_accuracy(std::span<const Trajectory> trajectories,
                         const PredictedStates& predicted, const AbstractionNfa& abstraction) {
    check_metric_inputs(trajectories, predicted);
    double total = 0;
    for (std::size_t i = 0; i < trajectories.size(); ++i) {
        const auto& traj = trajectories[i];
        const std::size_t length = traj.text.size();
        double hits = 0;
        for (std::size_t t = 0; t + 1 <= length; ++t) {
            int decoded = abstract_state(abstraction, predicted[i][t + 1]);
            int truth = abstract_state(abstraction, traj.states[t + 1]);
            hits += decoded == truth ? 1 : 0;
        }
        total += hits / static_cast<double>(length);
    }
    return total / static_cast<double>(trajectories.size());
}

double transitional_accuracy(std::span<const Trajectory> trajectories,
                             const PredictedStates& predicted, const AbstractionNfa& abstraction) {
    check_metric_inputs(trajectories, predicted);
    const Dfa& mdfa = *abstraction.base;
    double total = 0;
    for (std::size_t i = 0; i < trajectories.size(); ++i) {
        const auto& traj = trajectories[i];
        const std::size_t length = traj.text.size();
        double hits = 0;
        for (std::size_t t = 0; t + 1 <= length; ++t) {
            int decoded_next = abstract_state(abstraction, predicted[i][t + 1]);
            // the MDFA transition applied to the *decoded* current state
            int stepped = mdfa.step(predicted[i][t], traj.text[t]);
            hits += decoded_next == abstract_state(abstraction, stepped) ? 1 : 0;
        }
        total += hits / static_cast<double>(length);
    }
    return total / static_cast<double>(trajectories.size());
}

double decoding_accuracy(std::span<const Trajectory> trajectories, const Decoder& decoder,
                         const AbstractionNfa& abstraction) {
    return decoding_accuracy(trajectories, predict_states(decoder, trajectories), abstraction);
}

double transitional_accuracy(std::span<const Trajectory> trajectories, const Decoder& decoder,
                             const AbstractionNfa& abstraction) {
    return transitional_accuracy(trajectories, predict_states(decoder, trajectories), abstraction);
}

// ---- abstraction sequences ----

namespace {

// split trajectory indices into train/test, stratified by string label
void split_trajectories(std::span<const Trajectory> trajectories, double test_fraction, Rng& rng,
                        std::vector<int>& train, std::vector<int>& test) {
    std::vector<int> pos, neg;
    for (int i = 0; i < static_cast<int>(trajectories.size()); ++i)
        (trajectories[i].accept ? pos : neg).push_back(i);
    rng.shuffle(pos);
    rng.shuffle(neg);
    auto take = [&](std::vector<int>& from) {
        std::size_t n_test = static_cast<std::size_t>(from.size() * test_fraction);
        for (std::size_t i = 0; i < from.size(); ++i)
            (i < n_test ? test : train).push_back(from[i]);
    };
    take(pos);
    take(neg);
    if (test.empty()) test = train;  // tiny sets: evaluate in-sample
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
}

std::vector<Trajectory> gather(std::span<const Trajectory> trajectories,
                               const std::vector<int>& idx) {
    std::vector<Trajectory> out;
    out.reserve(idx.size());
    for (int i : idx) out.push_back(trajectories[i]);
    return out;
}

// decoder training set at one abstraction level: all (h_t, q_t) pairs of the
// training strings, labels collapsed to each block's representative (its
// minimum MDFA state), so the decoder stays a map into MDFA states
DecoderData level_training_data(std::span<const Trajectory> trajectories,
                                const std::vector<int>& train_idx,
                                const AbstractionNfa& abstraction) {
    std::vector<int> representative(abstraction.num_blocks());
    for (int b = 0; b < abstraction.num_blocks(); ++b)
        representative[b] = abstraction.blocks[b].front();

    std::size_t total = 0;
    for (int i : train_idx) total += trajectories[i].hidden.size();
    DecoderData data;
    data.x.resize(trajectories.front().hidden.front().size(), total);
    data.labels.reserve(total);
    std::size_t at = 0;
    for (int i : train_idx) {
        const auto& traj = trajectories[i];
        for (std::size_t t = 0; t < traj.hidden.size(); ++t, ++at) {
            data.x.col(at) = traj.hidden[t];
            data.labels.push_back(representative[abstraction.block_of[traj.states[t]]]);
        }
    }
    return data;
}

using MergeChooser = std::function<std::pair<int, int>(
    const AbstractionNfa&, std::span<const Trajectory>, const PredictedStates&)>;

AbstractionSequence run_abstraction(std::span<const Trajectory> trajectories,
                                    std::shared_ptr<const Dfa> mdfa,
                                    const AnalysisConfig& config, Rng& rng,
                                    AbstractionMethod method, const MergeChooser& choose) {
    if (!mdfa) throw std::invalid_argument("abstraction: null MDFA");
    if (mdfa->num_states < 2) throw std::invalid_argument("abstraction: need at least 2 states");
    if (trajectories.empty()) throw std::invalid_argument("abstraction: no trajectories");

    std::vector<int> train_idx, test_idx;
    split_trajectories(trajectories, config.test_fraction, rng, train_idx, test_idx);
    std::vector<Trajectory> test_set = gather(trajectories, test_idx);
    std::vector<Trajectory> train_set = gather(trajectories, train_idx);

    AbstractionSequence seq;
    seq.mdfa = mdfa;
    seq.method = method;

    AbstractionNfa current = identity_abstraction(mdfa);
    std::optional<std::pair<int, int>> last_merge;

    const int m = mdfa->num_states;
    for (int level = 0; level < m; ++level) {
        DecoderConfig dcfg = config.decoder;
        dcfg.input_dim = static_cast<int>(trajectories.front().hidden.front().size());
        dcfg.classes = m;
        Decoder decoder =
            fit_decoder(dcfg, level_training_data(trajectories, train_idx, current), rng);

        AbstractionLevel record;
        record.coarseness = current.coarseness;
        record.merged = last_merge;
        record.partition = current.blocks;
        record.rho = decoding_accuracy(test_set, decoder, current);
        record.phi = transitional_accuracy(test_set, decoder, current);
        record.decoder = std::move(decoder);
        seq.levels.push_back(std::move(record));

        if (current.num_blocks() == 1) break;
        PredictedStates train_pred = predict_states(seq.levels.back().decoder, train_set);
        last_merge = choose(current, train_set, train_pred);
        current = merge(current, last_merge->first, last_merge->second);
    }
    return seq;
}

} // namespace

AbstractionSequence greedy_abstraction(std::span<const Trajectory> trajectories,
                                       std::shared_ptr<const Dfa> mdfa,
                                       const AnalysisConfig& config, Rng& rng) {
    // Scores every candidate pair by collapsing the current decoder's
    // predictions through the candidate partition. Only timesteps whose
    // (predicted block, true block) pair equals the candidate merge flip
    // from wrong to right, so one weighted mispair count per block pair
    // scores all candidates.
    MergeChooser choose = [](const AbstractionNfa& current,
                             std::span<const Trajectory> train_set,
                             const PredictedStates& predicted) {
        const int blocks = current.num_blocks();
        std::vector<double> mispair(static_cast<std::size_t>(blocks) * blocks, 0.0);
        for (std::size_t i = 0; i < train_set.size(); ++i) {
            const auto& traj = train_set[i];
            const double weight = 1.0 / (static_cast<double>(train_set.size()) *
                                         static_cast<double>(traj.text.size()));
            for (std::size_t t = 1; t < traj.states.size(); ++t) {
                int p = current.block_of[predicted[i][t]];
                int g = current.block_of[traj.states[t]];
                if (p != g) mispair[static_cast<std::size_t>(std::min(p, g)) * blocks +
                                    std::max(p, g)] += weight;
            }
        }
        std::pair<int, int> best{0, 1};
        double best_gain = -1;
        for (int i = 0; i < blocks; ++i)
            for (int j = i + 1; j < blocks; ++j) {
                double gain = mispair[static_cast<std::size_t>(i) * blocks + j];
                if (gain > best_gain) {
                    best_gain = gain;
                    best = {i, j};
                }
            }
        return best;
    };
    return run_abstraction(trajectories, std::move(mdfa), config, rng, AbstractionMethod::Greedy,
                           choose);
}

AbstractionSequence random_abstraction(std::span<const Trajectory> trajectories,
                                       std::shared_ptr<const Dfa> mdfa,
                                       const AnalysisConfig& config, Rng& rng) {
    MergeChooser choose = [&rng](const AbstractionNfa& current, std::span<const Trajectory>,
                                 const PredictedStates&) {
        const int blocks = current.num_blocks();
        int i = rng.below_int(blocks);
        int j = rng.below_int(blocks - 1);
        if (j >= i) ++j;
        return std::make_pair(std::min(i, j), std::max(i, j));
    };
    return run_abstraction(trajectories, std::move(mdfa), config, rng, AbstractionMethod::Random,
                           choose);
}

AccuracyCurve accuracy_curve(const AbstractionSequence& seq, CurveKind kind) {
    AccuracyCurve curve;
    curve.kind = kind;
    for (const auto& level : seq.levels)
        curve.points.emplace_back(level.coarseness,
                                  kind == CurveKind::Decoding ? level.rho : level.phi);
    return curve;
}

double normalized_auc(const AccuracyCurve& curve) {
    if (curve.points.size() < 2)
        throw std::invalid_argument("normalized_auc: need at least 2 points");
    const double span = curve.points.back().first - curve.points.front().first;
    double area = 0;
    for (std::size_t i = 0; i + 1 < curve.points.size(); ++i) {
        const auto& [x0, y0] = curve.points[i];
        const auto& [x1, y1] = curve.points[i + 1];
        if (x1 <= x0) throw std::invalid_argument("normalized_auc: coarseness must increase");
        area += 0.5 * (y0 + y1) * (x1 - x0);
    }
    return area / span;
}

double coarseness_ratio_at(const AccuracyCurve& curve, double threshold, int m) {
    if (threshold <= 0 || threshold > 1)
        throw std::invalid_argument("coarseness_ratio_at: threshold must be in (0, 1]");
    for (const auto& [n, acc] : curve.points)
        if (acc >= threshold) return static_cast<double>(n) / m;
    throw std::invalid_argument("coarseness_ratio_at: threshold never reached");
}

// ---- one-way ANOVA ----

namespace {

// regularized incomplete beta I_x(a, b) by Lentz's continued fraction
double betacf(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 3e-14, kTiny = 1e-300;
    double qab = a + b, qap = a + 1, qam = a - 1;
    double c = 1, d = 1 - qab * x / qap;
    if (std::fabs(d) < kTiny) d = kTiny;
    d = 1 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) break;
    }
    return h;
}

double reg_incomplete_beta(double a, double b, double x) {
    if (x <= 0) return 0;
    if (x >= 1) return 1;
    double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                      b * std::log1p(-x);
    double front = std::exp(ln_front);
    if (x < (a + 1) / (a + b + 2)) return front * betacf(a, b, x) / a;
    return 1.0 - front * betacf(b, a, 1 - x) / b;
}

} // namespace

double f_distribution_sf(double f, int d1, int d2) {
    if (f <= 0) return 1;
    double x = d2 / (d2 + d1 * f);
    return reg_incomplete_beta(d2 / 2.0, d1 / 2.0, x);
}

double f_distribution_critical(double alpha, int d1, int d2) {
    if (alpha <= 0 || alpha >= 1)
        throw std::invalid_argument("f_distribution_critical: alpha in (0,1)");
    double lo = 0, hi = 1;
    while (f_distribution_sf(hi, d1, d2) > alpha) hi *= 2;
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        if (f_distribution_sf(mid, d1, d2) > alpha) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

AnovaResult anova_f(std::span<const std::vector<double>> groups) {
    if (groups.size() < 2) throw std::invalid_argument("anova_f: need at least 2 groups");
    std::size_t n_total = 0;
    double grand_sum = 0;
    for (const auto& g : groups) {
        if (g.size() < 2) throw std::invalid_argument("anova_f: each group needs >= 2 samples");
        n_total += g.size();
        grand_sum += std::accumulate(g.begin(), g.end(), 0.0);
    }
    const double grand_mean = grand_sum / n_total;

    double ss_between = 0, ss_within = 0;
    for (const auto& g : groups) {
        double mean = std::accumulate(g.begin(), g.end(), 0.0) / g.size();
        ss_between += g.size() * (mean - grand_mean) * (mean - grand_mean);
        for (double v : g) ss_within += (v - mean) * (v - mean);
    }

    AnovaResult r;
    r.dof_between = static_cast<int>(groups.size()) - 1;
    r.dof_within = static_cast<int>(n_total - groups.size());
    if (ss_within <= 0)
        throw AnovaError("anova_f: zero within-group variance across all groups");
    r.f = (ss_between / r.dof_between) / (ss_within / r.dof_within);
    r.p_value = f_distribution_sf(r.f, r.dof_between, r.dof_within);
    return r;
}

// ---- dendrogram ----

Dendrogram dendrogram(const AbstractionSequence& seq) {
    if (seq.levels.empty()) throw std::invalid_argument("dendrogram: empty sequence");
    Dendrogram tree;
    tree.leaf_count = seq.mdfa->num_states;

    // node id carried by each block as merges replay
    std::vector<int> node_of(tree.leaf_count);
    std::iota(node_of.begin(), node_of.end(), 0);

    for (const auto& level : seq.levels) {
        if (!level.merged) continue;
        auto [i, j] = *level.merged;
        Dendrogram::Node node;
        node.left = node_of[i];
        node.right = node_of[j];
        node.coarseness = level.coarseness;
        node_of[i] = tree.leaf_count + static_cast<int>(tree.internal.size());
        node_of.erase(node_of.begin() + j);
        tree.internal.push_back(node);
    }
    return tree;
}

std::vector<std::vector<std::vector<int>>> dendrogram_partitions(const Dendrogram& tree) {
    std::vector<std::vector<std::vector<int>>> out;
    std::vector<std::vector<int>> blocks(tree.leaf_count);
    std::vector<int> node_of(tree.leaf_count);
    for (int q = 0; q < tree.leaf_count; ++q) {
        blocks[q] = {q};
        node_of[q] = q;
    }
    out.push_back(blocks);
    for (std::size_t k = 0; k < tree.internal.size(); ++k) {
        const auto& node = tree.internal[k];
        int i = -1, j = -1;
        for (std::size_t b = 0; b < node_of.size(); ++b) {
            if (node_of[b] == node.left) i = static_cast<int>(b);
            if (node_of[b] == node.right) j = static_cast<int>(b);
        }
        if (i < 0 || j < 0) throw std::logic_error("dendrogram_partitions: broken tree");
        if (i > j) std::swap(i, j);
        blocks[i].insert(blocks[i].end(), blocks[j].begin(), blocks[j].end());
        std::sort(blocks[i].begin(), blocks[i].end());
        blocks.erase(blocks.begin() + j);
        node_of[i] = tree.leaf_count + static_cast<int>(k);
        node_of.erase(node_of.begin() + j);
        out.push_back(blocks);
    }
    return out;
}

} // namespace rldec
