#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "rldec/automata.hpp"
#include "rldec/decoder.hpp"
#include "rldec/rnn.hpp"

namespace rldec {

// Decoded MDFA state per trajectory per timestep (t = 0..|w|). Produced from
// a fitted decoder here; tests substitute the ground-truth trace to exercise
// the metric identities.
using PredictedStates = std::vector<std::vector<int>>;

PredictedStates predict_states(const Decoder& decoder, std::span<const Trajectory> trajectories);

// Decoding accuracy: per-string average agreement between the abstracted
// decoded state and the abstracted true state at steps 1..|w|.
double decoding_accuracy(std::span<const Trajectory> trajectories,
                         const PredictedStates& predicted, const AbstractionNfa& abstraction);

// Transitional accuracy: the abstracted decoded next state against the
// abstraction of the MDFA transition applied to the decoded current state
// (not to the true state).
double transitional_accuracy(std::span<const Trajectory> trajectories,
                             const PredictedStates& predicted, const AbstractionNfa& abstraction);

double decoding_accuracy(std::span<const Trajectory> trajectories, const Decoder& decoder,
                         const AbstractionNfa& abstraction);
double transitional_accuracy(std::span<const Trajectory> trajectories, const Decoder& decoder,
                             const AbstractionNfa& abstraction);

enum class AbstractionMethod { Greedy, Random };

// One coarseness level: the merge that produced it, the partition snapshot,
// the decoder fit at the level and its held-out metrics.
struct AbstractionLevel {
    int coarseness = 0;
    std::optional<std::pair<int, int>> merged;  // block indices at the previous level
    std::vector<std::vector<int>> partition;
    double rho = 0;
    double phi = 0;
    Decoder decoder;
};

struct AbstractionSequence {
    std::shared_ptr<const Dfa> mdfa;
    AbstractionMethod method = AbstractionMethod::Greedy;
    std::vector<AbstractionLevel> levels;  // coarseness 0..M-1
};

struct AnalysisConfig {
    DecoderConfig decoder;        // input_dim/classes filled per level
    double test_fraction = 0.2;   // held-out strings for reported metrics
};

// Iterative merging from the MDFA down to a single superstate. At each level
// a decoder is refit on the current superstate labels; the next merge is the
// candidate pair with the highest training-split decoding accuracy after
// collapsing the current predictions (ties to the lowest index pair).
AbstractionSequence greedy_abstraction(std::span<const Trajectory> trajectories,
                                       std::shared_ptr<const Dfa> mdfa,
                                       const AnalysisConfig& config, Rng& rng);

// Baseline: identical refit schedule, uniformly random merge pair.
AbstractionSequence random_abstraction(std::span<const Trajectory> trajectories,
                                       std::shared_ptr<const Dfa> mdfa,
                                       const AnalysisConfig& config, Rng& rng);

enum class CurveKind { Decoding, Transitional };

struct AccuracyCurve {
    CurveKind kind = CurveKind::Decoding;
    std::vector<std::pair<int, double>> points;  // (coarseness, accuracy)
};

AccuracyCurve accuracy_curve(const AbstractionSequence& seq, CurveKind kind);

// trapezoidal area with the coarseness axis rescaled to [0, 1]
double normalized_auc(const AccuracyCurve& curve);

// (smallest coarseness with accuracy >= threshold) / M
double coarseness_ratio_at(const AccuracyCurve& curve, double threshold, int m);

struct AnovaResult {
    double f = 0;
    int dof_between = 0;
    int dof_within = 0;
    double p_value = 1;
};

struct AnovaError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// one-way ANOVA; throws AnovaError when every group is internally constant
AnovaResult anova_f(std::span<const std::vector<double>> groups);

// F-distribution helpers (regularized incomplete beta underneath)
double f_distribution_sf(double f, int d1, int d2);       // P(F' > f)
double f_distribution_critical(double alpha, int d1, int d2);

// Binary merge tree over MDFA states: leaves 0..M-1, internal node k (id
// M+k) joins the subtrees merged at coarseness k+1.
struct Dendrogram {
    struct Node {
        int left = 0, right = 0;  // child node ids
        int coarseness = 0;
    };
    int leaf_count = 0;
    std::vector<Node> internal;
};

Dendrogram dendrogram(const AbstractionSequence& seq);

// partitions at every coarseness reconstructed from the tree (for checks)
std::vector<std::vector<std::vector<int>>> dendrogram_partitions(const Dendrogram& tree);

} // namespace rldec
