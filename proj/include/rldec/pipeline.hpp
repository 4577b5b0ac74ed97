#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "rldec/analysis.hpp"
#include "rldec/dataset.hpp"
#include "rldec/generate.hpp"
#include "rldec/rnn.hpp"

namespace rldec {

// Everything a batch run needs; round-trips through the key=value config
// format losslessly.
struct ExperimentConfig {
    std::uint64_t master_seed = 1;
    int language_count = 20;
    std::string alphabet = "0123456";
    std::string fixed_regex;  // when set, run this one language instead of sampling

    // generator
    int max_depth = 4;
    int min_states = 3;
    int max_states = 14;

    // dataset
    int dataset_size = 1000;
    int max_len = 20;

    // recognizer
    int rnn_layers = 2;
    int rnn_hidden = 50;
    double learning_rate = 1e-3;
    int batch_size = 32;
    int max_epochs = 200;
    double target_accuracy = 0.99;
    double val_fraction = 0.2;

    // decoders
    double decoder_l2 = 1e-4;
    int decoder_epochs = 200;
    int mlp_hidden = 64;
    int mlp_epochs = 60;
    double test_fraction = 0.2;

    std::string output_dir = "out";
    int workers = 1;

    GeneratorConfig generator_config() const;
    TrainConfig train_config() const;
    RnnConfig rnn_config() const;
    DecoderConfig linear_decoder_config() const;
    DecoderConfig mlp_decoder_config() const;
};

ExperimentConfig load_config(const std::filesystem::path& path);
void save_config(const std::filesystem::path& path, const ExperimentConfig& config);

// per-level metrics of one abstraction sequence, ready for serialization
struct SequenceSummary {
    std::vector<std::pair<int, int>> merges;  // block index pairs in order
    std::vector<double> rho;                  // indexed by coarseness
    std::vector<double> phi;
    std::vector<std::vector<std::vector<int>>> partitions;
    double auc_rho = 0;
    double auc_phi = 0;
    double ratio90 = 0;
};

struct ExperimentRecord {
    int schema = 1;
    int language_index = 0;
    std::uint64_t seed = 0;
    std::string regex;
    std::string alphabet;

    // MDFA
    int mdfa_states = 0;       // complete automaton, sink included
    int mdfa_live_states = 0;  // paper-style node count
    int mdfa_start = 0;
    std::vector<int> mdfa_delta;
    std::vector<int> mdfa_accepting;

    // dataset digest
    int dataset_n = 0;
    int dataset_max_len = 0;
    std::uint64_t dataset_hash = 0;

    // training
    int epochs_run = 0;
    int best_epoch = 0;
    double best_val_accuracy = 0;
    double final_train_accuracy = 0;

    // decoder comparison at coarseness 0 (held-out accuracy)
    double linear_accuracy = 0;
    double mlp_accuracy = 0;

    SequenceSummary greedy;
    SequenceSummary random;
    std::vector<Dendrogram::Node> dendrogram_nodes;

    // wall-clock seconds (excluded from determinism comparisons)
    double train_seconds = 0;
    double analysis_seconds = 0;
};

struct DiscardInfo {
    int language_index = 0;
    std::string regex;
    std::string reason;
};

struct BatchResult {
    std::vector<ExperimentRecord> records;
    std::vector<DiscardInfo> discards;
};

// End-to-end batch: sample languages (dedup by canonical MDFA), build
// datasets, train recognizers, run both abstraction methods, write one
// directory per language plus a batch summary. Failures discard the language
// with a logged reason; they never abort the batch. Deterministic for a
// fixed master seed regardless of worker count.
BatchResult run_experiment(const ExperimentConfig& config);

// DOT rendering; accepting states double-circled, edge labels as collapsed
// symbol ranges, dendrogram merges drawn as a tree keyed by coarseness.
std::string emit_dot(const Dfa& dfa, const Dendrogram* dendro = nullptr);

// Aggregate CSVs and the batch summary: curves grouped by live MDFA size,
// AUC and coarseness-ratio means per method, linear-vs-MLP ANOVA table.
void emit_report(const std::vector<ExperimentRecord>& records,
                 const std::filesystem::path& dir);

nlohmann::json record_to_json(const ExperimentRecord& record);
ExperimentRecord record_from_json(const nlohmann::json& j);

// single-language analysis used by both run_experiment and the CLI
ExperimentRecord analyze_language(const ExperimentConfig& config, int language_index,
                                  std::uint64_t seed, const std::string& regex_text,
                                  const Dfa& mdfa, const LabeledDataset& dataset);

std::uint64_t dataset_digest(const LabeledDataset& dataset);

} // namespace rldec
