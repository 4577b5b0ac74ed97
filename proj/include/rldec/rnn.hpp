#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "rldec/dataset.hpp"
#include "rldec/rng.hpp"

namespace rldec {

// Stacked Elman recognizer: tanh layers, one-hot input, softmax readout on
// the top layer's final state. All parameters live in one flat vector
// (column-major tensors in declared order: per layer W_in, W_rec, b; then
// W_out, b_out), which keeps Adam, clipping, checkpoints and finite
// differences uniform.
struct RnnConfig {
    Alphabet alphabet;
    int layers = 2;
    int hidden = 50;
};

struct RnnModel {
    RnnConfig config;
    Eigen::VectorXd theta;
    std::uint64_t seed = 0;

    int input_dim(int layer) const {
        return layer == 0 ? static_cast<int>(config.alphabet.size()) : config.hidden;
    }
    int state_dim() const { return config.layers * config.hidden; }
    int param_count() const;

    // tensor views into theta
    Eigen::Map<const Eigen::MatrixXd> w_in(int layer) const;
    Eigen::Map<const Eigen::MatrixXd> w_rec(int layer) const;
    Eigen::Map<const Eigen::VectorXd> bias(int layer) const;
    Eigen::Map<const Eigen::MatrixXd> w_out() const;
    Eigen::Map<const Eigen::VectorXd> b_out() const;
};

// uniform init in [-1/sqrt(hidden), 1/sqrt(hidden)]
RnnModel init_rnn(const RnnConfig& config, Rng& rng);

struct RnnForward {
    Eigen::Vector2d logits;
    // |w|+1 entries; entry t is all layers' states at step t, concatenated
    std::vector<Eigen::VectorXd> hidden;
};

RnnForward rnn_forward(const RnnModel& model, std::string_view w);

Eigen::Vector2d softmax2(const Eigen::Vector2d& logits);

// Mean cross-entropy loss and gradient for a same-length batch. Returns the
// loss; adds batch-mean gradients into `grad` (preallocated, zeroed by the
// caller); counts argmax hits into `correct` when given.
double rnn_loss_and_grad(const RnnModel& model, std::span<const LabeledExample> batch,
                         Eigen::VectorXd& grad, int* correct = nullptr);

double rnn_loss(const RnnModel& model, std::span<const LabeledExample> batch,
                int* correct = nullptr);

struct TrainConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    double clip_norm = 5.0;
    int batch_size = 32;
    int max_epochs = 200;
    double val_fraction = 0.2;
    double target_accuracy = 0.99;
};

struct EpochStats {
    double train_loss = 0, train_accuracy = 0;
    double val_loss = 0, val_accuracy = 0;
};

struct TrainStats {
    double initial_train_loss = 0;
    std::vector<EpochStats> epochs;
    int best_epoch = -1;
    double best_val_accuracy = 0;
    bool reached_target = false;
    bool val_is_train = false;  // dataset too small to hold out a split
};

struct TrainDivergence : std::runtime_error {
    TrainDivergence(int epoch)
        : std::runtime_error("training diverged (non-finite loss) at epoch " +
                             std::to_string(epoch)),
          epoch(epoch) {}
    int epoch;
};

// Adam with gradient-norm clipping over length-bucketed mini-batches.
// Returns the best-validation model and per-epoch statistics; stops early
// once validation accuracy reaches the target.
std::pair<RnnModel, TrainStats> train(RnnModel model, const LabeledDataset& data,
                                      const TrainConfig& config, Rng& rng);

// One recorded example: hidden states aligned with the MDFA trace.
struct Trajectory {
    std::string text;
    bool accept = false;
    std::vector<Eigen::VectorXd> hidden;  // |w|+1 entries, dim layers*hidden
    std::vector<int> states;              // |w|+1 MDFA states
};

std::vector<Trajectory> record_trajectories(const RnnModel& model, const Dfa& mdfa,
                                            const LabeledDataset& data);

void save_rnn(const std::filesystem::path& path, const RnnModel& model);
RnnModel load_rnn(const std::filesystem::path& path);

// CSV: example id, t, q_t, then the state-vector components
void export_trajectories(const std::filesystem::path& path,
                         std::span<const Trajectory> trajectories);

} // namespace rldec
