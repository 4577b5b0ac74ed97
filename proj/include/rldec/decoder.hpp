#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <span>
#include <vector>

#include "rldec/rng.hpp"

namespace rldec {

enum class DecoderKind { Linear, Mlp };

// Hyperparameters for decoder fitting. `hidden` applies to the MLP only.
struct DecoderConfig {
    DecoderKind kind = DecoderKind::Linear;
    int input_dim = 0;
    int classes = 0;
    std::vector<int> hidden = {64};
    double l2 = 1e-4;
    double learning_rate = 0.05;
    int epochs = 200;
    int batch_size = 64;      // MLP mini-batches; the linear fit is full-batch
    double mlp_learning_rate = 2e-3;
};

// Classifier from hidden-state vectors to automaton states. Linear =
// multinomial logistic regression; Mlp = tanh hidden layers with a softmax
// head. Parameters are one flat vector (column-major W then b per affine
// stage, input to output).
struct Decoder {
    DecoderConfig config;
    Eigen::VectorXd theta;

    // fitting metadata
    std::uint64_t seed = 0;
    int epochs_trained = 0;
    bool degenerate = false;           // fit saw a single class
    std::vector<int> absent_classes;   // classes with no training examples
};

// Feature matrix layout: one column per example.
struct DecoderData {
    Eigen::MatrixXd x;       // input_dim x n
    std::vector<int> labels; // n, in [0, classes)
};

Decoder fit_decoder(const DecoderConfig& config, const DecoderData& data, Rng& rng);

int predict(const Decoder& decoder, const Eigen::VectorXd& h);
std::vector<int> predict_batch(const Decoder& decoder, const Eigen::MatrixXd& x);

// mean L2-regularized cross-entropy and gradient (for tests and the fit loop)
double decoder_loss_and_grad(const Decoder& decoder, const DecoderData& data,
                             Eigen::VectorXd& grad);
double decoder_loss(const Decoder& decoder, const DecoderData& data);

// fraction of correctly predicted labels; throws on empty input
double decoder_accuracy(const Decoder& decoder, const DecoderData& data);

void save_decoder(const std::filesystem::path& path, const Decoder& decoder);
Decoder load_decoder(const std::filesystem::path& path);

} // namespace rldec
