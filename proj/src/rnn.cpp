#include "rldec/rnn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "json.hpp"

namespace rldec {

namespace {

// flat offsets, in declared order
struct Layout {
    struct Tensor {
        int offset, rows, cols;
    };
    std::vector<Tensor> w_in, w_rec, bias;
    Tensor w_out{}, b_out{};
    int total = 0;

    explicit Layout(const RnnConfig& cfg) {
        int off = 0;
        auto push = [&off](int rows, int cols) {
            Tensor t{off, rows, cols};
            off += rows * cols;
            return t;
        };
        for (int l = 0; l < cfg.layers; ++l) {
            int in_dim = l == 0 ? static_cast<int>(cfg.alphabet.size()) : cfg.hidden;
            w_in.push_back(push(cfg.hidden, in_dim));
            w_rec.push_back(push(cfg.hidden, cfg.hidden));
            bias.push_back(push(cfg.hidden, 1));
        }
        w_out = push(2, cfg.hidden);
        b_out = push(2, 1);
        total = off;
    }
};

Eigen::Map<const Eigen::MatrixXd> map_tensor(const Eigen::VectorXd& theta,
                                             const Layout::Tensor& t) {
    return {theta.data() + t.offset, t.rows, t.cols};
}

Eigen::Map<Eigen::MatrixXd> map_tensor(Eigen::VectorXd& theta, const Layout::Tensor& t) {
    return {theta.data() + t.offset, t.rows, t.cols};
}

} // namespace

int RnnModel::param_count() const { return Layout(config).total; }

Eigen::Map<const Eigen::MatrixXd> RnnModel::w_in(int layer) const {
    return map_tensor(theta, Layout(config).w_in[layer]);
}
Eigen::Map<const Eigen::MatrixXd> RnnModel::w_rec(int layer) const {
    return map_tensor(theta, Layout(config).w_rec[layer]);
}
Eigen::Map<const Eigen::VectorXd> RnnModel::bias(int layer) const {
    auto t = Layout(config).bias[layer];
    return {theta.data() + t.offset, t.rows};
}
Eigen::Map<const Eigen::MatrixXd> RnnModel::w_out() const {
    return map_tensor(theta, Layout(config).w_out);
}
Eigen::Map<const Eigen::VectorXd> RnnModel::b_out() const {
    auto t = Layout(config).b_out;
    return {theta.data() + t.offset, t.rows};
}

RnnModel init_rnn(const RnnConfig& config, Rng& rng) {
    if (config.layers < 1 || config.hidden < 1 || config.alphabet.empty())
        throw std::invalid_argument("init_rnn: bad config");
    RnnModel model;
    model.config = config;
    const double scale = 1.0 / std::sqrt(static_cast<double>(config.hidden));
    model.theta.resize(Layout(config).total);
    for (int i = 0; i < model.theta.size(); ++i) model.theta[i] = rng.uniform(-scale, scale);
    return model;
}

Eigen::Vector2d softmax2(const Eigen::Vector2d& logits) {
    double m = logits.maxCoeff();
    Eigen::Vector2d e = (logits.array() - m).exp();
    return e / e.sum();
}

namespace {

// batched forward pass over same-length strings; keeps all per-step states
struct BatchStates {
    // h[l][t]: hidden x batch, t = 0..T
    std::vector<std::vector<Eigen::MatrixXd>> h;
    Eigen::MatrixXd logits;  // 2 x batch
};

BatchStates batch_forward(const RnnModel& model, std::span<const LabeledExample> batch) {
    const auto& cfg = model.config;
    const int batch_size = static_cast<int>(batch.size());
    const int length = static_cast<int>(batch.front().text.size());
    const Layout layout(cfg);

    BatchStates st;
    st.h.resize(cfg.layers);
    for (int l = 0; l < cfg.layers; ++l) {
        st.h[l].resize(length + 1);
        st.h[l][0] = Eigen::MatrixXd::Zero(cfg.hidden, batch_size);
    }

    for (int t = 1; t <= length; ++t) {
        for (int l = 0; l < cfg.layers; ++l) {
            auto w_rec = map_tensor(model.theta, layout.w_rec[l]);
            auto w_in = map_tensor(model.theta, layout.w_in[l]);
            auto bias = map_tensor(model.theta, layout.bias[l]);
            Eigen::MatrixXd z = w_rec * st.h[l][t - 1];
            z.colwise() += Eigen::VectorXd(bias.col(0));
            if (l == 0) {
                // one-hot input: adding W_in's matching column per sequence
                for (int b = 0; b < batch_size; ++b) {
                    int sym = static_cast<int>(cfg.alphabet.index(batch[b].text[t - 1]));
                    z.col(b) += w_in.col(sym);
                }
            } else {
                z.noalias() += w_in * st.h[l - 1][t];
            }
            st.h[l][t] = z.array().tanh();
        }
    }

    auto w_out = map_tensor(model.theta, layout.w_out);
    auto b_out = map_tensor(model.theta, layout.b_out);
    st.logits = w_out * st.h[cfg.layers - 1][length];
    st.logits.colwise() += Eigen::VectorXd(b_out.col(0));
    return st;
}

double batch_loss_from_logits(const Eigen::MatrixXd& logits,
                              std::span<const LabeledExample> batch, int* correct,
                              Eigen::MatrixXd* dlogits) {
    const int batch_size = static_cast<int>(batch.size());
    double loss = 0;
    if (dlogits) dlogits->resize(2, batch_size);
    for (int b = 0; b < batch_size; ++b) {
        int label = batch[b].accept ? 1 : 0;
        Eigen::Vector2d p = softmax2(logits.col(b));
        loss += -std::log(std::max(p[label], 1e-300));
        if (correct) {
            int pred = logits(1, b) > logits(0, b) ? 1 : 0;
            *correct += pred == label ? 1 : 0;
        }
        if (dlogits) {
            Eigen::Vector2d d = p;
            d[label] -= 1.0;
            dlogits->col(b) = d / batch_size;
        }
    }
    return loss / batch_size;
}

} // namespace

double rnn_loss(const RnnModel& model, std::span<const LabeledExample> batch, int* correct) {
    BatchStates st = batch_forward(model, batch);
    return batch_loss_from_logits(st.logits, batch, correct, nullptr);
}

double rnn_loss_and_grad(const RnnModel& model, std::span<const LabeledExample> batch,
                         Eigen::VectorXd& grad, int* correct) {
    const auto& cfg = model.config;
    const int batch_size = static_cast<int>(batch.size());
    const int length = static_cast<int>(batch.front().text.size());
    const Layout layout(cfg);

    BatchStates st = batch_forward(model, batch);
    Eigen::MatrixXd dlogits;
    double loss = batch_loss_from_logits(st.logits, batch, correct, &dlogits);

    auto g_w_out = map_tensor(grad, layout.w_out);
    auto g_b_out = map_tensor(grad, layout.b_out);
    const auto& h_top = st.h[cfg.layers - 1][length];
    g_w_out.noalias() += dlogits * h_top.transpose();
    g_b_out.col(0) += dlogits.rowwise().sum();

    // dh[l]: gradient flowing into h[l][t] at the current step of the
    // backward sweep
    std::vector<Eigen::MatrixXd> dh(cfg.layers,
                                    Eigen::MatrixXd::Zero(cfg.hidden, batch_size));
    auto w_out = map_tensor(model.theta, layout.w_out);
    dh[cfg.layers - 1] = w_out.transpose() * dlogits;

    for (int t = length; t >= 1; --t) {
        for (int l = cfg.layers - 1; l >= 0; --l) {
            // through tanh
            Eigen::MatrixXd dz =
                dh[l].array() * (1.0 - st.h[l][t].array().square());

            auto g_w_rec = map_tensor(grad, layout.w_rec[l]);
            auto g_bias = map_tensor(grad, layout.bias[l]);
            auto g_w_in = map_tensor(grad, layout.w_in[l]);
            g_w_rec.noalias() += dz * st.h[l][t - 1].transpose();
            g_bias.col(0) += dz.rowwise().sum();

            auto w_rec = map_tensor(model.theta, layout.w_rec[l]);
            dh[l] = w_rec.transpose() * dz;

            if (l == 0) {
                for (int b = 0; b < batch_size; ++b) {
                    int sym = static_cast<int>(cfg.alphabet.index(batch[b].text[t - 1]));
                    g_w_in.col(sym) += dz.col(b);
                }
            } else {
                g_w_in.noalias() += dz * st.h[l - 1][t].transpose();
                auto w_in = map_tensor(model.theta, layout.w_in[l]);
                dh[l - 1] += w_in.transpose() * dz;
            }
        }
    }
    return loss;
}

RnnForward rnn_forward(const RnnModel& model, std::string_view w) {
    if (w.empty()) throw std::invalid_argument("rnn_forward: string must be non-empty");
    LabeledExample ex{std::string(w), false};
    BatchStates st = batch_forward(model, std::span<const LabeledExample>(&ex, 1));

    RnnForward out;
    out.logits = st.logits.col(0);
    out.hidden.resize(w.size() + 1);
    for (std::size_t t = 0; t <= w.size(); ++t) {
        Eigen::VectorXd h(model.state_dim());
        for (int l = 0; l < model.config.layers; ++l)
            h.segment(l * model.config.hidden, model.config.hidden) = st.h[l][t].col(0);
        out.hidden[t] = std::move(h);
    }
    return out;
}

namespace {

struct EvalResult {
    double loss = 0;
    double accuracy = 0;
};

// loss/accuracy over an example list, grouped by length for batching
EvalResult evaluate(const RnnModel& model, std::span<const LabeledExample> examples,
                    int batch_size) {
    std::map<std::size_t, std::vector<LabeledExample>> buckets;
    for (const auto& ex : examples) buckets[ex.text.size()].push_back(ex);
    double loss_sum = 0;
    int correct = 0;
    for (auto& [len, bucket] : buckets) {
        for (std::size_t i = 0; i < bucket.size(); i += batch_size) {
            std::size_t count = std::min<std::size_t>(batch_size, bucket.size() - i);
            std::span<const LabeledExample> batch(bucket.data() + i, count);
            loss_sum += rnn_loss(model, batch, &correct) * count;
        }
    }
    EvalResult r;
    r.loss = loss_sum / examples.size();
    r.accuracy = static_cast<double>(correct) / examples.size();
    return r;
}

} // namespace

std::pair<RnnModel, TrainStats> train(RnnModel model, const LabeledDataset& data,
                                      const TrainConfig& config, Rng& rng) {
    if (data.examples.empty()) throw std::invalid_argument("train: empty dataset");

    // stratified validation split
    std::vector<LabeledExample> pos, neg;
    for (const auto& ex : data.examples) (ex.accept ? pos : neg).push_back(ex);
    rng.shuffle(pos);
    rng.shuffle(neg);
    auto n_val = [&](std::size_t n) { return static_cast<std::size_t>(n * config.val_fraction); };
    std::vector<LabeledExample> val_set, train_set;
    TrainStats stats;
    if (n_val(pos.size()) == 0 || n_val(neg.size()) == 0) {
        train_set = data.examples;
        val_set = data.examples;
        stats.val_is_train = true;
    } else {
        for (std::size_t i = 0; i < pos.size(); ++i)
            (i < n_val(pos.size()) ? val_set : train_set).push_back(pos[i]);
        for (std::size_t i = 0; i < neg.size(); ++i)
            (i < n_val(neg.size()) ? val_set : train_set).push_back(neg[i]);
    }

    stats.initial_train_loss = evaluate(model, train_set, config.batch_size).loss;

    // Adam state
    Eigen::VectorXd m = Eigen::VectorXd::Zero(model.theta.size());
    Eigen::VectorXd v = Eigen::VectorXd::Zero(model.theta.size());
    Eigen::VectorXd grad(model.theta.size());
    long step = 0;

    RnnModel best = model;
    double best_val_loss = std::numeric_limits<double>::infinity();

    for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
        // length buckets, shuffled within and across
        std::map<std::size_t, std::vector<LabeledExample>> buckets;
        {
            std::vector<LabeledExample> shuffled = train_set;
            rng.shuffle(shuffled);
            for (auto& ex : shuffled) buckets[ex.text.size()].push_back(std::move(ex));
        }
        std::vector<std::span<const LabeledExample>> batches;
        for (auto& [len, bucket] : buckets)
            for (std::size_t i = 0; i < bucket.size(); i += config.batch_size) {
                std::size_t count = std::min<std::size_t>(config.batch_size, bucket.size() - i);
                batches.emplace_back(bucket.data() + i, count);
            }
        rng.shuffle(batches);

        for (const auto& batch : batches) {
            grad.setZero();
            double loss = rnn_loss_and_grad(model, batch, grad);
            if (!std::isfinite(loss)) throw TrainDivergence(epoch);

            double norm = grad.norm();
            if (norm > config.clip_norm) grad *= config.clip_norm / norm;

            ++step;
            m = config.beta1 * m + (1 - config.beta1) * grad;
            v = config.beta2 * v + (1 - config.beta2) * grad.cwiseProduct(grad);
            double mc = 1 - std::pow(config.beta1, static_cast<double>(step));
            double vc = 1 - std::pow(config.beta2, static_cast<double>(step));
            model.theta -=
                (config.learning_rate / mc) *
                (m.array() / ((v.array() / vc).sqrt() + config.adam_eps)).matrix();
        }

        EpochStats es;
        EvalResult tr = evaluate(model, train_set, config.batch_size);
        EvalResult va = evaluate(model, val_set, config.batch_size);
        es.train_loss = tr.loss;
        es.train_accuracy = tr.accuracy;
        es.val_loss = va.loss;
        es.val_accuracy = va.accuracy;
        stats.epochs.push_back(es);
        if (!std::isfinite(tr.loss) || !std::isfinite(va.loss)) throw TrainDivergence(epoch);

        if (va.accuracy > stats.best_val_accuracy ||
            (va.accuracy == stats.best_val_accuracy && va.loss < best_val_loss)) {
            stats.best_val_accuracy = va.accuracy;
            best_val_loss = va.loss;
            stats.best_epoch = epoch;
            best = model;
        }
        if (va.accuracy >= config.target_accuracy) {
            stats.reached_target = true;
            break;
        }
    }
    return {std::move(best), std::move(stats)};
}

std::vector<Trajectory> record_trajectories(const RnnModel& model, const Dfa& mdfa,
                                            const LabeledDataset& data) {
    std::vector<Trajectory> out;
    out.reserve(data.examples.size());
    for (const auto& ex : data.examples) {
        Trajectory traj;
        traj.text = ex.text;
        traj.accept = ex.accept;
        traj.hidden = rnn_forward(model, ex.text).hidden;
        traj.states = trace(mdfa, ex.text);
        if (traj.hidden.size() != traj.states.size())
            throw std::logic_error("record_trajectories: misaligned trajectory");
        out.push_back(std::move(traj));
    }
    return out;
}

void save_rnn(const std::filesystem::path& path, const RnnModel& model) {
    nlohmann::json j;
    j["schema"] = 1;
    j["kind"] = "rnn";
    j["alphabet"] = model.config.alphabet.symbols();
    j["layers"] = model.config.layers;
    j["hidden"] = model.config.hidden;
    j["seed"] = model.seed;
    j["params"] = std::vector<double>(model.theta.data(), model.theta.data() + model.theta.size());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_rnn: cannot open " + path.string());
    out << j.dump(2) << "\n";
}

RnnModel load_rnn(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_rnn: cannot open " + path.string());
    nlohmann::json j;
    in >> j;
    if (j.value("kind", "") != "rnn") throw std::runtime_error("load_rnn: not an rnn checkpoint");
    RnnModel model;
    model.config.alphabet = Alphabet(j.at("alphabet").get<std::string>());
    model.config.layers = j.at("layers").get<int>();
    model.config.hidden = j.at("hidden").get<int>();
    model.seed = j.at("seed").get<std::uint64_t>();
    auto params = j.at("params").get<std::vector<double>>();
    if (static_cast<int>(params.size()) != Layout(model.config).total)
        throw std::runtime_error("load_rnn: parameter count mismatch");
    model.theta = Eigen::Map<const Eigen::VectorXd>(params.data(), params.size());
    return model;
}

void export_trajectories(const std::filesystem::path& path,
                         std::span<const Trajectory> trajectories) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("export_trajectories: cannot open " + path.string());
    out << "example,t,state";
    if (!trajectories.empty())
        for (int i = 0; i < trajectories.front().hidden.front().size(); ++i) out << ",h" << i;
    out << "\n";
    for (std::size_t e = 0; e < trajectories.size(); ++e) {
        const auto& traj = trajectories[e];
        for (std::size_t t = 0; t < traj.hidden.size(); ++t) {
            out << e << ',' << t << ',' << traj.states[t];
            const auto& h = traj.hidden[t];
            for (int i = 0; i < h.size(); ++i) out << ',' << h[i];
            out << '\n';
        }
    }
}

} // namespace rldec
