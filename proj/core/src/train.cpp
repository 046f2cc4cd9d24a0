#include "dff/net.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace dff::net {

EpochLog evaluate(const NetWeights& weights, const std::vector<LossLayerParams>& layers,
                  const std::vector<TrainingExample>& examples)
{
    EpochLog log;
    if (examples.empty())
        return log;
    double loss = 0.0;
    long long correct = 0, labeled = 0;
    for (const auto& ex : examples) {
        if (ex.labels.size() != layers.size())
            throw std::invalid_argument("evaluate: need one label map per segmentation");
        const FeatureMap fmap = forward(weights, ex.image);
        for (std::size_t s = 0; s < layers.size(); ++s) {
            loss += angular_softmax_loss(fmap, ex.labels[s], layers[s]);
            const LabelMap& labels = ex.labels[s];
            for (std::size_t i = 0; i < labels.data.size(); ++i) {
                if (labels.data[i] == kNoLabel)
                    continue;
                Eigen::Index arg = 0;
                (layers[s].class_vectors * fmap.features.col(static_cast<Eigen::Index>(i))).maxCoeff(&arg);
                correct += arg == static_cast<Eigen::Index>(labels.data[i]);
                ++labeled;
            }
        }
    }
    log.loss = loss / static_cast<double>(examples.size());
    log.accuracy = labeled ? static_cast<double>(correct) / static_cast<double>(labeled) : 0.0;
    return log;
}

TrainResult train(const NetConfig& config, const std::vector<TrainingExample>& examples,
                  const std::vector<int>& patch_counts, int epochs, const OptimConfig& optim)
{
    config.validate();
    if (epochs < 0)
        throw std::invalid_argument("train: epochs must be non-negative");
    if (optim.batch_size < 1)
        throw std::invalid_argument("train: batch size must be positive");
    if (examples.empty())
        throw std::invalid_argument("train: no training examples");

    TrainResult result;
    result.weights = init_weights(config);
    for (std::size_t s = 0; s < patch_counts.size(); ++s)
        result.layers.push_back(init_loss_layer(patch_counts[s], config.feature_dim, config.seed * 1000003ULL + s + 1));

    std::vector<Eigen::MatrixXd> vel_w, vel_h;
    for (const auto& p : result.weights.params)
        vel_w.push_back(Eigen::MatrixXd::Zero(p.value.rows(), p.value.cols()));
    for (const auto& l : result.layers)
        vel_h.push_back(Eigen::MatrixXd::Zero(l.class_vectors.rows(), l.class_vectors.cols()));

    EpochLog initial = evaluate(result.weights, result.layers, examples);
    initial.epoch = 0;
    result.log.push_back(initial);

    std::mt19937_64 rng(optim.seed);
    std::vector<std::size_t> order(examples.size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 1; epoch <= epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        long long correct = 0, labeled = 0;
        int batches = 0;
        for (std::size_t start = 0; start < order.size(); start += optim.batch_size) {
            const std::size_t stop = std::min(order.size(), start + optim.batch_size);
            std::vector<const TrainingExample*> batch;
            for (std::size_t i = start; i < stop; ++i)
                batch.push_back(&examples[order[i]]);
            LossResult lr;
            try {
                lr = loss_and_gradients(result.weights, result.layers, batch);
            } catch (const std::runtime_error& e) {
                throw std::runtime_error("training diverged at epoch " + std::to_string(epoch) + ", batch " +
                                         std::to_string(batches) + ": " + e.what());
            }
            for (std::size_t i = 0; i < vel_w.size(); ++i) {
                vel_w[i] = optim.momentum * vel_w[i] - optim.learning_rate * lr.weight_grads[i];
                result.weights.params[i].value += vel_w[i];
            }
            for (std::size_t s = 0; s < vel_h.size(); ++s) {
                vel_h[s] = optim.momentum * vel_h[s] - optim.learning_rate * lr.layer_grads[s];
                result.layers[s].class_vectors += vel_h[s];
                result.layers[s].renormalize();
            }
            loss_sum += lr.loss;
            correct += lr.correct;
            labeled += lr.labeled;
            ++batches;
        }
        EpochLog log;
        log.epoch = epoch;
        log.loss = loss_sum / batches;
        log.accuracy = labeled ? static_cast<double>(correct) / static_cast<double>(labeled) : 0.0;
        result.log.push_back(log);
    }
    return result;
}

} // namespace dff::net
