#pragma once

#include "dff/image.hpp"

#include "Eigen/Core"

#include <cstdint>
#include <string>
#include <vector>

namespace dff::net {

/**
 * Encoder-decoder layout. `channels` has depth + 1 entries: the width of
 * each resolution level, finest first. Each encoder level is a 3x3 conv;
 * levels are joined by stride-2 2x2 convs going down and 2x2 transposed
 * convs going up, and every decoder level concatenates the encoder map of
 * the same resolution before its 3x3 conv. A 1x1 head maps to feature_dim.
 */
struct NetConfig
{
    int height = 64;
    int width = 64;
    int feature_dim = 32;
    int depth = 2;
    std::vector<int> channels{16, 32, 32};
    std::uint64_t seed = 1;

    void validate() const;
    bool operator==(const NetConfig&) const = default;
};

struct Param
{
    std::string name;
    Eigen::MatrixXd value;
};

/// Parameters in a fixed order determined by the config (see layer_names()).
struct NetWeights
{
    NetConfig config;
    std::vector<Param> params;

    std::size_t scalar_count() const;
};

/// Ordered layer names for a config, e.g. enc0, down1, enc1, ..., up1, dec0, head.
std::vector<std::string> layer_names(const NetConfig& config);

/// He-normal kernels and zero biases, deterministic in config.seed.
NetWeights init_weights(const NetConfig& config);

/// Same shapes as init_weights, every entry zero.
NetWeights zero_weights(const NetConfig& config);

/// Unit descriptors, stored feature-major: column y * width + x holds pixel (x, y).
struct FeatureMap
{
    int width = 0;
    int height = 0;
    Eigen::MatrixXd features; // dim x (height * width)

    int dim() const { return static_cast<int>(features.rows()); }
    Eigen::VectorXd at(int x, int y) const { return features.col(static_cast<Eigen::Index>(y) * width + x); }
};

/// Class vectors of one segmentation's classifier: K x D, unit rows.
struct LossLayerParams
{
    Eigen::MatrixXd class_vectors;

    int patch_count() const { return static_cast<int>(class_vectors.rows()); }
    void renormalize();
};

LossLayerParams init_loss_layer(int patch_count, int feature_dim, std::uint64_t seed);

/// Descriptors whose pre-normalization norm falls below this become e_1.
inline constexpr double kNormGuard = 1e-12;

/// Throws std::invalid_argument when the image size differs from the config.
FeatureMap forward(const NetWeights& weights, const RgbImage& image);

/**
 * Mean over labeled pixels of -log softmax_j(h_j . f_p) at the pixel's
 * label. Returns 0 when no pixel is labeled.
 */
double angular_softmax_loss(const FeatureMap& fmap, const LabelMap& labels, const LossLayerParams& layer);

struct TrainingExample
{
    RgbImage image;
    std::vector<LabelMap> labels; // one per segmentation
};

struct LossResult
{
    double loss = 0.0;
    std::vector<Eigen::MatrixXd> weight_grads; // parallel to NetWeights::params
    std::vector<Eigen::MatrixXd> layer_grads;  // parallel to the loss layers
    long long correct = 0;                     // argmax_j h_j . f_p == label
    long long labeled = 0;
};

/**
 * Batch loss = mean over examples of the weighted sum over segmentations of
 * angular_softmax_loss, with exact reverse-mode gradients for every network
 * parameter and class vector. `segment_weights` defaults to all ones.
 *
 * @throws std::runtime_error on a non-finite loss, naming the first non-finite parameter.
 */
LossResult loss_and_gradients(const NetWeights& weights, const std::vector<LossLayerParams>& layers,
                              const std::vector<const TrainingExample*>& batch,
                              const std::vector<double>& segment_weights = {});

/// Loss only (no gradients), same definition as loss_and_gradients.
double batch_loss(const NetWeights& weights, const std::vector<LossLayerParams>& layers,
                  const std::vector<const TrainingExample*>& batch, const std::vector<double>& segment_weights = {});

struct OptimConfig
{
    double learning_rate = 0.1;
    double momentum = 0.9;
    int batch_size = 4;
    std::uint64_t seed = 1;
};

struct EpochLog
{
    int epoch = 0; ///< 0 is the evaluation before any update
    double loss = 0.0;
    double accuracy = 0.0;

    bool operator==(const EpochLog&) const = default;
};

struct TrainResult
{
    NetWeights weights;
    std::vector<LossLayerParams> layers;
    std::vector<EpochLog> log;
};

/**
 * Mini-batch SGD with momentum over shuffled examples. Class vectors are
 * projected back to unit rows after every step. Deterministic for a fixed
 * config and optimizer seed.
 *
 * @throws std::runtime_error when the loss becomes non-finite, with epoch and batch index.
 */
TrainResult train(const NetConfig& config, const std::vector<TrainingExample>& examples,
                  const std::vector<int>& patch_counts, int epochs, const OptimConfig& optim);

/// Mean loss and pixel accuracy over a set of examples.
EpochLog evaluate(const NetWeights& weights, const std::vector<LossLayerParams>& layers,
                  const std::vector<TrainingExample>& examples);

/**
 * Bilinear blend of the four neighbouring descriptors, renormalized.
 * Integer locations return the stored vector unchanged; locations outside
 * [0, width-1] x [0, height-1] return the zero vector.
 */
Eigen::VectorXd sample_feature(const FeatureMap& fmap, double x, double y);

} // namespace dff::net
