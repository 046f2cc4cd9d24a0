#pragma once

#include "dff/align.hpp"
#include "dff/face_model.hpp"
#include "dff/net.hpp"
#include "dff/renderer.hpp"
#include "dff/segmentation.hpp"
#include "dff/tensor_io.hpp"

#include <string>
#include <vector>

namespace dff::io {

void put_model(TensorContainer& c, const face::MorphableModel& model);
face::MorphableModel get_model(const TensorContainer& c);

void put_network(TensorContainer& c, const net::NetWeights& weights, const std::vector<net::LossLayerParams>& layers);
net::NetWeights get_weights(const TensorContainer& c);
std::vector<net::LossLayerParams> get_loss_layers(const TensorContainer& c);

void put_segmentations(TensorContainer& c, const std::vector<seg::Segmentation>& bank);
std::vector<seg::Segmentation> get_segmentations(const TensorContainer& c);

/// Stages as RX_k, bX_k, Rw_k, bw_k plus a u32 header (D, stage count, 68, 160).
void put_cascade(TensorContainer& c, const std::vector<align::DescentStage>& stages, int feature_dim);
std::vector<align::DescentStage> get_cascade(const TensorContainer& c);

/// Images, parameters and annotations of rendered samples (images as 8-bit levels).
void put_samples(TensorContainer& c, const std::vector<render::RenderedSample>& samples);
std::vector<render::RenderedSample> get_samples(const TensorContainer& c);

void put_provenance(TensorContainer& c, const std::string& text);

} // namespace dff::io
