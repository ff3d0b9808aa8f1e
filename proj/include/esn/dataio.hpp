#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "esn/matrix.hpp"
#include "esn/reservoir.hpp"

namespace esn {

// Feature frames with one integer class label each. Blank lines in the text
// format mark utterance boundaries; `boundaries` lists the frame index where
// each utterance starts (first entry is always 0).
struct FrameDataset {
    Matrix frames;  // feature_dim x N
    std::vector<std::size_t> labels;
    std::vector<std::size_t> boundaries;
    std::size_t num_classes = 0;

    std::size_t size() const { return labels.size(); }
    std::size_t feature_dim() const { return frames.rows(); }
};

// Text frame format: one frame per line, feature columns then the label,
// blank line between utterances. 17 significant digits on save.
FrameDataset load_frames(const std::string& path);
void save_frames(const FrameDataset& ds, const std::string& path);

// Replaces each frame by the concatenation of its (width-1)/2 neighbours on
// each side, replicating edge frames at utterance boundaries. width must be
// odd; labels and frame count are unchanged.
FrameDataset window_context(const FrameDataset& ds, std::size_t width);

// Seeded Markov-chain classification task (self-transition 0.9). Emission is
// the class mean plus Gaussian noise plus memory_strength times the previous
// frame's class mean, so some frames need temporal state to classify.
FrameDataset gen_synthetic(std::size_t num_classes, std::size_t feature_dim, std::size_t length,
                           double memory_strength, std::uint64_t seed, double noise_sigma = 0.5);

// Contiguous sub-dataset [begin, begin+count), re-based as a single utterance.
FrameDataset slice_frames(const FrameDataset& ds, std::size_t begin, std::size_t count);

// One-hot targets, num_classes x N.
Matrix one_hot_targets(const FrameDataset& ds, std::size_t num_classes);

// Binary model file, magic "ESN1", little-endian 64-bit floats.
void save_model(const ModelParams& params, double lambda, double mu, const std::string& path);
struct LoadedModel {
    ModelParams params;
    double lambda = 0.0;
    double mu = 0.0;
};
LoadedModel load_model(const std::string& path);

}  // namespace esn
