#pragma once

#include <string>
#include <vector>

#include "esn/dataio.hpp"
#include "esn/gradients.hpp"
#include "esn/matrix.hpp"
#include "esn/optimizer.hpp"
#include "esn/reservoir.hpp"

namespace esn {

enum class LearnMode { fixed, learn_w, learn_w_and_wrec };

LearnMode parse_mode(const std::string& name);  // "fixed" | "learn-w" | "learn-w-wrec"
std::string mode_name(LearnMode mode);

struct EpochRecord {
    std::size_t epoch = 0;
    double cost = 0.0;
    double train_error = 0.0;
    double valid_error = 0.0;
    double grad_w_norm = 0.0;
    double grad_wrec_norm = 0.0;
    bool clipped_w = false;
    bool clipped_wrec = false;
    double spectral_radius = 0.0;
    double wall_time_s = 0.0;  // informational; kept out of the report lines
};

struct TrainReport {
    std::vector<EpochRecord> rows;

    // Tab-delimited, one epoch per line. Deterministic: wall time excluded.
    static std::string header();
    static std::string line(const EpochRecord& row);
};

// Eq.-style strided chunking: block j of n collects frame j of every
// complete length-n window; the trailing partial window is dropped.
ChunkSet make_chunks(const StateTrajectory& traj, std::size_t n);

// Forward passes over every utterance of a dataset (washout applied per
// utterance; utterances not longer than the washout are skipped) and the
// column-wise concatenation of the results.
std::vector<StateTrajectory> forward_dataset(const ModelParams& params, const FrameDataset& ds,
                                             std::size_t washout, std::size_t num_classes);
StateTrajectory concat_trajectories(const std::vector<StateTrajectory>& parts);
ChunkSet concat_chunks(const std::vector<ChunkSet>& parts);

// One pass of the training loop: gradient updates per mode, recurrent
// renormalization, fresh forward pass, closed-form readout refit, metrics.
EpochRecord run_epoch(ModelParams& params, const FrameDataset& train, const EsnConfig& cfg,
                      LearnMode mode, FistaState& fista_w, FistaState& fista_wrec);

struct FitResult {
    ModelParams params;  // validation-best checkpoint
    TrainReport report;
    double best_valid_error = 1.0;
};

FitResult fit(const FrameDataset& train, const FrameDataset& valid, const EsnConfig& cfg,
              LearnMode mode, std::size_t epochs);

// Post-washout frame error rate, argmax of U^T [h; x] against the labels.
double evaluate(const ModelParams& params, const FrameDataset& ds, std::size_t washout);

}  // namespace esn
