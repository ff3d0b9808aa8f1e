#pragma once

#include <cstddef>
#include <cstdint>

#include "esn/matrix.hpp"

namespace esn {

// All hyperparameters of a run. lambda < 4 is the sigmoid echo-state bound.
struct EsnConfig {
    std::size_t input_dim = 0;   // d
    std::size_t hidden_dim = 0;  // h
    std::size_t output_dim = 0;  // o
    double lambda = 3.9;         // target spectral radius of W_rec
    double mu = 1e-8;            // ridge term for the readout solve
    double alpha = 0.07;         // gradient step size
    std::size_t bptt_depth = 1;  // truncation depth n
    std::size_t washout = 50;    // i_trans
    double density = 0.02;       // expected nonzero fraction of W_rec
    double input_scale = 0.1;
    double clip_threshold = 10.0;
    std::uint64_t seed = 1;

    void validate() const;  // throws DataError on out-of-range values
};

// Learned state of a model: input weights W (d x h), sparse recurrent
// weights W_rec (h x h), readout U ((h+d) x o, input shortcut included).
struct ModelParams {
    Matrix w;              // input weights
    SparseMatrix w_rec;    // recurrent weights, pattern frozen at init
    Matrix u;              // readout, zero until the first closed-form solve

    std::size_t input_dim() const { return w.rows(); }
    std::size_t hidden_dim() const { return w.cols(); }
    std::size_t output_dim() const { return u.cols(); }
};

// Post-washout record of one forward pass.
struct StateTrajectory {
    Matrix h;        // h x N hidden states, all entries in (0,1)
    Matrix x;        // d x N inputs aligned with h
    Matrix t;        // o x N targets aligned with h
    Matrix h_start;  // h x 1, the state immediately preceding h's first column

    std::size_t frames() const { return h.cols(); }
};

// Random W and W_rec per the seed; W_rec renormalized to spectral radius
// cfg.lambda; U zeroed (solved in closed form before first use).
ModelParams init_network(const EsnConfig& cfg);

// Scales w by lambda / spectral_radius(w). Pattern unchanged.
SparseMatrix renormalize_recurrent(const SparseMatrix& w, double lambda);

// Iterates h_{i+1} = sigmoid(W^T x_{i+1} + W_rec h_i), discards the first
// `washout` steps, and records the remaining states alongside their inputs
// and targets. x_seq is d x (washout + N), t_seq is o x (washout + N).
StateTrajectory forward_pass(const ModelParams& params, const Matrix& x_seq, const Matrix& t_seq,
                             std::size_t washout, const Matrix& h_init);

}  // namespace esn
