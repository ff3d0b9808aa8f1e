#pragma once

#include <vector>

#include "esn/matrix.hpp"
#include "esn/reservoir.hpp"

namespace esn {

// Strided blocks of a trajectory for truncation depth n: block i holds the
// i-th frame of every length-n window. All blocks share the window count K.
// h0 holds the state that precedes each window.
struct ChunkSet {
    std::size_t depth = 0;          // n
    std::vector<Matrix> x_blocks;   // n matrices, d x K
    std::vector<Matrix> h_blocks;   // n matrices, h x K
    std::vector<Matrix> t_blocks;   // n matrices, o x K
    Matrix h0;                      // h x K

    std::size_t windows() const { return h0.cols(); }
};

struct GradReport {
    Matrix grad;
    double raw_norm = 0.0;
    bool clipped = false;
};

// Derivative of tr((H H^T)^{-1} H T^T T H^T) with respect to H^T, K x h.
// mu stabilizes the Gram inverse; the formula itself assumes mu = 0.
Matrix compute_A(const Matrix& hn, const Matrix& tn, double mu);

// Sensitivities of the final-block seed propagated back through the window:
// delta_n = D_n o seed, delta_i = D_i o (W_rec^T delta_{i+1}), with
// D_i = H_i o (1 - H_i). Returned in block order 1..n, each h x K.
// `seed` is the h x K column-form sensitivity at block n (e.g. A^T).
std::vector<Matrix> backprop_deltas(const ChunkSet& chunks, const SparseMatrix& w_rec,
                                    const Matrix& seed);

// Case 1: gradient of the cost with the readout held fixed, d x h.
Matrix grad_input_case1(const ChunkSet& chunks, const ModelParams& params);

// Case 2: gradient of the reduced cost (readout eliminated in closed form)
// with respect to the input weights, d x h. Unclipped.
Matrix grad_input_case2_raw(const ChunkSet& chunks, const ModelParams& params, double mu);
GradReport grad_input_case2(const ChunkSet& chunks, const ModelParams& params, double mu,
                            double clip_threshold);

// Gradient of the reduced cost with respect to the recurrent weights,
// masked to the sparsity pattern (off-pattern entries are zero).
Matrix grad_recurrent_raw(const ChunkSet& chunks, const ModelParams& params, double mu);
GradReport grad_recurrent(const ChunkSet& chunks, const ModelParams& params, double mu,
                          double clip_threshold);

// Gradient assembly from already-propagated deltas; lets one backprop pass
// serve both weight matrices when an epoch updates them together.
Matrix grad_input_from_deltas(const ChunkSet& chunks, const std::vector<Matrix>& deltas);
Matrix grad_recurrent_from_deltas(const ChunkSet& chunks, const std::vector<Matrix>& deltas,
                                  const SparsePattern& pattern);

// Frobenius-norm renormalization of an oversized gradient.
GradReport clip_gradient(const Matrix& g, double threshold);

// Checks that the chunk blocks satisfy the forward recursion from h0.
void validate_chunks(const ChunkSet& chunks, const ModelParams& params, double tol = 1e-12);

}  // namespace esn
