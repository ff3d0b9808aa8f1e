#include "esn/gradients.hpp"

#include <cmath>
#include <string>

#include "esn/numkernel.hpp"

namespace esn {

namespace {

// D = H o (1 - H), the sigmoid derivative expressed in the states.
Matrix sigmoid_slope(const Matrix& h) {
    Matrix d(h.rows(), h.cols());
    for (std::size_t i = 0; i < h.size(); ++i) {
        const double v = h.data()[i];
        d.data()[i] = v * (1.0 - v);
    }
    return d;
}

void check_chunks(const ChunkSet& chunks) {
    if (chunks.depth == 0 || chunks.x_blocks.size() != chunks.depth ||
        chunks.h_blocks.size() != chunks.depth || chunks.t_blocks.size() != chunks.depth)
        throw ShapeError("ChunkSet: block count does not match depth");
    const std::size_t k = chunks.windows();
    for (std::size_t i = 0; i < chunks.depth; ++i)
        if (chunks.x_blocks[i].cols() != k || chunks.h_blocks[i].cols() != k ||
            chunks.t_blocks[i].cols() != k)
            throw ShapeError("ChunkSet: inconsistent window count in block " + std::to_string(i));
}

Matrix mask_to_pattern(const Matrix& g, const SparsePattern& pattern) {
    Matrix masked(g.rows(), g.cols());
    for (const auto& [r, c] : pattern.nonzeros()) masked.at(r, c) = g.at(r, c);
    return masked;
}

}  // namespace

Matrix compute_A(const Matrix& hn, const Matrix& tn, double mu) {
    if (hn.cols() != tn.cols()) throw ShapeError("compute_A: H/T column counts differ");
    Matrix gram = mul_a_bt(hn, hn);  // H H^T
    for (std::size_t i = 0; i < gram.rows(); ++i) gram.at(i, i) += mu;
    // Both terms factor through F = (H H^T + mu I)^{-1}, which is symmetric,
    // so every solve keeps at most h right-hand-side columns.
    Matrix ht = mul_a_bt(hn, tn);  // H T^T, h x o
    Matrix p, q;
    try {
        p = solve_spd(gram, ht);              // F H T^T, h x o
        q = solve_spd(gram, ht * p.transpose());  // F H T^T T H^T F, h x h
    } catch (const NumericError& e) {
        throw NumericError(std::string("compute_A: Gram solve failed, increase mu (") + e.what() +
                           ")");
    }
    Matrix tg = p.transpose();          // T H^T F, o x h
    Matrix term1 = 2.0 * mul_at_b(tn, tg);
    Matrix term2 = 2.0 * mul_at_b(hn, q);
    return term1 - term2;
}

std::vector<Matrix> backprop_deltas(const ChunkSet& chunks, const SparseMatrix& w_rec,
                                    const Matrix& seed) {
    check_chunks(chunks);
    const Matrix& hn = chunks.h_blocks[chunks.depth - 1];
    if (seed.rows() != hn.rows() || seed.cols() != hn.cols())
        throw ShapeError("backprop_deltas: seed must match the final hidden block");

    std::vector<Matrix> deltas(chunks.depth);
    deltas[chunks.depth - 1] = hadamard(sigmoid_slope(hn), seed);
    for (std::size_t i = chunks.depth - 1; i-- > 0;) {
        Matrix carried = w_rec.mul_transposed(deltas[i + 1]);
        deltas[i] = hadamard(sigmoid_slope(chunks.h_blocks[i]), carried);
    }
    return deltas;
}

Matrix grad_input_case1(const ChunkSet& chunks, const ModelParams& params) {
    check_chunks(chunks);
    const Matrix& hn = chunks.h_blocks[chunks.depth - 1];
    const Matrix& xn = chunks.x_blocks[chunks.depth - 1];
    const Matrix& tn = chunks.t_blocks[chunks.depth - 1];
    const std::size_t h = params.hidden_dim(), d = params.input_dim(), o = params.output_dim();
    if (params.u.rows() != h + d) throw ShapeError("grad_input_case1: readout shape mismatch");

    // Residual of the frozen readout on the final block, shortcut included.
    const std::size_t k = hn.cols();
    Matrix residual(o, k);
    for (std::size_t j = 0; j < o; ++j)
        for (std::size_t c = 0; c < k; ++c) {
            double s = -tn.at(j, c);
            for (std::size_t r = 0; r < h; ++r) s += params.u.at(r, j) * hn.at(r, c);
            for (std::size_t r = 0; r < d; ++r) s += params.u.at(h + r, j) * xn.at(r, c);
            residual.at(j, c) = s;
        }

    // Seed 2 U_h R, the cost derivative w.r.t. the hidden block only.
    Matrix seed(h, k);
    for (std::size_t r = 0; r < h; ++r)
        for (std::size_t c = 0; c < k; ++c) {
            double s = 0.0;
            for (std::size_t j = 0; j < o; ++j) s += params.u.at(r, j) * residual.at(j, c);
            seed.at(r, c) = 2.0 * s;
        }

    std::vector<Matrix> deltas = backprop_deltas(chunks, params.w_rec, seed);
    Matrix grad(d, h);
    for (std::size_t i = 0; i < chunks.depth; ++i)
        grad = grad + mul_a_bt(chunks.x_blocks[i], deltas[i]);
    return grad;
}

Matrix grad_input_from_deltas(const ChunkSet& chunks, const std::vector<Matrix>& deltas) {
    if (deltas.size() != chunks.depth)
        throw ShapeError("grad_input_from_deltas: delta count does not match depth");
    // Reduced cost is ||T||^2 minus the trace term A differentiates, hence
    // the sign flip relative to the deltas.
    Matrix grad(chunks.x_blocks[0].rows(), chunks.h_blocks[0].rows());
    for (std::size_t i = 0; i < chunks.depth; ++i)
        grad = grad - mul_a_bt(chunks.x_blocks[i], deltas[i]);
    return grad;
}

Matrix grad_recurrent_from_deltas(const ChunkSet& chunks, const std::vector<Matrix>& deltas,
                                  const SparsePattern& pattern) {
    if (deltas.size() != chunks.depth)
        throw ShapeError("grad_recurrent_from_deltas: delta count does not match depth");
    Matrix grad(chunks.h_blocks[0].rows(), chunks.h_blocks[0].rows());
    for (std::size_t i = 0; i < chunks.depth; ++i) {
        const Matrix& h_prev = (i == 0) ? chunks.h0 : chunks.h_blocks[i - 1];
        grad = grad - mul_a_bt(deltas[i], h_prev);
    }
    return mask_to_pattern(grad, pattern);
}

Matrix grad_input_case2_raw(const ChunkSet& chunks, const ModelParams& params, double mu) {
    check_chunks(chunks);
    const Matrix& hn = chunks.h_blocks[chunks.depth - 1];
    const Matrix& tn = chunks.t_blocks[chunks.depth - 1];
    Matrix a = compute_A(hn, tn, mu);
    std::vector<Matrix> deltas = backprop_deltas(chunks, params.w_rec, a.transpose());
    return grad_input_from_deltas(chunks, deltas);
}

GradReport grad_input_case2(const ChunkSet& chunks, const ModelParams& params, double mu,
                            double clip_threshold) {
    return clip_gradient(grad_input_case2_raw(chunks, params, mu), clip_threshold);
}

Matrix grad_recurrent_raw(const ChunkSet& chunks, const ModelParams& params, double mu) {
    check_chunks(chunks);
    if (chunks.h0.rows() != params.hidden_dim())
        throw ShapeError("grad_recurrent: missing or misshapen H0 block");
    const Matrix& hn = chunks.h_blocks[chunks.depth - 1];
    const Matrix& tn = chunks.t_blocks[chunks.depth - 1];
    Matrix a = compute_A(hn, tn, mu);
    std::vector<Matrix> deltas = backprop_deltas(chunks, params.w_rec, a.transpose());
    return grad_recurrent_from_deltas(chunks, deltas, params.w_rec.pattern());
}

GradReport grad_recurrent(const ChunkSet& chunks, const ModelParams& params, double mu,
                          double clip_threshold) {
    return clip_gradient(grad_recurrent_raw(chunks, params, mu), clip_threshold);
}

GradReport clip_gradient(const Matrix& g, double threshold) {
    if (!(threshold > 0.0)) throw DataError("clip_gradient: threshold must be positive");
    g.check_finite("clip_gradient");
    const double norm = g.frobenius_norm();
    if (norm <= threshold) return GradReport{g, norm, false};
    return GradReport{(threshold / norm) * g, norm, true};
}

void validate_chunks(const ChunkSet& chunks, const ModelParams& params, double tol) {
    check_chunks(chunks);
    for (std::size_t i = 0; i < chunks.depth; ++i) {
        const Matrix& h_prev = (i == 0) ? chunks.h0 : chunks.h_blocks[i - 1];
        Matrix pre = mul_at_b(params.w, chunks.x_blocks[i]) + params.w_rec.mul(h_prev);
        Matrix expect = sigmoid_map(pre);
        if ((expect - chunks.h_blocks[i]).max_abs() > tol)
            throw NumericError("validate_chunks: block " + std::to_string(i + 1) +
                               " inconsistent with the forward recursion");
    }
}

}  // namespace esn
