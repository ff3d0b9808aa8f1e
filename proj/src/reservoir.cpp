#include "esn/reservoir.hpp"

#include <cmath>
#include <random>
#include <string>

#include "esn/numkernel.hpp"

namespace esn {

void EsnConfig::validate() const {
    if (input_dim == 0 || hidden_dim == 0 || output_dim == 0)
        throw DataError("EsnConfig: dimensions must be positive");
    if (!(lambda > 0.0) || lambda >= 4.0)
        throw DataError("EsnConfig: lambda must lie in (0, 4) for sigmoid reservoirs");
    if (mu < 0.0) throw DataError("EsnConfig: mu must be non-negative");
    if (!(alpha > 0.0)) throw DataError("EsnConfig: alpha must be positive");
    if (bptt_depth == 0) throw DataError("EsnConfig: bptt_depth must be at least 1");
    if (!(density > 0.0) || density > 1.0) throw DataError("EsnConfig: density must be in (0, 1]");
    if (density * static_cast<double>(hidden_dim) < 1.0)
        throw DataError("EsnConfig: density*hidden_dim below one nonzero per row on average");
    if (!(clip_threshold > 0.0)) throw DataError("EsnConfig: clip_threshold must be positive");
    if (!(input_scale > 0.0)) throw DataError("EsnConfig: input_scale must be positive");
}

ModelParams init_network(const EsnConfig& cfg) {
    cfg.validate();
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> input_unit(-cfg.input_scale, cfg.input_scale);
    std::uniform_real_distribution<double> signed_unit(-1.0, 1.0);
    std::uniform_real_distribution<double> coin(0.0, 1.0);

    Matrix w(cfg.input_dim, cfg.hidden_dim);
    for (double& v : w.data()) v = input_unit(rng);

    std::vector<std::pair<std::size_t, std::size_t>> nz;
    for (std::size_t r = 0; r < cfg.hidden_dim; ++r)
        for (std::size_t c = 0; c < cfg.hidden_dim; ++c)
            if (coin(rng) < cfg.density) nz.emplace_back(r, c);
    if (nz.empty())
        throw DataError("init_network: sampled recurrent matrix has no nonzeros; "
                        "spectral radius target unachievable (raise density)");
    std::vector<double> vals(nz.size());
    for (double& v : vals) v = signed_unit(rng);

    SparseMatrix w_rec(SparsePattern(cfg.hidden_dim, cfg.hidden_dim, std::move(nz)),
                       std::move(vals));
    w_rec = renormalize_recurrent(w_rec, cfg.lambda);

    Matrix u(cfg.hidden_dim + cfg.input_dim, cfg.output_dim);
    return ModelParams{std::move(w), std::move(w_rec), std::move(u)};
}

SparseMatrix renormalize_recurrent(const SparseMatrix& w, double lambda) {
    const double radius = spectral_radius(w);
    if (radius <= 0.0)
        throw NumericError("renormalize_recurrent: zero spectral radius, cannot rescale");
    SparseMatrix scaled = w;
    scaled.scale(lambda / radius);
    return scaled;
}

StateTrajectory forward_pass(const ModelParams& params, const Matrix& x_seq, const Matrix& t_seq,
                             std::size_t washout, const Matrix& h_init) {
    const std::size_t d = params.input_dim();
    const std::size_t h = params.hidden_dim();
    if (x_seq.rows() != d) throw ShapeError("forward_pass: input row count != input_dim");
    if (t_seq.cols() != x_seq.cols()) throw ShapeError("forward_pass: input/target length mismatch");
    if (h_init.rows() != h || h_init.cols() != 1)
        throw ShapeError("forward_pass: h_init must be hidden_dim x 1");
    const std::size_t total = x_seq.cols();
    if (total <= washout)
        throw ShapeError("forward_pass: sequence length " + std::to_string(total) +
                         " not longer than washout " + std::to_string(washout));
    const std::size_t n = total - washout;

    // One big W^T X product up front; the recurrence itself is sequential.
    Matrix wtx = mul_at_b(params.w, x_seq);

    StateTrajectory traj;
    traj.h = Matrix(h, n);
    traj.x = Matrix(d, n);
    traj.t = Matrix(t_seq.rows(), n);
    traj.h_start = h_init;

    Matrix state = h_init;
    Matrix pre(h, 1);
    for (std::size_t i = 0; i < total; ++i) {
        Matrix rec = params.w_rec.mul(state);
        for (std::size_t r = 0; r < h; ++r) pre.at(r, 0) = wtx.at(r, i) + rec.at(r, 0);
        state = sigmoid_map(pre);
        if (i >= washout) {
            const std::size_t k = i - washout;
            for (std::size_t r = 0; r < h; ++r) traj.h.at(r, k) = state.at(r, 0);
            for (std::size_t r = 0; r < d; ++r) traj.x.at(r, k) = x_seq.at(r, i);
            for (std::size_t r = 0; r < t_seq.rows(); ++r) traj.t.at(r, k) = t_seq.at(r, i);
        } else if (i + 1 == washout) {
            traj.h_start = state;
        }
    }
    return traj;
}

}  // namespace esn
