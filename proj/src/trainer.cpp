#include "esn/trainer.hpp"

#include <chrono>
#include <cstdio>
#include <string>

#include "esn/numkernel.hpp"
#include "esn/readout.hpp"

namespace esn {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<double> masked_values(const Matrix& dense, const SparsePattern& pattern) {
    std::vector<double> out;
    out.reserve(pattern.nnz());
    for (const auto& [r, c] : pattern.nonzeros()) out.push_back(dense.at(r, c));
    return out;
}

}  // namespace

LearnMode parse_mode(const std::string& name) {
    if (name == "fixed") return LearnMode::fixed;
    if (name == "learn-w") return LearnMode::learn_w;
    if (name == "learn-w-wrec") return LearnMode::learn_w_and_wrec;
    throw DataError("unknown mode '" + name + "' (expected fixed, learn-w or learn-w-wrec)");
}

std::string mode_name(LearnMode mode) {
    switch (mode) {
        case LearnMode::fixed: return "fixed";
        case LearnMode::learn_w: return "learn-w";
        case LearnMode::learn_w_and_wrec: return "learn-w-wrec";
    }
    return "?";
}

std::string TrainReport::header() {
    return "epoch\tcost\ttrain_error\tvalid_error\tgrad_w_norm\tgrad_wrec_norm\t"
           "clipped_w\tclipped_wrec\tspectral_radius";
}

std::string TrainReport::line(const EpochRecord& row) {
    return std::to_string(row.epoch) + '\t' + fmt(row.cost) + '\t' + fmt(row.train_error) + '\t' +
           fmt(row.valid_error) + '\t' + fmt(row.grad_w_norm) + '\t' + fmt(row.grad_wrec_norm) +
           '\t' + (row.clipped_w ? "1" : "0") + '\t' + (row.clipped_wrec ? "1" : "0") + '\t' +
           fmt(row.spectral_radius);
}

ChunkSet make_chunks(const StateTrajectory& traj, std::size_t n) {
    const std::size_t frames = traj.frames();
    if (n == 0) throw DataError("make_chunks: depth must be at least 1");
    if (frames < n)
        throw ShapeError("make_chunks: " + std::to_string(frames) + " frames < depth " +
                         std::to_string(n));
    const std::size_t k = frames / n;  // complete windows only
    const std::size_t h = traj.h.rows(), d = traj.x.rows(), o = traj.t.rows();

    ChunkSet chunks;
    chunks.depth = n;
    chunks.h0 = Matrix(h, k);
    for (std::size_t j = 0; j < n; ++j) {
        Matrix xb(d, k), hb(h, k), tb(o, k);
        for (std::size_t w = 0; w < k; ++w) {
            const std::size_t col = w * n + j;
            for (std::size_t r = 0; r < d; ++r) xb.at(r, w) = traj.x.at(r, col);
            for (std::size_t r = 0; r < h; ++r) hb.at(r, w) = traj.h.at(r, col);
            for (std::size_t r = 0; r < o; ++r) tb.at(r, w) = traj.t.at(r, col);
        }
        chunks.x_blocks.push_back(std::move(xb));
        chunks.h_blocks.push_back(std::move(hb));
        chunks.t_blocks.push_back(std::move(tb));
    }
    for (std::size_t w = 0; w < k; ++w) {
        if (w == 0) {
            for (std::size_t r = 0; r < h; ++r) chunks.h0.at(r, 0) = traj.h_start.at(r, 0);
        } else {
            const std::size_t col = w * n - 1;  // state preceding the window
            for (std::size_t r = 0; r < h; ++r) chunks.h0.at(r, w) = traj.h.at(r, col);
        }
    }
    return chunks;
}

std::vector<StateTrajectory> forward_dataset(const ModelParams& params, const FrameDataset& ds,
                                             std::size_t washout, std::size_t num_classes) {
    Matrix targets = one_hot_targets(ds, num_classes);
    Matrix h_init(params.hidden_dim(), 1);
    std::vector<StateTrajectory> parts;
    for (std::size_t u = 0; u < ds.boundaries.size(); ++u) {
        const std::size_t begin = ds.boundaries[u];
        const std::size_t end = (u + 1 < ds.boundaries.size()) ? ds.boundaries[u + 1] : ds.size();
        if (end - begin <= washout) continue;  // too short to survive the washout
        Matrix x(ds.feature_dim(), end - begin), t(num_classes, end - begin);
        for (std::size_t c = begin; c < end; ++c) {
            for (std::size_t r = 0; r < ds.feature_dim(); ++r)
                x.at(r, c - begin) = ds.frames.at(r, c);
            for (std::size_t r = 0; r < num_classes; ++r)
                t.at(r, c - begin) = targets.at(r, c);
        }
        parts.push_back(forward_pass(params, x, t, washout, h_init));
    }
    if (parts.empty()) throw DataError("forward_dataset: every utterance shorter than the washout");
    return parts;
}

StateTrajectory concat_trajectories(const std::vector<StateTrajectory>& parts) {
    if (parts.empty()) throw ShapeError("concat_trajectories: no parts");
    std::size_t total = 0;
    for (const auto& p : parts) total += p.frames();
    StateTrajectory out;
    out.h = Matrix(parts[0].h.rows(), total);
    out.x = Matrix(parts[0].x.rows(), total);
    out.t = Matrix(parts[0].t.rows(), total);
    out.h_start = parts[0].h_start;
    std::size_t at = 0;
    for (const auto& p : parts) {
        for (std::size_t c = 0; c < p.frames(); ++c, ++at) {
            for (std::size_t r = 0; r < out.h.rows(); ++r) out.h.at(r, at) = p.h.at(r, c);
            for (std::size_t r = 0; r < out.x.rows(); ++r) out.x.at(r, at) = p.x.at(r, c);
            for (std::size_t r = 0; r < out.t.rows(); ++r) out.t.at(r, at) = p.t.at(r, c);
        }
    }
    return out;
}

ChunkSet concat_chunks(const std::vector<ChunkSet>& parts) {
    if (parts.empty()) throw ShapeError("concat_chunks: no parts");
    const std::size_t n = parts[0].depth;
    std::size_t total = 0;
    for (const auto& p : parts) {
        if (p.depth != n) throw ShapeError("concat_chunks: depth mismatch");
        total += p.windows();
    }
    ChunkSet out;
    out.depth = n;
    const std::size_t h = parts[0].h0.rows();
    out.h0 = Matrix(h, total);
    for (std::size_t j = 0; j < n; ++j) {
        Matrix xb(parts[0].x_blocks[j].rows(), total);
        Matrix hb(h, total);
        Matrix tb(parts[0].t_blocks[j].rows(), total);
        std::size_t at = 0;
        for (const auto& p : parts) {
            for (std::size_t w = 0; w < p.windows(); ++w, ++at) {
                for (std::size_t r = 0; r < xb.rows(); ++r) xb.at(r, at) = p.x_blocks[j].at(r, w);
                for (std::size_t r = 0; r < h; ++r) hb.at(r, at) = p.h_blocks[j].at(r, w);
                for (std::size_t r = 0; r < tb.rows(); ++r) tb.at(r, at) = p.t_blocks[j].at(r, w);
            }
        }
        out.x_blocks.push_back(std::move(xb));
        out.h_blocks.push_back(std::move(hb));
        out.t_blocks.push_back(std::move(tb));
    }
    std::size_t at = 0;
    for (const auto& p : parts)
        for (std::size_t w = 0; w < p.windows(); ++w, ++at)
            for (std::size_t r = 0; r < h; ++r) out.h0.at(r, at) = p.h0.at(r, w);
    return out;
}

namespace {

double frame_error_from(const Matrix& u, const StateTrajectory& traj) {
    const std::size_t h = traj.h.rows(), d = traj.x.rows(), o = traj.t.rows();
    std::size_t wrong = 0;
    for (std::size_t c = 0; c < traj.frames(); ++c) {
        std::size_t best = 0;
        double best_y = -1e300;
        for (std::size_t j = 0; j < o; ++j) {
            double y = 0.0;
            for (std::size_t r = 0; r < h; ++r) y += u.at(r, j) * traj.h.at(r, c);
            for (std::size_t r = 0; r < d; ++r) y += u.at(h + r, j) * traj.x.at(r, c);
            if (y > best_y) { best_y = y; best = j; }
        }
        std::size_t truth = 0;
        for (std::size_t j = 0; j < o; ++j)
            if (traj.t.at(j, c) == 1.0) truth = j;
        if (best != truth) ++wrong;
    }
    return static_cast<double>(wrong) / static_cast<double>(traj.frames());
}

}  // namespace

EpochRecord run_epoch(ModelParams& params, const FrameDataset& train, const EsnConfig& cfg,
                      LearnMode mode, FistaState& fista_w, FistaState& fista_wrec) {
    const auto t0 = std::chrono::steady_clock::now();
    EpochRecord row;

    if (mode != LearnMode::fixed) {
        // Gradients come from the pre-update forward pass; W and W_rec are
        // both updated against it before the pass is repeated.
        std::vector<StateTrajectory> parts =
            forward_dataset(params, train, cfg.washout, cfg.output_dim);
        std::vector<ChunkSet> chunk_parts;
        chunk_parts.reserve(parts.size());
        for (const auto& p : parts) chunk_parts.push_back(make_chunks(p, cfg.bptt_depth));
        ChunkSet chunks = concat_chunks(chunk_parts);

        // One A-matrix and one delta backprop serve both weight gradients;
        // neither depends on the readout or on the updated W.
        const Matrix a =
            compute_A(chunks.h_blocks[chunks.depth - 1], chunks.t_blocks[chunks.depth - 1], cfg.mu);
        const std::vector<Matrix> deltas = backprop_deltas(chunks, params.w_rec, a.transpose());

        GradReport gw = clip_gradient(grad_input_from_deltas(chunks, deltas), cfg.clip_threshold);
        row.grad_w_norm = gw.raw_norm;
        row.clipped_w = gw.clipped;
        const double beta_w = momentum_coefficient(fista_w);
        update_weights(params.w.data(), gw.grad.data(), fista_w, cfg.alpha, beta_w);
        params.w.check_finite("run_epoch: W after update");

        if (mode == LearnMode::learn_w_and_wrec) {
            GradReport gr = clip_gradient(
                grad_recurrent_from_deltas(chunks, deltas, params.w_rec.pattern()),
                cfg.clip_threshold);
            row.grad_wrec_norm = gr.raw_norm;
            row.clipped_wrec = gr.clipped;
            std::vector<double> grad_vals = masked_values(gr.grad, params.w_rec.pattern());
            const double beta_r = momentum_coefficient(fista_wrec);
            update_weights(params.w_rec.values(), grad_vals, fista_wrec, cfg.alpha, beta_r);
            params.w_rec = renormalize_recurrent(params.w_rec, cfg.lambda);
        }
    }

    std::vector<StateTrajectory> parts =
        forward_dataset(params, train, cfg.washout, cfg.output_dim);
    StateTrajectory traj = concat_trajectories(parts);
    DesignMatrix design = build_design(traj);
    params.u = train_readout(design, traj.t, cfg.mu);

    row.cost = cost(params.u, design, traj.t);
    row.train_error = frame_error_from(params.u, traj);
    row.spectral_radius = spectral_radius(params.w_rec);
    row.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return row;
}

FitResult fit(const FrameDataset& train, const FrameDataset& valid, const EsnConfig& cfg,
              LearnMode mode, std::size_t epochs) {
    if (epochs == 0) throw DataError("fit: epochs must be at least 1");
    ModelParams params = init_network(cfg);
    FistaState fista_w, fista_wrec;

    FitResult result;
    result.best_valid_error = 2.0;  // above any reachable error rate
    for (std::size_t e = 1; e <= epochs; ++e) {
        EpochRecord row = run_epoch(params, train, cfg, mode, fista_w, fista_wrec);
        row.epoch = e;
        row.valid_error = evaluate(params, valid, cfg.washout);
        if (row.valid_error < result.best_valid_error) {
            result.best_valid_error = row.valid_error;
            result.params = params;
        }
        result.report.rows.push_back(row);
    }
    return result;
}

double evaluate(const ModelParams& params, const FrameDataset& ds, std::size_t washout) {
    std::vector<StateTrajectory> parts =
        forward_dataset(params, ds, washout, params.output_dim());
    StateTrajectory traj = concat_trajectories(parts);
    return frame_error_from(params.u, traj);
}

}  // namespace esn
