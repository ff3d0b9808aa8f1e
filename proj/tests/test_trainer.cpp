#include <cmath>
#include <random>

#include "doctest.h"
#include "esn/gradcheck.hpp"
#include "esn/numkernel.hpp"
#include "esn/trainer.hpp"

using namespace esn;

namespace {

EsnConfig small_config() {
    EsnConfig cfg;
    cfg.input_dim = 5;
    cfg.hidden_dim = 30;
    cfg.output_dim = 3;
    cfg.density = 0.2;
    cfg.washout = 10;
    cfg.bptt_depth = 2;
    cfg.seed = 9;
    return cfg;
}

}  // namespace

TEST_CASE("make_chunks strided layout for n=2") {
    StateTrajectory traj;
    traj.h = Matrix(1, 6, {0.1, 0.2, 0.3, 0.4, 0.5, 0.6});
    traj.x = Matrix(1, 6, {1, 2, 3, 4, 5, 6});
    traj.t = Matrix(1, 6, {9, 8, 7, 6, 5, 4});
    traj.h_start = Matrix(1, 1, {0.05});

    ChunkSet c = make_chunks(traj, 2);
    CHECK(c.windows() == 3);
    // X_1 = [x1 x3 x5], X_2 = [x2 x4 x6].
    CHECK(c.x_blocks[0].at(0, 0) == 1);
    CHECK(c.x_blocks[0].at(0, 1) == 3);
    CHECK(c.x_blocks[0].at(0, 2) == 5);
    CHECK(c.x_blocks[1].at(0, 0) == 2);
    CHECK(c.x_blocks[1].at(0, 1) == 4);
    CHECK(c.x_blocks[1].at(0, 2) == 6);
    // H0 = state preceding each window.
    CHECK(c.h0.at(0, 0) == 0.05);
    CHECK(c.h0.at(0, 1) == 0.2);
    CHECK(c.h0.at(0, 2) == 0.4);
}

TEST_CASE("make_chunks n=1 keeps all frames; partial windows are dropped") {
    StateTrajectory traj;
    traj.h = Matrix(1, 5, {0.1, 0.2, 0.3, 0.4, 0.5});
    traj.x = Matrix(1, 5, {1, 2, 3, 4, 5});
    traj.t = Matrix(1, 5);
    traj.h_start = Matrix(1, 1, {0.9});

    ChunkSet c1 = make_chunks(traj, 1);
    CHECK(c1.windows() == 5);
    CHECK(c1.h0.at(0, 0) == 0.9);
    CHECK(c1.h0.at(0, 1) == 0.1);

    ChunkSet c2 = make_chunks(traj, 2);
    CHECK(c2.windows() == 2);  // fifth frame dropped

    CHECK_THROWS_AS(make_chunks(traj, 6), ShapeError);
}

TEST_CASE("make_chunks interleaving reconstructs the original order") {
    StateTrajectory traj;
    traj.h = Matrix(1, 9);
    traj.x = Matrix(1, 9);
    traj.t = Matrix(1, 9);
    for (std::size_t i = 0; i < 9; ++i) {
        traj.x.at(0, i) = double(i + 1);
        traj.h.at(0, i) = 0.1 * double(i + 1);
    }
    traj.h_start = Matrix(1, 1, {0.0});

    ChunkSet c = make_chunks(traj, 3);
    for (std::size_t w = 0; w < 3; ++w)
        for (std::size_t j = 0; j < 3; ++j)
            CHECK(c.x_blocks[j].at(0, w) == traj.x.at(0, w * 3 + j));
}

TEST_CASE("make_chunks output satisfies the forward recursion") {
    EsnConfig cfg = small_config();
    ModelParams p = init_network(cfg);
    FrameDataset ds = gen_synthetic(3, 5, 120, 0.4, 2);
    auto parts = forward_dataset(p, ds, cfg.washout, 3);
    ChunkSet chunks = make_chunks(parts[0], 3);
    CHECK_NOTHROW(validate_chunks(chunks, p));
}

TEST_CASE("run_epoch fixed mode only refits the readout") {
    EsnConfig cfg = small_config();
    ModelParams p = init_network(cfg);
    ModelParams before = p;
    FrameDataset ds = gen_synthetic(3, 5, 200, 0.4, 4);
    FistaState fw, fr;
    EpochRecord row = run_epoch(p, ds, cfg, LearnMode::fixed, fw, fr);
    CHECK(p.w == before.w);
    CHECK(p.w_rec == before.w_rec);
    CHECK_FALSE(p.u == before.u);
    CHECK(row.cost > 0.0);
    CHECK(row.grad_w_norm == 0.0);
}

TEST_CASE("learn-w epoch reduces the reduced cost for small alpha") {
    EsnConfig cfg = small_config();
    FrameDataset ds = gen_synthetic(3, 5, 300, 0.4, 5);

    double alpha = 0.1;
    bool descended = false;
    for (int tries = 0; tries < 8 && !descended; ++tries, alpha /= 2) {
        EsnConfig c = cfg;
        c.alpha = alpha;
        ModelParams p = init_network(c);

        auto cost_of = [&](const ModelParams& m) {
            auto parts = forward_dataset(m, ds, c.washout, 3);
            std::vector<ChunkSet> cps;
            for (const auto& part : parts) cps.push_back(make_chunks(part, c.bptt_depth));
            ChunkSet chunks = concat_chunks(cps);
            const Matrix& hn = chunks.h_blocks[c.bptt_depth - 1];
            const Matrix& tn = chunks.t_blocks[c.bptt_depth - 1];
            Matrix gram = mul_a_bt(hn, hn);
            Matrix ht = mul_a_bt(hn, tn);
            Matrix u0 = solve_spd(gram, ht);
            Matrix residual = mul_at_b(u0, hn) - tn;
            const double r = residual.frobenius_norm();
            return r * r;
        };

        const double before = cost_of(p);
        FistaState fw, fr;
        run_epoch(p, ds, c, LearnMode::learn_w, fw, fr);
        descended = cost_of(p) < before;
    }
    CHECK(descended);
}

TEST_CASE("learn-w-wrec keeps the spectral radius and the pattern") {
    EsnConfig cfg = small_config();
    ModelParams p = init_network(cfg);
    SparsePattern pattern = p.w_rec.pattern();
    FrameDataset ds = gen_synthetic(3, 5, 200, 0.4, 6);
    FistaState fw, fr;
    for (int e = 0; e < 3; ++e) {
        EpochRecord row = run_epoch(p, ds, cfg, LearnMode::learn_w_and_wrec, fw, fr);
        CHECK(row.spectral_radius == doctest::Approx(cfg.lambda).epsilon(1e-6 / cfg.lambda));
        CHECK(p.w_rec.pattern() == pattern);
    }
}

TEST_CASE("fit: fixed mode repeats the same validation error") {
    EsnConfig cfg = small_config();
    FrameDataset train = gen_synthetic(3, 5, 200, 0.4, 7);
    FrameDataset valid = gen_synthetic(3, 5, 100, 0.4, 7, 0.5);
    FitResult r = fit(train, valid, cfg, LearnMode::fixed, 3);
    CHECK(r.report.rows.size() == 3);
    CHECK(r.report.rows[0].valid_error == r.report.rows[1].valid_error);
    CHECK(r.report.rows[1].valid_error == r.report.rows[2].valid_error);
}

TEST_CASE("fit is deterministic given the seed") {
    EsnConfig cfg = small_config();
    FrameDataset train = gen_synthetic(3, 5, 200, 0.4, 8);
    FrameDataset valid = slice_frames(train, 100, 100);
    FitResult a = fit(train, valid, cfg, LearnMode::learn_w_and_wrec, 3);
    FitResult b = fit(train, valid, cfg, LearnMode::learn_w_and_wrec, 3);
    CHECK(a.params.w == b.params.w);
    CHECK(a.params.w_rec == b.params.w_rec);
    CHECK(a.params.u == b.params.u);
    REQUIRE(a.report.rows.size() == b.report.rows.size());
    for (std::size_t i = 0; i < a.report.rows.size(); ++i)
        CHECK(TrainReport::line(a.report.rows[i]) == TrainReport::line(b.report.rows[i]));
}

TEST_CASE("evaluate spans the error range") {
    // A perfect-fit toy: one-hot inputs pass straight through the shortcut.
    ModelParams p;
    p.w = Matrix(2, 3);
    p.w_rec = SparseMatrix(SparsePattern(3, 3, {{0, 0}}), {0.0});
    p.u = Matrix(5, 2);
    p.u.at(3, 0) = 1.0;  // shortcut rows
    p.u.at(4, 1) = 1.0;

    FrameDataset ds;
    ds.frames = Matrix(2, 4, {1, 0, 1, 0, 0, 1, 0, 1});
    ds.labels = {0, 1, 0, 1};
    ds.boundaries = {0};
    ds.num_classes = 2;
    CHECK(evaluate(p, ds, 0) == 0.0);

    // Swap the readout: everything wrong.
    std::swap(p.u.at(3, 0), p.u.at(3, 1));
    std::swap(p.u.at(4, 1), p.u.at(4, 0));
    CHECK(evaluate(p, ds, 0) == 1.0);
}

TEST_CASE("evaluate: random readout on balanced classes sits at chance") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    ModelParams p;
    p.w = Matrix(4, 20);
    p.w_rec = SparseMatrix(SparsePattern(20, 20, {{0, 1}}), {0.1});
    p.u = Matrix(24, 5);
    for (std::size_t i = 0; i < p.w.rows(); ++i)
        for (std::size_t j = 0; j < p.w.cols(); ++j) p.w.at(i, j) = u(rng);
    for (std::size_t i = 0; i < p.u.rows(); ++i)
        for (std::size_t j = 0; j < p.u.cols(); ++j) p.u.at(i, j) = u(rng);

    FrameDataset ds;
    const std::size_t frames = 5000;
    ds.frames = Matrix(4, frames);
    ds.labels.resize(frames);
    ds.boundaries = {0};
    ds.num_classes = 5;
    for (std::size_t t = 0; t < frames; ++t) {
        for (std::size_t r = 0; r < 4; ++r) ds.frames.at(r, t) = u(rng);
        ds.labels[t] = t % 5;  // balanced, independent of the features
    }
    const double err = evaluate(p, ds, 0);
    CHECK(err > 0.75);
    CHECK(err < 0.85);
}

TEST_CASE("report lines are tab-delimited with a header") {
    CHECK(TrainReport::header().find("epoch\tcost") == 0);
    EpochRecord row;
    row.epoch = 2;
    row.cost = 1.5;
    std::string line = TrainReport::line(row);
    CHECK(line.substr(0, 2) == "2\t");
    CHECK(line.find("1.5") != std::string::npos);
}

TEST_CASE("parse_mode round trip") {
    for (auto m : {LearnMode::fixed, LearnMode::learn_w, LearnMode::learn_w_and_wrec})
        CHECK(parse_mode(mode_name(m)) == m);
    CHECK_THROWS_AS(parse_mode("bogus"), DataError);
}
