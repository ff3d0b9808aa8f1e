#include "esn/gradcheck.hpp"

#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include "esn/numkernel.hpp"

namespace esn {

namespace {

double rel_error(double analytic, double fd) {
    return std::abs(analytic - fd) / std::abs(fd);
}

void finalize(FdReport& report, double tol) {
    report.max_rel_error = 0.0;
    for (const auto& e : report.entries)
        report.max_rel_error = std::max(report.max_rel_error, e.rel_error);
    report.pass = report.max_rel_error < tol;
}

}  // namespace

std::string FdReport::to_text() const {
    std::ostringstream out;
    out << "row\tcol\tanalytic\tfd\trel_error\n";
    char buf[128];
    for (const auto& e : entries) {
        std::snprintf(buf, sizeof buf, "%zu\t%zu\t%.10e\t%.10e\t%.3e\n", e.row, e.col, e.analytic,
                      e.fd, e.rel_error);
        out << buf;
    }
    std::snprintf(buf, sizeof buf, "max_rel_error\t%.3e\tpass\t%d\n", max_rel_error,
                  pass ? 1 : 0);
    out << buf;
    if (literal_max_rel_error >= 0.0) {
        std::snprintf(buf, sizeof buf, "literal_formula_max_rel_error\t%.3e\n",
                      literal_max_rel_error);
        out << buf;
    }
    return out.str();
}

FdInstance make_fd_instance(std::size_t input_dim, std::size_t hidden_dim, std::size_t output_dim,
                            std::size_t windows, std::size_t depth, double density,
                            std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::uniform_real_distribution<double> state(0.1, 0.9);

    FdInstance inst;
    inst.depth = depth;
    inst.params.w = Matrix(input_dim, hidden_dim);
    // Strong input weights keep the unrolled states diverse enough that the
    // final-block gram matrix stays well conditioned even when the number of
    // windows barely exceeds the hidden size.
    for (double& v : inst.params.w.data()) v = 2.0 * unit(rng);

    std::vector<std::pair<std::size_t, std::size_t>> nz;
    for (std::size_t r = 0; r < hidden_dim; ++r)
        for (std::size_t c = 0; c < hidden_dim; ++c)
            if (coin(rng) < density) nz.emplace_back(r, c);
    if (nz.empty()) nz.emplace_back(0, 0);
    std::vector<double> vals(nz.size());
    for (double& v : vals) v = unit(rng);
    inst.params.w_rec =
        SparseMatrix(SparsePattern(hidden_dim, hidden_dim, std::move(nz)), std::move(vals));
    if (spectral_radius(inst.params.w_rec) > 0.0)
        inst.params.w_rec = renormalize_recurrent(inst.params.w_rec, 0.9);

    inst.params.u = Matrix(hidden_dim + input_dim, output_dim);
    for (double& v : inst.params.u.data()) v = unit(rng);

    for (std::size_t i = 0; i < depth; ++i) {
        Matrix xb(input_dim, windows);
        for (double& v : xb.data()) v = unit(rng);
        inst.x_blocks.push_back(std::move(xb));
    }
    inst.h0 = Matrix(hidden_dim, windows);
    for (double& v : inst.h0.data()) v = state(rng);
    inst.t_n = Matrix(output_dim, windows);
    for (double& v : inst.t_n.data()) v = unit(rng);
    return inst;
}

std::vector<Matrix> unroll_blocks(const Matrix& w, const SparseMatrix& w_rec,
                                  const std::vector<Matrix>& x_blocks, const Matrix& h0) {
    std::vector<Matrix> h_blocks;
    const Matrix* prev = &h0;
    for (const Matrix& xb : x_blocks) {
        Matrix pre = mul_at_b(w, xb) + w_rec.mul(*prev);
        h_blocks.push_back(sigmoid_map(pre));
        prev = &h_blocks.back();
    }
    return h_blocks;
}

ChunkSet instance_chunks(const FdInstance& inst) {
    ChunkSet chunks;
    chunks.depth = inst.depth;
    chunks.x_blocks = inst.x_blocks;
    chunks.h_blocks = unroll_blocks(inst.params.w, inst.params.w_rec, inst.x_blocks, inst.h0);
    chunks.h0 = inst.h0;
    // Only the final block's targets enter the reduced cost.
    for (std::size_t i = 0; i + 1 < inst.depth; ++i)
        chunks.t_blocks.emplace_back(inst.t_n.rows(), inst.h0.cols());
    chunks.t_blocks.push_back(inst.t_n);
    return chunks;
}

namespace {

// The FD probes difference costs that agree to many digits, so the cost is
// evaluated in extended precision to keep the quotient's noise floor well
// below the 1e-4 comparison tolerance. Instances are tiny; speed is moot.
using ExtMat = std::vector<std::vector<long double>>;

ExtMat ext_zero(std::size_t rows, std::size_t cols) {
    return ExtMat(rows, std::vector<long double>(cols, 0.0L));
}

ExtMat ext_from(const Matrix& m) {
    ExtMat out = ext_zero(m.rows(), m.cols());
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c) out[r][c] = m.at(r, c);
    return out;
}

}  // namespace

double reduced_cost(const Matrix& w, const SparseMatrix& w_rec,
                    const std::vector<Matrix>& x_blocks, const Matrix& h0, const Matrix& t_n) {
    const std::size_t h = w.cols(), k = h0.cols(), o = t_n.rows();
    const ExtMat we = ext_from(w);

    // Unroll the forward recursion.
    ExtMat hn = ext_from(h0);
    for (const Matrix& xb : x_blocks) {
        ExtMat next = ext_zero(h, k);
        for (std::size_t r = 0; r < h; ++r)
            for (std::size_t c = 0; c < k; ++c) {
                long double z = 0.0L;
                for (std::size_t d = 0; d < w.rows(); ++d) z += we[d][r] * xb.at(d, c);
                next[r][c] = z;
            }
        const auto& nz = w_rec.pattern().nonzeros();
        for (std::size_t i = 0; i < nz.size(); ++i) {
            const auto& [r, j] = nz[i];
            const long double v = w_rec.values()[i];
            for (std::size_t c = 0; c < k; ++c) next[r][c] += v * hn[j][c];
        }
        for (std::size_t r = 0; r < h; ++r)
            for (std::size_t c = 0; c < k; ++c) next[r][c] = 1.0L / (1.0L + std::exp(-next[r][c]));
        hn = std::move(next);
    }

    ExtMat gram = ext_zero(h, h);  // H H^T
    for (std::size_t r = 0; r < h; ++r)
        for (std::size_t c = 0; c < h; ++c)
            for (std::size_t j = 0; j < k; ++j) gram[r][c] += hn[r][j] * hn[c][j];
    ExtMat ht = ext_zero(h, o);  // H T^T
    for (std::size_t r = 0; r < h; ++r)
        for (std::size_t c = 0; c < o; ++c)
            for (std::size_t j = 0; j < k; ++j) ht[r][c] += hn[r][j] * t_n.at(c, j);

    // Cholesky factor of the gram matrix, then u0 = (H H^T)^{-1} H T^T.
    ExtMat l = ext_zero(h, h);
    for (std::size_t r = 0; r < h; ++r) {
        for (std::size_t c = 0; c <= r; ++c) {
            long double s = gram[r][c];
            for (std::size_t j = 0; j < c; ++j) s -= l[r][j] * l[c][j];
            if (c == r) {
                if (s <= 0.0L)
                    throw NumericError("reduced_cost: singular H H^T, regenerate the instance");
                l[r][r] = std::sqrt(s);
            } else {
                l[r][c] = s / l[c][c];
            }
        }
    }
    ExtMat u0 = ht;
    for (std::size_t c = 0; c < o; ++c) {
        for (std::size_t r = 0; r < h; ++r) {
            long double s = u0[r][c];
            for (std::size_t j = 0; j < r; ++j) s -= l[r][j] * u0[j][c];
            u0[r][c] = s / l[r][r];
        }
        for (std::size_t r = h; r-- > 0;) {
            long double s = u0[r][c];
            for (std::size_t j = r + 1; j < h; ++j) s -= l[j][r] * u0[j][c];
            u0[r][c] = s / l[r][r];
        }
    }

    // Route 1: trace identity ||T||^2 - tr((HH^T)^{-1} H T^T T H^T).
    long double tnorm2 = 0.0L;
    for (std::size_t r = 0; r < o; ++r)
        for (std::size_t c = 0; c < k; ++c) tnorm2 += (long double)t_n.at(r, c) * t_n.at(r, c);
    long double trace = 0.0L;
    for (std::size_t r = 0; r < h; ++r)
        for (std::size_t c = 0; c < o; ++c) trace += u0[r][c] * ht[r][c];
    const long double via_trace = tnorm2 - trace;

    // Route 2: residual norm with the closed-form readout substituted.
    long double via_residual = 0.0L;
    for (std::size_t r = 0; r < o; ++r)
        for (std::size_t c = 0; c < k; ++c) {
            long double s = -t_n.at(r, c);
            for (std::size_t j = 0; j < h; ++j) s += u0[j][r] * hn[j][c];
            via_residual += s * s;
        }

    // Both routes cancel terms of size ||T||^2, so that sets the error scale.
    if (std::abs((double)(via_trace - via_residual)) > 1e-9 * (1.0 + (double)tnorm2))
        throw NumericError("reduced_cost: trace and residual routes disagree");
    return (double)via_trace;
}

FdReport fd_check_input(const FdInstance& inst, double eps, double tol) {
    ChunkSet chunks = instance_chunks(inst);
    Matrix analytic = grad_input_case2_raw(chunks, inst.params, 0.0);

    FdReport report;
    Matrix w = inst.params.w;
    for (std::size_t r = 0; r < w.rows(); ++r)
        for (std::size_t c = 0; c < w.cols(); ++c) {
            const double saved = w.at(r, c);
            w.at(r, c) = saved + eps;
            const double ep = reduced_cost(w, inst.params.w_rec, inst.x_blocks, inst.h0, inst.t_n);
            w.at(r, c) = saved - eps;
            const double em = reduced_cost(w, inst.params.w_rec, inst.x_blocks, inst.h0, inst.t_n);
            w.at(r, c) = saved;
            const double fd = (ep - em) / (2.0 * eps);
            if (std::abs(fd) <= 1e-10) continue;
            report.entries.push_back({r, c, analytic.at(r, c), fd, rel_error(analytic.at(r, c), fd)});
        }
    finalize(report, tol);
    return report;
}

FdReport fd_check_recurrent(const FdInstance& inst, double eps, double tol) {
    ChunkSet chunks = instance_chunks(inst);
    Matrix analytic = grad_recurrent_raw(chunks, inst.params, 0.0);
    Matrix literal = grad_recurrent_literal(chunks, inst.params, 0.0);

    FdReport report;
    report.literal_max_rel_error = 0.0;
    SparseMatrix w_rec = inst.params.w_rec;
    for (std::size_t i = 0; i < w_rec.pattern().nnz(); ++i) {
        const auto& [r, c] = w_rec.pattern().nonzeros()[i];
        const double saved = w_rec.values()[i];
        w_rec.values()[i] = saved + eps;
        const double ep = reduced_cost(inst.params.w, w_rec, inst.x_blocks, inst.h0, inst.t_n);
        w_rec.values()[i] = saved - eps;
        const double em = reduced_cost(inst.params.w, w_rec, inst.x_blocks, inst.h0, inst.t_n);
        w_rec.values()[i] = saved;
        const double fd = (ep - em) / (2.0 * eps);
        if (std::abs(fd) <= 1e-10) continue;
        report.entries.push_back({r, c, analytic.at(r, c), fd, rel_error(analytic.at(r, c), fd)});
        report.literal_max_rel_error =
            std::max(report.literal_max_rel_error, rel_error(literal.at(r, c), fd));
    }
    finalize(report, tol);
    return report;
}

Matrix grad_recurrent_literal(const ChunkSet& chunks, const ModelParams& params, double mu) {
    const std::size_t n = chunks.depth;
    const Matrix& hn = chunks.h_blocks[n - 1];
    Matrix a = compute_A(hn, chunks.t_blocks[n - 1], mu);

    auto slope = [](const Matrix& h) {
        Matrix d(h.rows(), h.cols());
        for (std::size_t i = 0; i < h.size(); ++i)
            d.data()[i] = h.data()[i] * (1.0 - h.data()[i]);
        return d;
    };

    // Compact-form recursion: the recurrent matrix stays outside the
    // elementwise products and reappears as a power on each summand.
    // At depth 1 this matches the delta recursion exactly.
    std::vector<Matrix> c_blocks(n);
    c_blocks[n - 1] = hadamard(slope(hn), a.transpose());
    for (std::size_t i = n - 1; i-- > 0;)
        c_blocks[i] = hadamard(slope(chunks.h_blocks[i]), c_blocks[i + 1]);

    Matrix wt = params.w_rec.to_dense().transpose();
    Matrix grad(params.hidden_dim(), params.hidden_dim());
    for (std::size_t i = 1; i <= n; ++i) {
        const Matrix& h_prev = (i == 1) ? chunks.h0 : chunks.h_blocks[i - 2];
        Matrix term = c_blocks[i - 1];
        for (std::size_t p = 0; p < n - i; ++p) term = wt * term;
        grad = grad + mul_a_bt(term, h_prev);
    }
    Matrix masked(grad.rows(), grad.cols());
    for (const auto& [r, c] : params.w_rec.pattern().nonzeros()) masked.at(r, c) = -grad.at(r, c);
    return masked;
}

}  // namespace esn
