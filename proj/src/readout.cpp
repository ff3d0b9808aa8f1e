#include "esn/readout.hpp"

#include <string>

#include "esn/numkernel.hpp"

namespace esn {

DesignMatrix build_design(const StateTrajectory& traj) {
    if (traj.h.cols() != traj.x.cols())
        throw ShapeError("build_design: state/input column counts differ");
    const std::size_t h = traj.h.rows(), d = traj.x.rows(), n = traj.h.cols();
    Matrix hc(h + d, n);
    for (std::size_t r = 0; r < h; ++r)
        for (std::size_t c = 0; c < n; ++c) hc.at(r, c) = traj.h.at(r, c);
    for (std::size_t r = 0; r < d; ++r)
        for (std::size_t c = 0; c < n; ++c) hc.at(h + r, c) = traj.x.at(r, c);
    return DesignMatrix{std::move(hc), h};
}

Matrix train_readout(const DesignMatrix& design, const Matrix& targets, double mu) {
    const Matrix& hc = design.hc;
    if (mu < 0.0) throw DataError("train_readout: mu must be non-negative");
    if (targets.cols() != hc.cols())
        throw ShapeError("train_readout: design/target column counts differ");
    hc.check_finite("train_readout design");
    targets.check_finite("train_readout targets");

    Matrix gram = mul_a_bt(hc, hc);
    for (std::size_t i = 0; i < gram.rows(); ++i) gram.at(i, i) += mu;
    Matrix rhs = mul_a_bt(hc, targets);  // Hc T^T
    try {
        return solve_spd(gram, rhs);
    } catch (const NumericError& e) {
        if (mu == 0.0)
            throw NumericError(std::string("train_readout: normal equations singular at mu=0; "
                                           "use a positive ridge term (") + e.what() + ")");
        throw;
    }
}

double cost(const Matrix& u, const DesignMatrix& design, const Matrix& targets) {
    Matrix residual = mul_at_b(u, design.hc) - targets;
    const double f = residual.frobenius_norm();
    return f * f;
}

}  // namespace esn
