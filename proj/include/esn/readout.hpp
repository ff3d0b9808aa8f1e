#pragma once

#include "esn/matrix.hpp"
#include "esn/reservoir.hpp"

namespace esn {

// Hidden states stacked over the raw inputs: Hc = [H; X], (h+d) x N.
struct DesignMatrix {
    Matrix hc;
    std::size_t hidden_rows = 0;  // h, rows above the input shortcut block
};

DesignMatrix build_design(const StateTrajectory& traj);

// Closed-form ridge readout: U = (Hc Hc^T + mu I)^{-1} Hc T^T.
// With mu = 0 this is the plain normal-equations solution.
Matrix train_readout(const DesignMatrix& design, const Matrix& targets, double mu);

// Squared-error cost ||U^T Hc - T||_F^2.
double cost(const Matrix& u, const DesignMatrix& design, const Matrix& targets);

}  // namespace esn
