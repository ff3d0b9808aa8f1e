#pragma once

#include <utility>
#include <vector>

#include "esn/matrix.hpp"

namespace esn {

// Momentum bookkeeping for one learned parameter block.
// The scalar sequence starts at m_old = m_new = 1.
struct FistaState {
    double m_old = 1.0;
    double m_new = 1.0;
    std::vector<double> prev_param;  // flat copy of the previous iterate

    bool has_prev() const { return !prev_param.empty(); }
};

// Advances the scalar sequence one step and returns the momentum coefficient
// beta = m_old / m_new with m_new = (1 + sqrt(1 + 4 m_old^2)) / 2.
double momentum_coefficient(FistaState& state);

// Three-term update p <- p - alpha*grad + beta*(p - p_prev), applied to the
// flat value vectors. Stores the pre-update iterate for the next call.
// On the first call (no previous iterate) the momentum term is zero.
void update_weights(std::vector<double>& param, const std::vector<double>& grad,
                    FistaState& state, double alpha, double beta);

}  // namespace esn
