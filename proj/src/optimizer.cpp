#include "esn/optimizer.hpp"

#include <cmath>

#include "esn/error.hpp"

namespace esn {

double momentum_coefficient(FistaState& state) {
    state.m_old = state.m_new;
    state.m_new = (1.0 + std::sqrt(1.0 + 4.0 * state.m_old * state.m_old)) / 2.0;
    return state.m_old / state.m_new;
}

void update_weights(std::vector<double>& param, const std::vector<double>& grad,
                    FistaState& state, double alpha, double beta) {
    if (param.size() != grad.size()) throw ShapeError("update_weights: param/grad size mismatch");
    if (state.has_prev() && state.prev_param.size() != param.size())
        throw ShapeError("update_weights: stale momentum state");
    for (double g : grad)
        if (!std::isfinite(g)) throw NumericError("update_weights: non-finite gradient");

    std::vector<double> current = param;
    for (std::size_t i = 0; i < param.size(); ++i) {
        const double momentum = state.has_prev() ? beta * (current[i] - state.prev_param[i]) : 0.0;
        param[i] = current[i] - alpha * grad[i] + momentum;
    }
    state.prev_param = std::move(current);
}

}  // namespace esn
