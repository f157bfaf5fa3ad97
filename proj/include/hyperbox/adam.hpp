#pragma once

#include <cmath>

#include "hyperbox/model.hpp"

namespace hyperbox {

struct AdamConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  ModelGrads m;  // first moments
  ModelGrads v;  // second moments
  long long step = 0;
};

inline AdamState make_adam_state(const ModelParams& params) {
  return AdamState{zeros_like(params), zeros_like(params), 0};
}

// Standard Adam update with bias correction. Deterministic given inputs.
inline void adam_step(ModelParams& params, const ModelGrads& grads,
                      AdamState& state, const AdamConfig& cfg) {
  state.step += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));

  auto update = [&](auto& p, const auto& g, auto& m, auto& v) {
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.cwiseProduct(g);
    p.array() -=
        cfg.learning_rate * (m.array() / bc1) / ((v.array() / bc2).sqrt() + cfg.epsilon);
  };
  update(params.phi_base, grads.phi_base, state.m.phi_base, state.v.phi_base);
  update(params.phi_bump, grads.phi_bump, state.m.phi_bump, state.v.phi_bump);
  update(params.head_box.corner_p, grads.head_box.corner_p,
         state.m.head_box.corner_p, state.v.head_box.corner_p);
  update(params.head_box.corner_q, grads.head_box.corner_q,
         state.m.head_box.corner_q, state.v.head_box.corner_q);
  update(params.tail_box.corner_p, grads.tail_box.corner_p,
         state.m.tail_box.corner_p, state.v.tail_box.corner_p);
  update(params.tail_box.corner_q, grads.tail_box.corner_q,
         state.m.tail_box.corner_q, state.v.tail_box.corner_q);
}

}  // namespace hyperbox
