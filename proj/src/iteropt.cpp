// Copyright 2026 The GeMuCo Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "gemuco/iteropt.hpp"

#include <omp.h>

#include <cmath>

namespace gemuco {

void IterConfig::validate() const {
  if (gamma_max <= 0.0) throw std::invalid_argument("IterConfig: gamma_max <= 0");
  if (n_batch < 2) throw std::invalid_argument("IterConfig: n_batch < 2");
  if (iterations < 0) throw std::invalid_argument("IterConfig: iterations < 0");
}

void LossSpec::validate(const GeMuCoModel& m) const {
  if (terms.empty()) throw std::invalid_argument("LossSpec: at least one term");
  for (const LossTerm& t : terms) {
    std::visit(
        [&](const auto& term) {
          using T = std::decay_t<decltype(term)>;
          if (term.weight < 0.0) {
            throw std::invalid_argument("LossSpec: negative weight");
          }
          if constexpr (std::is_same_v<T, TargetMatchTerm>) {
            if (term.out_group < 0 ||
                term.out_group >= m.out_layout.group_count()) {
              throw std::invalid_argument("LossSpec: bad TargetMatch group");
            }
            const int gd = m.out_layout.dim(term.out_group);
            if (term.map) {
              if (term.map->cols() != gd || term.map->rows() != term.target.size()) {
                throw std::invalid_argument("LossSpec: TargetMatch map shape");
              }
            } else if (term.target.size() != gd) {
              throw std::invalid_argument("LossSpec: TargetMatch target dim");
            }
          } else if constexpr (std::is_same_v<T, MagnitudeTerm>) {
            if (term.out_group < 0 ||
                term.out_group >= m.out_layout.group_count()) {
              throw std::invalid_argument("LossSpec: bad Magnitude group");
            }
          } else if constexpr (std::is_same_v<T, InputDeviationTerm>) {
            if (term.in_group < 0 || term.in_group >= m.n_sensor_in()) {
              throw std::invalid_argument("LossSpec: bad InputDeviation group");
            }
            if (term.reference.size() != m.in_layout.dim(term.in_group)) {
              throw std::invalid_argument("LossSpec: InputDeviation ref dim");
            }
          } else if constexpr (std::is_same_v<T, TorqueBalanceTerm>) {
            if (term.angle_in_group < 0 || term.angle_in_group >= m.n_sensor_in()) {
              throw std::invalid_argument("LossSpec: bad TorqueBalance angle group");
            }
            if (term.tension_out_group < 0 ||
                term.tension_out_group >= m.out_layout.group_count() ||
                term.length_out_group < 0 ||
                term.length_out_group >= m.out_layout.group_count()) {
              throw std::invalid_argument("LossSpec: bad TorqueBalance out group");
            }
            if (term.tau_ext.size() != m.in_layout.dim(term.angle_in_group)) {
              throw std::invalid_argument("LossSpec: TorqueBalance tau dim");
            }
          }
        },
        t);
  }
}

namespace {

// Prediction for one candidate under the given variable mode.
Vector predict_candidate(const GeMuCoModel& m, const Vector& candidate,
                         const IterConfig& cfg, const OptContext& ctx,
                         ModelTrace* trace = nullptr) {
  switch (cfg.variable) {
    case OptVariable::kLatent:
      if (trace) {
        trace->mask = ctx.mask;
        return forward(m.dec_spec, m.dec_w, candidate, &trace->dec);
      }
      return decode(m, candidate);
    case OptVariable::kInput:
      return trace ? predict_traced(m, candidate, ctx.mask, ctx.pb, trace)
                   : predict(m, candidate, ctx.mask, ctx.pb);
    case OptVariable::kPb:
      return trace ? predict_traced(m, ctx.x_in_norm, ctx.mask, candidate, trace)
                   : predict(m, ctx.x_in_norm, ctx.mask, candidate);
    case OptVariable::kWeights: {
      // Candidate is [enc | dec] flattened.
      GeMuCoModel tmp = m;
      const std::vector<double> flat(candidate.data(),
                                     candidate.data() + candidate.size());
      const std::size_t enc_n = m.enc_w.flatten().size();
      tmp.enc_w = Weights::unflatten(
          m.enc_spec, std::vector<double>(flat.begin(), flat.begin() + enc_n));
      tmp.dec_w = Weights::unflatten(
          m.dec_spec, std::vector<double>(flat.begin() + enc_n, flat.end()));
      return trace ? predict_traced(tmp, ctx.x_in_norm, ctx.mask, ctx.pb, trace)
                   : predict(tmp, ctx.x_in_norm, ctx.mask, ctx.pb);
    }
  }
  throw std::logic_error("predict_candidate: bad variable");
}

// Input point at which the torque-balance jacobian is evaluated: the current
// x_in with predictions substituted for groups that are both inputs and
// outputs.
Vector tb_eval_point(const GeMuCoModel& m, const Vector& x_in,
                     const Vector& pred) {
  Vector x = x_in;
  for (int gi = 0; gi < m.n_sensor_in(); ++gi) {
    const int ug = m.in_groups[gi];
    for (int go = 0; go < m.out_layout.group_count(); ++go) {
      if (m.out_groups[go] == ug) {
        x.segment(m.in_layout.offset(gi), m.in_layout.dim(gi)) =
            pred.segment(m.out_layout.offset(go), m.out_layout.dim(go));
        break;
      }
    }
  }
  return x;
}

double torque_balance_value(const GeMuCoModel& m, const TorqueBalanceTerm& t,
                            const Vector& pred, const Vector& x_in,
                            const Vector& pb) {
  const Vector point = tb_eval_point(m, x_in, pred);
  std::vector<int> l_chans, th_chans;
  for (int c = 0; c < m.out_layout.dim(t.length_out_group); ++c) {
    l_chans.push_back(m.out_layout.offset(t.length_out_group) + c);
  }
  for (int c = 0; c < m.in_layout.dim(t.angle_in_group); ++c) {
    th_chans.push_back(m.in_layout.offset(t.angle_in_group) + c);
  }
  Mask all_visible(m.n_sensor_in(), 1);
  const Matrix g = model_jacobian(m, point, all_visible, pb, l_chans, th_chans);
  const Vector f =
      pred.segment(m.out_layout.offset(t.tension_out_group),
                   m.out_layout.dim(t.tension_out_group));
  const Vector residual = t.tau_ext + g.transpose() * f;
  return t.weight * residual.squaredNorm();
}

struct EvalParts {
  double analytic = 0.0;  // terms with analytic gradients
  double tb = 0.0;        // torque-balance terms
};

EvalParts eval_parts(const GeMuCoModel& m, const Vector& candidate,
                     const LossSpec& loss, const IterConfig& cfg,
                     const OptContext& ctx, const Vector& pred) {
  EvalParts parts;
  const Vector& x_in_cur =
      cfg.variable == OptVariable::kInput ? candidate : ctx.x_in_norm;
  const Vector& pb_cur = cfg.variable == OptVariable::kPb ? candidate : ctx.pb;
  for (const LossTerm& t : loss.terms) {
    std::visit(
        [&](const auto& term) {
          using T = std::decay_t<decltype(term)>;
          if constexpr (std::is_same_v<T, TargetMatchTerm>) {
            const auto p = pred.segment(m.out_layout.offset(term.out_group),
                                        m.out_layout.dim(term.out_group));
            const Vector r =
                term.map ? Vector(*term.map * p - term.target)
                         : Vector(p - term.target);
            parts.analytic += term.weight * r.squaredNorm();
          } else if constexpr (std::is_same_v<T, MagnitudeTerm>) {
            parts.analytic +=
                term.weight * pred.segment(m.out_layout.offset(term.out_group),
                                           m.out_layout.dim(term.out_group))
                                  .squaredNorm();
          } else if constexpr (std::is_same_v<T, InputDeviationTerm>) {
            const auto c = x_in_cur.segment(m.in_layout.offset(term.in_group),
                                            m.in_layout.dim(term.in_group));
            parts.analytic += term.weight * (c - term.reference).squaredNorm();
          } else if constexpr (std::is_same_v<T, TorqueBalanceTerm>) {
            parts.tb += torque_balance_value(m, term, pred, x_in_cur, pb_cur);
          }
        },
        t);
  }
  return parts;
}

bool has_torque_balance(const LossSpec& loss) {
  for (const LossTerm& t : loss.terms) {
    if (std::holds_alternative<TorqueBalanceTerm>(t)) return true;
  }
  return false;
}

double tb_only(const GeMuCoModel& m, const Vector& candidate,
               const LossSpec& loss, const IterConfig& cfg,
               const OptContext& ctx) {
  const Vector pred = predict_candidate(m, candidate, cfg, ctx);
  const Vector& x_in_cur =
      cfg.variable == OptVariable::kInput ? candidate : ctx.x_in_norm;
  const Vector& pb_cur = cfg.variable == OptVariable::kPb ? candidate : ctx.pb;
  double v = 0.0;
  for (const LossTerm& t : loss.terms) {
    if (const auto* tb = std::get_if<TorqueBalanceTerm>(&t)) {
      v += torque_balance_value(m, *tb, pred, x_in_cur, pb_cur);
    }
  }
  return v;
}

// Gradient of the analytic terms wrt the prediction, plus (input mode) the
// direct InputDeviation contribution wrt the candidate.
void analytic_gradients(const GeMuCoModel& m, const Vector& candidate,
                        const LossSpec& loss, const IterConfig& cfg,
                        const OptContext& ctx, const Vector& pred,
                        Vector* dloss_dpred, Vector* dloss_dcand_direct) {
  dloss_dpred->setZero(m.out_dim());
  for (const LossTerm& t : loss.terms) {
    std::visit(
        [&](const auto& term) {
          using T = std::decay_t<decltype(term)>;
          if constexpr (std::is_same_v<T, TargetMatchTerm>) {
            const int off = m.out_layout.offset(term.out_group);
            const int dim = m.out_layout.dim(term.out_group);
            const auto p = pred.segment(off, dim);
            if (term.map) {
              const Vector r = *term.map * p - term.target;
              dloss_dpred->segment(off, dim) +=
                  2.0 * term.weight * (term.map->transpose() * r);
            } else {
              dloss_dpred->segment(off, dim) +=
                  2.0 * term.weight * (p - term.target);
            }
          } else if constexpr (std::is_same_v<T, MagnitudeTerm>) {
            const int off = m.out_layout.offset(term.out_group);
            const int dim = m.out_layout.dim(term.out_group);
            dloss_dpred->segment(off, dim) +=
                2.0 * term.weight * pred.segment(off, dim);
          } else if constexpr (std::is_same_v<T, InputDeviationTerm>) {
            if (cfg.variable == OptVariable::kInput && dloss_dcand_direct) {
              const int off = m.in_layout.offset(term.in_group);
              const int dim = m.in_layout.dim(term.in_group);
              dloss_dcand_direct->segment(off, dim) +=
                  2.0 * term.weight *
                  (candidate.segment(off, dim) - term.reference);
            }
          }
          // TorqueBalance handled numerically.
        },
        t);
  }
}

Vector gradient_impl(const GeMuCoModel& m, const Vector& v, const LossSpec& loss,
                     const IterConfig& cfg, const OptContext& ctx) {
  ModelTrace trace;
  const Vector pred = predict_candidate(m, v, cfg, ctx, &trace);
  Vector dpred, direct = Vector::Zero(v.size());
  analytic_gradients(m, v, loss, cfg, ctx, pred, &dpred,
                     cfg.variable == OptVariable::kInput ? &direct : nullptr);

  Vector grad;
  switch (cfg.variable) {
    case OptVariable::kLatent: {
      Weights scratch = zeros_like(m.dec_spec);
      grad = backward_accumulate(m.dec_spec, m.dec_w, trace.dec, dpred, scratch);
      break;
    }
    case OptVariable::kInput: {
      ModelGrads g = model_backward(m, trace, dpred);
      grad = g.x_in + direct;
      break;
    }
    case OptVariable::kPb: {
      ModelGrads g = model_backward(m, trace, dpred);
      grad = g.pb;
      break;
    }
    case OptVariable::kWeights: {
      GeMuCoModel tmp = m;
      const std::vector<double> flat(v.data(), v.data() + v.size());
      const std::size_t enc_n = m.enc_w.flatten().size();
      tmp.enc_w = Weights::unflatten(
          m.enc_spec, std::vector<double>(flat.begin(), flat.begin() + enc_n));
      tmp.dec_w = Weights::unflatten(
          m.dec_spec, std::vector<double>(flat.begin() + enc_n, flat.end()));
      ModelTrace wtrace;
      predict_traced(tmp, ctx.x_in_norm, ctx.mask, ctx.pb, &wtrace);
      ModelGrads g = model_backward(tmp, wtrace, dpred);
      const auto ef = g.enc_w.flatten();
      const auto df = g.dec_w.flatten();
      grad.resize(ef.size() + df.size());
      for (std::size_t i = 0; i < ef.size(); ++i) grad[i] = ef[i];
      for (std::size_t i = 0; i < df.size(); ++i) grad[enc_n + i] = df[i];
      break;
    }
  }

  // Torque-balance terms: central finite differences of the composed
  // expression, which re-linearizes the jacobian at every probe.
  if (has_torque_balance(loss)) {
    const double h = 1e-4;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      Vector vp = v, vm = v;
      vp[i] += h;
      vm[i] -= h;
      const double fp = tb_only(m, vp, loss, cfg, ctx);
      const double fm = tb_only(m, vm, loss, cfg, ctx);
      grad[i] += (fp - fm) / (2.0 * h);
    }
  }

  // Frozen input channels never move.
  if (cfg.variable == OptVariable::kInput) {
    for (int idx : cfg.frozen_input_channels) {
      if (idx < 0 || idx >= grad.size()) {
        throw std::invalid_argument("optimize: frozen channel out of bounds");
      }
      grad[idx] = 0.0;
    }
  }
  return grad;
}

void check_init(const GeMuCoModel& m, const Vector& init, const IterConfig& cfg,
                const OptContext& ctx) {
  switch (cfg.variable) {
    case OptVariable::kLatent:
      if (init.size() != m.latent_dim) {
        throw std::invalid_argument("optimize: latent init width mismatch");
      }
      break;
    case OptVariable::kInput:
      if (init.size() != m.in_dim()) {
        throw std::invalid_argument("optimize: input init width mismatch");
      }
      break;
    case OptVariable::kPb:
      if (init.size() != m.pb_dim) {
        throw std::invalid_argument("optimize: pb init width mismatch");
      }
      break;
    case OptVariable::kWeights: {
      const std::size_t n = m.enc_w.flatten().size() + m.dec_w.flatten().size();
      if (static_cast<std::size_t>(init.size()) != n) {
        throw std::invalid_argument("optimize: weights init width mismatch");
      }
      break;
    }
  }
  if (!init.allFinite()) {
    throw std::invalid_argument("optimize: non-finite init");
  }
  if (cfg.variable != OptVariable::kLatent || !ctx.x_in_norm.size()) {
    // Context x_in/mask are required by every mode except pure latent
    // decoding without torque terms; keep the checks where they matter.
  }
}

}  // namespace

double eval_loss(const GeMuCoModel& m, const Vector& candidate,
                 const LossSpec& loss, const IterConfig& cfg,
                 const OptContext& ctx) {
  const Vector pred = predict_candidate(m, candidate, cfg, ctx);
  const EvalParts parts = eval_parts(m, candidate, loss, cfg, ctx, pred);
  return parts.analytic + parts.tb;
}

Vector opt_gradient(const GeMuCoModel& m, const Vector& v, const LossSpec& loss,
                    const IterConfig& cfg, const OptContext& ctx) {
  return gradient_impl(m, v, loss, cfg, ctx);
}

OptResult optimize(const GeMuCoModel& m, const Vector& init,
                   const LossSpec& loss, const IterConfig& cfg,
                   const OptContext& ctx) {
  cfg.validate();
  loss.validate(m);
  check_init(m, init, cfg, ctx);

  // pb mode with no parametric bias is a no-op.
  if (cfg.variable == OptVariable::kPb && m.pb_dim == 0) {
    OptResult r;
    r.value = init;
    r.loss_trajectory.assign(1, eval_loss(m, init, loss, cfg, ctx));
    r.x_out_norm = predict_candidate(m, init, cfg, ctx);
    return r;
  }

  Vector v = init;
  OptResult result;
  result.loss_trajectory.reserve(cfg.iterations + 1);
  {
    const double l0 = eval_loss(m, v, loss, cfg, ctx);
    if (!std::isfinite(l0)) throw OptError("optimize: non-finite loss at init", 0);
    result.loss_trajectory.push_back(l0);
  }

  // The grid spans [0, scale] uniformly; scale starts at gamma_max and is
  // refined between iterations: a winning zero step means every candidate
  // overshot, so the grid contracts, while a win at the far end lets it grow
  // back toward gamma_max.
  double scale = cfg.gamma_max;
  const double min_scale = cfg.gamma_max * 0x1p-40;

  std::vector<Vector> candidates(cfg.n_batch);
  std::vector<double> losses(cfg.n_batch);
  for (int it = 1; it <= cfg.iterations; ++it) {
    Vector g = gradient_impl(m, v, loss, cfg, ctx);
    if (!g.allFinite()) {
      throw OptError("optimize: non-finite gradient at iteration " +
                         std::to_string(it),
                     it);
    }
    candidates[0] = v;  // gamma = 0 keeps the current value bit-identical
    for (int j = 1; j < cfg.n_batch; ++j) {
      const double gamma = scale * static_cast<double>(j) / (cfg.n_batch - 1);
      candidates[j] = v - gamma * g;
    }
    if (cfg.exec == Exec::kParallel) {
      const int nthreads = std::max(1, std::min(thread_count(), cfg.n_batch));
#pragma omp parallel for num_threads(nthreads) schedule(static)
      for (int j = 0; j < cfg.n_batch; ++j) {
        losses[j] = eval_loss(m, candidates[j], loss, cfg, ctx);
      }
    } else {
      for (int j = 0; j < cfg.n_batch; ++j) {
        losses[j] = eval_loss(m, candidates[j], loss, cfg, ctx);
      }
    }
    int best = 0;
    for (int j = 0; j < cfg.n_batch; ++j) {
      if (!std::isfinite(losses[j])) {
        throw OptError("optimize: non-finite candidate loss at iteration " +
                           std::to_string(it),
                       it);
      }
      if (losses[j] < losses[best]) best = j;
    }
    v = candidates[best];
    result.loss_trajectory.push_back(losses[best]);
    if (best == 0) {
      scale = std::max(0.25 * scale, min_scale);
    } else if (best == cfg.n_batch - 1) {
      scale = std::min(2.0 * scale, cfg.gamma_max);
    }
  }

  result.value = v;
  result.x_out_norm = predict_candidate(m, v, cfg, ctx);
  return result;
}

}  // namespace gemuco
