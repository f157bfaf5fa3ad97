#pragma once

// Core HyperBox model: words are points obtained by projecting pretrained
// embeddings, the hypernymy relation is a pair of axis-aligned boxes, and a
// pair is scored by how far its two pair-relative points fall from their
// boxes. Lower score = more plausible hypernymy.

#include <Eigen/Core>

#include <cmath>
#include <stdexcept>
#include <string>

namespace hyperbox {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// A box is stored as two free corner vectors. Lower/upper boundaries are
// derived by elementwise min/max, so l <= u holds by construction and the
// corners can be optimized without constraints.
struct BoxParams {
  Vec corner_p;
  Vec corner_q;
};

struct BoxGeometry {
  Vec lower;
  Vec upper;
  Vec center;  // (upper + lower) / 2
  Vec width;   // upper - lower + 1, so every component >= 1
};

struct ModelParams {
  Mat phi_base;  // d x m
  Mat phi_bump;  // d x m
  BoxParams head_box;  // box for the hyponym (first-argument) point
  BoxParams tail_box;  // box for the hypernym (second-argument) point

  Eigen::Index dim_d() const { return phi_base.rows(); }
  Eigen::Index dim_m() const { return phi_base.cols(); }
};

// Gradients and optimizer moments share the parameter layout.
using ModelGrads = ModelParams;

// Pair-relative points for h(w_i, w_j): each word's base position bumped by
// the other word's bump vector.
struct PairPoints {
  Vec head_point;  // base(e_i) + bump(e_j)
  Vec tail_point;  // base(e_j) + bump(e_i)
};

inline Vec project(const Mat& phi, const Vec& e) {
  if (phi.cols() != e.size()) {
    throw std::invalid_argument("project: matrix is " +
                                std::to_string(phi.rows()) + "x" +
                                std::to_string(phi.cols()) +
                                " but embedding has length " +
                                std::to_string(e.size()));
  }
  return phi * e;
}

inline PairPoints pair_points(const Vec& e_i, const Vec& e_j,
                              const ModelParams& params) {
  PairPoints pts;
  pts.head_point = project(params.phi_base, e_i) + project(params.phi_bump, e_j);
  pts.tail_point = project(params.phi_base, e_j) + project(params.phi_bump, e_i);
  return pts;
}

inline BoxGeometry box_geometry(const BoxParams& box) {
  BoxGeometry g;
  g.lower = box.corner_p.cwiseMin(box.corner_q);
  g.upper = box.corner_p.cwiseMax(box.corner_q);
  g.center = 0.5 * (g.upper + g.lower);
  g.width = (g.upper - g.lower).array() + 1.0;
  return g;
}

inline double box_kappa(double width) {
  return 0.5 * (width - 1.0) * (width - 1.0 / width);
}

// Piecewise distance, chosen independently per dimension. Inside the box
// (boundary included) the distance shrinks with width; outside it grows with
// width, with kappa subtracted so both branches meet at the boundary.
inline Vec box_distance(const Vec& point, const BoxGeometry& geom) {
  if (point.size() != geom.center.size()) {
    throw std::invalid_argument("box_distance: point has length " +
                                std::to_string(point.size()) + ", box has " +
                                std::to_string(geom.center.size()));
  }
  Vec dist(point.size());
  for (Eigen::Index j = 0; j < point.size(); ++j) {
    const double a = std::abs(point[j] - geom.center[j]);
    const double w = geom.width[j];
    if (geom.lower[j] <= point[j] && point[j] <= geom.upper[j]) {
      dist[j] = a / w;
    } else {
      dist[j] = a * w - box_kappa(w);
    }
  }
  return dist;
}

inline double score_pair(const Vec& e_i, const Vec& e_j,
                         const ModelParams& params) {
  const PairPoints pts = pair_points(e_i, e_j, params);
  return box_distance(pts.head_point, box_geometry(params.head_box)).norm() +
         box_distance(pts.tail_point, box_geometry(params.tail_box)).norm();
}

inline ModelGrads zeros_like(const ModelParams& params) {
  ModelGrads g;
  g.phi_base = Mat::Zero(params.phi_base.rows(), params.phi_base.cols());
  g.phi_bump = Mat::Zero(params.phi_bump.rows(), params.phi_bump.cols());
  g.head_box.corner_p = Vec::Zero(params.head_box.corner_p.size());
  g.head_box.corner_q = Vec::Zero(params.head_box.corner_q.size());
  g.tail_box.corner_p = Vec::Zero(params.tail_box.corner_p.size());
  g.tail_box.corner_q = Vec::Zero(params.tail_box.corner_q.size());
  return g;
}

inline void set_zero(ModelGrads& g) {
  g.phi_base.setZero();
  g.phi_bump.setZero();
  g.head_box.corner_p.setZero();
  g.head_box.corner_q.setZero();
  g.tail_box.corner_p.setZero();
  g.tail_box.corner_q.setZero();
}

// Name of the first non-finite block, or empty when everything is finite.
inline std::string first_non_finite_block(const ModelParams& p) {
  if (!p.phi_base.allFinite()) return "phi_base";
  if (!p.phi_bump.allFinite()) return "phi_bump";
  if (!p.head_box.corner_p.allFinite()) return "head_box.corner_p";
  if (!p.head_box.corner_q.allFinite()) return "head_box.corner_q";
  if (!p.tail_box.corner_p.allFinite()) return "tail_box.corner_p";
  if (!p.tail_box.corner_q.allFinite()) return "tail_box.corner_q";
  return {};
}

namespace detail {

// Contribution of one slot (point, box) to the score, with the gradient of
// ||dist||_2 pushed back to the point and the two box corners.
//
// Per dimension, with delta = x - c, s = sign(delta), w = width:
//   inside:  f = |delta| / w
//     df/dx = s/w,  df/dc = -s/w,  df/dw = -|delta| / w^2
//   outside: f = |delta| * w - kappa(w)
//     df/dx = s*w,  df/dc = -s*w,  df/dw = |delta| - dkappa/dw
//     dkappa/dw = 0.5 * (2w - 1 - 1/w^2)
// and c = (u+l)/2, w = u-l+1 give df/dl = df/dc/2 - df/dw,
// df/du = df/dc/2 + df/dw. The min corner receives df/dl, the max corner
// df/du; when the corners tie, corner_p takes the min and corner_q the max.
// Subgradients: sign(0) = 0, and the zero distance vector yields a zero
// gradient.
struct SlotBackward {
  double norm = 0.0;
  Vec d_point;
  Vec d_corner_p;
  Vec d_corner_q;
};

inline SlotBackward box_slot_backward(const Vec& point, const BoxParams& box) {
  const BoxGeometry geom = box_geometry(box);
  const Vec dist = box_distance(point, geom);

  SlotBackward out;
  out.norm = dist.norm();
  out.d_point = Vec::Zero(point.size());
  out.d_corner_p = Vec::Zero(point.size());
  out.d_corner_q = Vec::Zero(point.size());
  if (out.norm == 0.0) return out;

  for (Eigen::Index j = 0; j < point.size(); ++j) {
    const double dn = dist[j] / out.norm;  // d||dist|| / d dist_j
    const double delta = point[j] - geom.center[j];
    const double s = (delta > 0.0) ? 1.0 : (delta < 0.0 ? -1.0 : 0.0);
    const double w = geom.width[j];

    double dfdx, dfdc, dfdw;
    if (geom.lower[j] <= point[j] && point[j] <= geom.upper[j]) {
      dfdx = s / w;
      dfdc = -s / w;
      dfdw = -std::abs(delta) / (w * w);
    } else {
      dfdx = s * w;
      dfdc = -s * w;
      dfdw = std::abs(delta) - 0.5 * (2.0 * w - 1.0 - 1.0 / (w * w));
    }
    const double dfdl = 0.5 * dfdc - dfdw;
    const double dfdu = 0.5 * dfdc + dfdw;

    out.d_point[j] = dn * dfdx;
    const bool p_is_min = box.corner_p[j] <= box.corner_q[j];
    if (p_is_min) {
      out.d_corner_p[j] += dn * dfdl;
      out.d_corner_q[j] += dn * dfdu;
    } else {
      out.d_corner_q[j] += dn * dfdl;
      out.d_corner_p[j] += dn * dfdu;
    }
  }
  return out;
}

}  // namespace detail

// Accumulates weight * d(score_pair)/d(params) into grads and returns the
// score. Training uses the weight to fold in loss derivatives and batch
// normalization without materializing per-pair gradient structs.
inline double score_pair_backward(const Vec& e_i, const Vec& e_j,
                                  const ModelParams& params, double weight,
                                  ModelGrads& grads) {
  const PairPoints pts = pair_points(e_i, e_j, params);
  const auto head = detail::box_slot_backward(pts.head_point, params.head_box);
  const auto tail = detail::box_slot_backward(pts.tail_point, params.tail_box);

  // head_point = phi_base e_i + phi_bump e_j, tail_point = phi_base e_j + phi_bump e_i
  grads.phi_base.noalias() += weight * (head.d_point * e_i.transpose());
  grads.phi_base.noalias() += weight * (tail.d_point * e_j.transpose());
  grads.phi_bump.noalias() += weight * (head.d_point * e_j.transpose());
  grads.phi_bump.noalias() += weight * (tail.d_point * e_i.transpose());
  grads.head_box.corner_p += weight * head.d_corner_p;
  grads.head_box.corner_q += weight * head.d_corner_q;
  grads.tail_box.corner_p += weight * tail.d_corner_p;
  grads.tail_box.corner_q += weight * tail.d_corner_q;
  return head.norm + tail.norm;
}

inline ModelGrads score_gradient(const Vec& e_i, const Vec& e_j,
                                 const ModelParams& params) {
  ModelGrads grads = zeros_like(params);
  score_pair_backward(e_i, e_j, params, 1.0, grads);
  return grads;
}

}  // namespace hyperbox
