#pragma once

#include <cmath>

#include "distl/tensor.hpp"

namespace distl {

// ---------------------------------------------------------------------------
// Cross-entropy building blocks and the two distillation losses.
// Gradients are returned w.r.t. the student inputs; teacher inputs are
// treated as constants throughout.
// ---------------------------------------------------------------------------

// Supervised CE over logits. dlogits (optional) receives softmax(z) - onehot.
inline double cross_entropy_label(const Vec& logits, int label, Vec* dlogits = nullptr) {
  if (label < 0 || label >= logits.size()) throw InvalidInput("cross_entropy_label: label out of range");
  const Vec logp = log_softmax(logits);
  if (dlogits) {
    *dlogits = logp.array().exp();
    (*dlogits)(label) -= 1.0;
  }
  return -logp(label);
}

// Multi-label sigmoid BCE summed over classes. dlogits receives sigma(z) - y.
inline double bce_multilabel(const Vec& logits, const Vec& targets, Vec* dlogits = nullptr) {
  if (logits.size() != targets.size()) throw InvalidInput("bce_multilabel: size mismatch");
  double loss = 0.0;
  if (dlogits) dlogits->resize(logits.size());
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    const double z = logits(i);
    const double y = targets(i);
    // stable: max(z,0) - z*y + log(1 + exp(-|z|))
    loss += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
    if (dlogits) (*dlogits)(i) = 1.0 / (1.0 + std::exp(-z)) - y;
  }
  return loss;
}

// H(p, softmax(z/tau)); dlogits receives (softmax(z/tau) - p)/tau.
inline double soft_cross_entropy(const Vec& target_probs, const Vec& student_logits, double tau,
                                 Vec* dlogits = nullptr) {
  if (tau <= 0.0) throw InvalidConfig("soft_cross_entropy: temperature must be positive");
  if (target_probs.size() != student_logits.size()) {
    throw InvalidInput("soft_cross_entropy: shape mismatch");
  }
  const Vec scaled = student_logits / tau;
  const Vec logp = log_softmax(scaled);
  if (dlogits) *dlogits = (logp.array().exp().matrix() - target_probs) / tau;
  return -target_probs.dot(logp);
}

// Self-supervision loss over projection outputs (one image).
//   teacher_proj: G x D, computed on clean global views, gradient-free
//   student_proj: V x D, rows 0..G-1 are the student's (noised) global views
// Teacher rows are centered and sharpened: softmax((t - center)/tau_t).
// Mean CE over pairs (g, v) with v != g as the same global view.
struct SslLoss {
  double value = 0.0;
  Mat dstudent;  // V x D
};

inline SslLoss ssl_loss(const Mat& teacher_proj, const Mat& student_proj, const Vec& center,
                        double teacher_temp, double student_temp) {
  if (teacher_temp <= 0.0 || student_temp <= 0.0) {
    throw InvalidConfig("ssl_loss: temperatures must be positive");
  }
  if (teacher_proj.cols() != student_proj.cols() || teacher_proj.cols() != center.size()) {
    throw InvalidInput("ssl_loss: projection dimension mismatch");
  }
  const auto n_globals = teacher_proj.rows();
  const auto n_views = student_proj.rows();
  if (n_globals < 1 || n_views < n_globals) throw InvalidInput("ssl_loss: bad view counts");

  SslLoss out;
  out.dstudent = Mat::Zero(n_views, student_proj.cols());
  int pairs = 0;
  for (Eigen::Index g = 0; g < n_globals; ++g) {
    const Vec target = softmax((teacher_proj.row(g).transpose() - center) / teacher_temp);
    for (Eigen::Index v = 0; v < n_views; ++v) {
      if (v == g) continue;  // skip the same global view
      Vec dlog;
      out.value += soft_cross_entropy(target, student_proj.row(v).transpose(), student_temp, &dlog);
      out.dstudent.row(v) += dlog.transpose();
      ++pairs;
    }
  }
  if (pairs == 0) throw InvalidInput("ssl_loss: no teacher/student pairs");
  out.value /= pairs;
  out.dstudent /= pairs;
  return out;
}

// Self-training loss over class predictions (one image).
//   teacher_probs: G x C soft pseudo-labels from clean global views
//   student_logits: V x C over all (noised) student views
// Every (teacher global, student view) pair contributes: the student's own
// global views are noised copies of the teacher's clean ones, so the
// same-index pair is the canonical clean-vs-noised match and is included.
struct SelfTrainLoss {
  double value = 0.0;
  Mat dstudent;  // V x C
};

inline SelfTrainLoss selftrain_loss(const Mat& teacher_probs, const Mat& student_logits,
                                    double student_temp) {
  if (teacher_probs.cols() != student_logits.cols()) {
    throw InvalidInput("selftrain_loss: class-count mismatch");
  }
  const auto n_globals = teacher_probs.rows();
  const auto n_views = student_logits.rows();
  if (n_globals < 1 || n_views < 1) throw InvalidInput("selftrain_loss: empty inputs");

  SelfTrainLoss out;
  out.dstudent = Mat::Zero(n_views, student_logits.cols());
  for (Eigen::Index g = 0; g < n_globals; ++g) {
    const Vec target = teacher_probs.row(g).transpose();
    for (Eigen::Index v = 0; v < n_views; ++v) {
      Vec dlog;
      out.value += soft_cross_entropy(target, student_logits.row(v).transpose(), student_temp, &dlog);
      out.dstudent.row(v) += dlog.transpose();
    }
  }
  const double pairs = static_cast<double>(n_globals * n_views);
  out.value /= pairs;
  out.dstudent /= pairs;
  return out;
}

}  // namespace distl
