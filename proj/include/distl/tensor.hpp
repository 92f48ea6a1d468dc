#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "distl/common.hpp"
#include "distl/rng.hpp"

namespace distl {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// One named parameter array. `decay` marks tensors subject to weight decay
// (weight matrices; biases, norms and token embeddings are excluded).
struct ParamTensor {
  std::string name;
  Mat value;
  bool decay = false;
};

// Ordered, named collection of parameter tensors. Order is fixed at build
// time and shared by gradients, optimizer moments and EMA copies, so
// elementwise traversals line up by construction.
class ParamSet {
 public:
  Mat& add(const std::string& name, Eigen::Index rows, Eigen::Index cols, bool decay = false) {
    if (index_.count(name)) throw InvalidSpec("ParamSet: duplicate tensor " + name);
    index_[name] = static_cast<int>(tensors_.size());
    tensors_.push_back({name, Mat::Zero(rows, cols), decay});
    return tensors_.back().value;
  }

  Mat& at(const std::string& name) { return tensors_[find(name)].value; }
  const Mat& at(const std::string& name) const { return tensors_[find(name)].value; }
  bool has(const std::string& name) const { return index_.count(name) != 0; }

  std::vector<ParamTensor>& tensors() { return tensors_; }
  const std::vector<ParamTensor>& tensors() const { return tensors_; }
  std::size_t tensor_count() const { return tensors_.size(); }

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& t : tensors_) n += static_cast<std::size_t>(t.value.size());
    return n;
  }

  // Same names/shapes, zero values.
  ParamSet zeros_like() const {
    ParamSet out;
    for (const auto& t : tensors_) out.add(t.name, t.value.rows(), t.value.cols(), t.decay);
    return out;
  }

  void set_zero() {
    for (auto& t : tensors_) t.value.setZero();
  }

  bool same_shape(const ParamSet& other) const {
    if (tensors_.size() != other.tensors_.size()) return false;
    for (std::size_t i = 0; i < tensors_.size(); ++i) {
      if (tensors_[i].name != other.tensors_[i].name ||
          tensors_[i].value.rows() != other.tensors_[i].value.rows() ||
          tensors_[i].value.cols() != other.tensors_[i].value.cols()) {
        return false;
      }
    }
    return true;
  }

  bool all_finite() const {
    for (const auto& t : tensors_) {
      if (!t.value.allFinite()) return false;
    }
    return true;
  }

  // Flat scalar access (tensor-major, column-major within a tensor); used by
  // finite-difference checks and serialization.
  double get_flat(std::size_t i) const {
    const auto [t, off] = locate(i);
    return tensors_[t].value.data()[off];
  }
  void set_flat(std::size_t i, double v) {
    const auto [t, off] = locate(i);
    tensors_[t].value.data()[off] = v;
  }

 private:
  int find(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw InvalidSpec("ParamSet: unknown tensor " + name);
    return it->second;
  }

  std::pair<std::size_t, std::size_t> locate(std::size_t i) const {
    for (std::size_t t = 0; t < tensors_.size(); ++t) {
      const auto n = static_cast<std::size_t>(tensors_[t].value.size());
      if (i < n) return {t, i};
      i -= n;
    }
    throw InvalidInput("ParamSet: flat index out of range");
  }

  std::vector<ParamTensor> tensors_;
  std::map<std::string, int> index_;
};

// --- small numeric helpers shared by model and losses ---

inline double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * M_SQRT1_2)); }

inline double gelu_grad(double x) {
  static const double inv_sqrt_2pi = 0.3989422804014326779;
  return 0.5 * (1.0 + std::erf(x * M_SQRT1_2)) + x * inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

inline double log_sum_exp(const Vec& z) {
  const double m = z.maxCoeff();
  return m + std::log((z.array() - m).exp().sum());
}

inline Vec softmax(const Vec& z) {
  Vec e = (z.array() - z.maxCoeff()).exp();
  return e / e.sum();
}

inline Vec log_softmax(const Vec& z) {
  return z.array() - log_sum_exp(z);
}

// In-place row softmax for attention scores.
inline void softmax_rows(Mat& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const double mx = m.row(r).maxCoeff();
    m.row(r) = (m.row(r).array() - mx).exp();
    m.row(r) /= m.row(r).sum();
  }
}

}  // namespace distl
