#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "distl/image.hpp"
#include "distl/rng.hpp"

namespace distl {

// ---------------------------------------------------------------------------
// Deterministic preprocessing: equalize -> blur -> min-max -> resize.
// ---------------------------------------------------------------------------

struct PreprocessOptions {
  bool blur_enabled = true;
  double blur_sigma = 1.0;
  int blur_kernel = 5;  // odd
};

namespace detail {

inline ImageTensor min_max_normalize(const ImageTensor& img) {
  auto [mn_it, mx_it] = std::minmax_element(img.pixels.begin(), img.pixels.end());
  const double mn = *mn_it, mx = *mx_it;
  ImageTensor out(img.height, img.width);
  if (mx - mn <= 0.0) return out;  // constant image -> all zeros
  const double inv = 1.0 / (mx - mn);
  for (std::size_t i = 0; i < img.size(); ++i) out.pixels[i] = (img.pixels[i] - mn) * inv;
  return out;
}

// Histogram equalization via the exact empirical cdf over distinct values
// (the 8-bit-source case reduces to classic 256-bin equalization). Constant
// input is returned unchanged. The map is strictly increasing over distinct
// values, which makes a second application the identity.
inline ImageTensor equalize(const ImageTensor& img) {
  std::map<double, std::size_t> hist;
  for (double v : img.pixels) ++hist[v];
  if (hist.size() <= 1) return img;
  const double n = static_cast<double>(img.size());
  std::map<double, double> remap;
  double cum = 0.0;
  double cdf_min = -1.0;
  for (const auto& [value, count] : hist) {
    cum += static_cast<double>(count);
    const double cdf = cum / n;
    if (cdf_min < 0.0) cdf_min = cdf;
    remap[value] = (cdf - cdf_min) / (1.0 - cdf_min);
  }
  ImageTensor out(img.height, img.width);
  for (std::size_t i = 0; i < img.size(); ++i) out.pixels[i] = remap[img.pixels[i]];
  return out;
}

// Separable Gaussian, reflective border.
inline ImageTensor gaussian_blur(const ImageTensor& img, double sigma, int ksize) {
  if (ksize % 2 == 0 || ksize < 1) throw InvalidConfig("gaussian_blur: kernel size must be odd");
  const int half = ksize / 2;
  std::vector<double> kernel(ksize);
  double sum = 0.0;
  for (int i = -half; i <= half; ++i) {
    kernel[i + half] = std::exp(-0.5 * (i * i) / (sigma * sigma));
    sum += kernel[i + half];
  }
  for (double& k : kernel) k /= sum;

  auto reflect = [](int i, int n) {
    if (i < 0) i = -i - 1;
    if (i >= n) i = 2 * n - 1 - i;
    return std::clamp(i, 0, n - 1);
  };

  ImageTensor tmp(img.height, img.width);
  for (int r = 0; r < img.height; ++r) {
    for (int c = 0; c < img.width; ++c) {
      double acc = 0.0;
      for (int k = -half; k <= half; ++k) acc += kernel[k + half] * img.at(r, reflect(c + k, img.width));
      tmp.at(r, c) = acc;
    }
  }
  ImageTensor out(img.height, img.width);
  for (int r = 0; r < img.height; ++r) {
    for (int c = 0; c < img.width; ++c) {
      double acc = 0.0;
      for (int k = -half; k <= half; ++k) acc += kernel[k + half] * tmp.at(reflect(r + k, img.height), c);
      out.at(r, c) = acc;
    }
  }
  return out;
}

}  // namespace detail

// Histogram equalization, optional Gaussian blur, min-max normalization to
// [0,1], bilinear resize to side x side.
inline ImageTensor preprocess_image(const ImageTensor& raw, int side,
                                    const PreprocessOptions& opts = {}) {
  if (raw.empty()) throw InvalidInput("preprocess_image: empty input");
  if (!all_finite(raw)) throw InvalidInput("preprocess_image: non-finite intensities");
  if (side <= 0) throw InvalidInput("preprocess_image: side must be positive");

  ImageTensor img = detail::min_max_normalize(raw);
  img = detail::equalize(img);
  if (opts.blur_enabled) img = detail::gaussian_blur(img, opts.blur_sigma, opts.blur_kernel);
  img = detail::min_max_normalize(img);
  return resize_bilinear(img, side, side);
}

// ---------------------------------------------------------------------------
// Weak augmentation: flip / rotation / translation, zero padding.
// ---------------------------------------------------------------------------

struct AugmentPolicy {
  bool enabled = true;
  bool flip_enabled = true;
  double max_rotation_deg = 10.0;
  double max_translation_frac = 0.05;  // of image side

  void validate() const {
    if (max_rotation_deg < 0.0) throw InvalidConfig("AugmentPolicy: max_rotation_deg < 0");
    if (max_translation_frac < 0.0 || max_translation_frac > 0.5) {
      throw InvalidConfig("AugmentPolicy: max_translation_frac outside [0, 0.5]");
    }
  }
};

struct AugmentParams {
  bool identity = true;
  bool flip = false;
  double rotation_deg = 0.0;
  double translate_x = 0.0;  // pixels
  double translate_y = 0.0;
};

inline AugmentParams draw_augment(const AugmentPolicy& policy, int side, Rng& rng) {
  policy.validate();
  AugmentParams p;
  if (!policy.enabled) return p;
  p.identity = false;
  p.flip = policy.flip_enabled && rng.bernoulli(0.5);
  p.rotation_deg = rng.uniform(-policy.max_rotation_deg, policy.max_rotation_deg);
  const double max_t = policy.max_translation_frac * side;
  p.translate_x = rng.uniform(-max_t, max_t);
  p.translate_y = rng.uniform(-max_t, max_t);
  return p;
}

inline ImageTensor apply_augment(const ImageTensor& img, const AugmentParams& p) {
  if (p.identity) return img;
  const double theta = p.rotation_deg * M_PI / 180.0;
  const double ct = std::cos(theta), st = std::sin(theta);
  const double cy = (img.height - 1) / 2.0;
  const double cx = (img.width - 1) / 2.0;
  ImageTensor out(img.height, img.width);
  // inverse map: undo translation, undo rotation about center, undo flip
  for (int r = 0; r < img.height; ++r) {
    for (int c = 0; c < img.width; ++c) {
      const double ty = r - p.translate_y - cy;
      const double tx = c - p.translate_x - cx;
      double sy = ct * ty + st * tx + cy;
      double sx = -st * ty + ct * tx + cx;
      if (p.flip) sx = (img.width - 1) - sx;
      out.at(r, c) = sample_bilinear(img, sy, sx, 0.0);
    }
  }
  return out;
}

inline ImageTensor weak_augment(const ImageTensor& img, const AugmentPolicy& policy, Rng& rng) {
  return apply_augment(img, draw_augment(policy, img.width, rng));
}

// ---------------------------------------------------------------------------
// Multi-crop: G global views (area 0.75-1.0) + L local views (area 0.2-0.6).
// ---------------------------------------------------------------------------

struct CropSet {
  std::vector<ImageTensor> globals;
  std::vector<ImageTensor> locals;
  std::vector<double> global_scales;  // achieved area fractions
  std::vector<double> local_scales;
};

struct CropScales {
  double global_lo = 0.75, global_hi = 1.0;
  double local_lo = 0.2, local_hi = 0.6;
};

namespace detail {

// Integer crop side whose achieved area fraction (side/s)^2 is guaranteed to
// stay inside [lo, hi].
inline int draw_crop_side(int s, double lo, double hi, Rng& rng) {
  const int side_lo = std::max(1, static_cast<int>(std::ceil(s * std::sqrt(lo) - 1e-9)));
  const int side_hi = std::max(side_lo, static_cast<int>(std::floor(s * std::sqrt(hi) + 1e-9)));
  const double a = rng.uniform(lo, hi);
  const int side = static_cast<int>(std::lround(s * std::sqrt(a)));
  return std::clamp(side, side_lo, side_hi);
}

inline ImageTensor random_crop_resized(const ImageTensor& img, int crop_side, int out_side,
                                       Rng& rng, double* achieved_scale) {
  const int max_top = img.height - crop_side;
  const int max_left = img.width - crop_side;
  const int top = max_top > 0 ? static_cast<int>(rng.uniform_index(max_top + 1)) : 0;
  const int left = max_left > 0 ? static_cast<int>(rng.uniform_index(max_left + 1)) : 0;
  if (achieved_scale) {
    *achieved_scale = static_cast<double>(crop_side) * crop_side / (static_cast<double>(img.width) * img.height);
  }
  return resize_bilinear(crop(img, top, left, crop_side), out_side, out_side);
}

}  // namespace detail

// Global crops are resized to global_out (the model input side); local crops
// to local_out (half side, patch-aligned by the caller).
inline CropSet multi_crop(const ImageTensor& img, int g, int l, int global_out, int local_out,
                          Rng& rng, const CropScales& sc = {}) {
  if (g < 1 || l < 0) throw InvalidInput("multi_crop: need g >= 1 and l >= 0");
  if (img.height != img.width || img.empty()) throw InvalidInput("multi_crop: expects square preprocessed input");
  CropSet out;
  out.globals.reserve(g);
  out.locals.reserve(l);
  for (int i = 0; i < g; ++i) {
    const int side = detail::draw_crop_side(img.width, sc.global_lo, sc.global_hi, rng);
    double scale = 0.0;
    out.globals.push_back(detail::random_crop_resized(img, side, global_out, rng, &scale));
    out.global_scales.push_back(scale);
  }
  for (int i = 0; i < l; ++i) {
    const int side = detail::draw_crop_side(img.width, sc.local_lo, sc.local_hi, rng);
    double scale = 0.0;
    out.locals.push_back(detail::random_crop_resized(img, side, local_out, rng, &scale));
    out.local_scales.push_back(scale);
  }
  return out;
}

}  // namespace distl
