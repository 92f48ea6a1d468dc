#pragma once

#include <string>
#include <vector>

#include "distl/image.hpp"
#include "distl/tensor.hpp"

namespace distl {

// ---------------------------------------------------------------------------
// Vision-Transformer classifier with a classification head and a projection
// head on the class token, plus direct attention extraction.
// ---------------------------------------------------------------------------

struct ModelSpec {
  int input_side = 256;
  int patch_side = 32;  // toy default: input_side / 8
  int depth = 4;
  int heads = 2;
  int embed_dim = 64;
  int num_classes = 2;
  int proj_dim = 256;
  int head_hidden = 256;     // hidden width of both 3-layer MLP heads
  int bottleneck_dim = 64;   // projection-head bottleneck (unit-normalized)
  int mlp_ratio = 4;

  void validate() const {
    if (input_side <= 0 || patch_side <= 0 || input_side % patch_side != 0) {
      throw InvalidSpec("ModelSpec: input_side must be a positive multiple of patch_side");
    }
    if (depth < 1) throw InvalidSpec("ModelSpec: depth must be >= 1");
    if (heads < 1 || embed_dim % heads != 0) {
      throw InvalidSpec("ModelSpec: embed_dim must be divisible by heads");
    }
    if (num_classes < 2 || proj_dim < 1 || head_hidden < 1 || bottleneck_dim < 1 || mlp_ratio < 1) {
      throw InvalidSpec("ModelSpec: head dimensions must be positive (num_classes >= 2)");
    }
  }

  int grid() const { return input_side / patch_side; }
  int patch_dim() const { return patch_side * patch_side; }
  // side of the local-crop input: nearest patch multiple to input_side/2
  int local_side() const {
    const int cells = std::max(1, (grid() + 1) / 2);
    return cells * patch_side;
  }

  bool operator==(const ModelSpec& o) const = default;
};

struct ModelParams {
  ModelSpec spec;
  ParamSet params;
};

namespace vitdetail {

inline std::string blk(int i, const char* field) {
  return "block" + std::to_string(i) + "." + field;
}

}  // namespace vitdetail

// Allocates and initializes all parameters: truncated-normal(0.02) weights,
// zero biases, unit LayerNorm gains.
inline ModelParams build_model(const ModelSpec& spec, Rng& rng) {
  spec.validate();
  ModelParams m;
  m.spec = spec;
  ParamSet& p = m.params;
  const int d = spec.embed_dim;
  const int n_patches = spec.grid() * spec.grid();

  p.add("patch_embed.w", spec.patch_dim(), d, true);
  p.add("patch_embed.b", 1, d);
  p.add("cls_token", 1, d);
  p.add("pos_embed", n_patches + 1, d);
  for (int i = 0; i < spec.depth; ++i) {
    using vitdetail::blk;
    p.add(blk(i, "ln1.g"), 1, d);
    p.add(blk(i, "ln1.b"), 1, d);
    p.add(blk(i, "qkv.w"), d, 3 * d, true);
    p.add(blk(i, "qkv.b"), 1, 3 * d);
    p.add(blk(i, "proj.w"), d, d, true);
    p.add(blk(i, "proj.b"), 1, d);
    p.add(blk(i, "ln2.g"), 1, d);
    p.add(blk(i, "ln2.b"), 1, d);
    p.add(blk(i, "mlp.w1"), d, spec.mlp_ratio * d, true);
    p.add(blk(i, "mlp.b1"), 1, spec.mlp_ratio * d);
    p.add(blk(i, "mlp.w2"), spec.mlp_ratio * d, d, true);
    p.add(blk(i, "mlp.b2"), 1, d);
  }
  p.add("final_ln.g", 1, d);
  p.add("final_ln.b", 1, d);

  p.add("cls_head.w1", d, spec.head_hidden, true);
  p.add("cls_head.b1", 1, spec.head_hidden);
  p.add("cls_head.w2", spec.head_hidden, spec.head_hidden, true);
  p.add("cls_head.b2", 1, spec.head_hidden);
  p.add("cls_head.w3", spec.head_hidden, spec.num_classes, true);
  p.add("cls_head.b3", 1, spec.num_classes);

  p.add("proj_head.w1", d, spec.head_hidden, true);
  p.add("proj_head.b1", 1, spec.head_hidden);
  p.add("proj_head.w2", spec.head_hidden, spec.head_hidden, true);
  p.add("proj_head.b2", 1, spec.head_hidden);
  p.add("proj_head.w3", spec.head_hidden, spec.bottleneck_dim, true);
  p.add("proj_head.b3", 1, spec.bottleneck_dim);
  p.add("proj_head.out", spec.bottleneck_dim, spec.proj_dim, true);

  for (auto& t : p.tensors()) {
    if (t.decay || t.name == "cls_token" || t.name == "pos_embed") {
      for (Eigen::Index i = 0; i < t.value.size(); ++i) t.value.data()[i] = rng.trunc_normal(0.02);
    } else if (t.name.ends_with("ln1.g") || t.name.ends_with("ln2.g") || t.name == "final_ln.g") {
      t.value.setOnes();
    }
    // biases stay zero
  }
  return m;
}

// Closed-form scalar parameter count for a spec; kept next to build_model so
// the two stay in sync.
inline std::size_t parameter_count(const ModelSpec& spec) {
  const std::size_t d = spec.embed_dim;
  const std::size_t n_patches = static_cast<std::size_t>(spec.grid()) * spec.grid();
  const std::size_t hh = spec.head_hidden;
  std::size_t n = spec.patch_dim() * d + d;      // patch embed
  n += d;                                        // cls token
  n += (n_patches + 1) * d;                      // pos embed
  const std::size_t mlp_d = static_cast<std::size_t>(spec.mlp_ratio) * d;
  n += static_cast<std::size_t>(spec.depth) *
       (2 * d + d * 3 * d + 3 * d + d * d + d + 2 * d + d * mlp_d + mlp_d + mlp_d * d + d);
  n += 2 * d;                                    // final LN
  n += d * hh + hh + hh * hh + hh + hh * spec.num_classes + spec.num_classes;
  n += d * hh + hh + hh * hh + hh + hh * spec.bottleneck_dim + spec.bottleneck_dim +
       static_cast<std::size_t>(spec.bottleneck_dim) * spec.proj_dim;
  return n;
}

// --- forward cache ---

struct BlockCache {
  Mat x_in;                 // n x d residual-stream input
  Mat ln1_xhat;             // normalized pre-gain activations
  Vec ln1_inv_sigma;        // per-token 1/sqrt(var+eps)
  Mat qkv;                  // n x 3d
  std::vector<Mat> attn;    // per head, n x n row-softmax
  Mat attn_concat;          // n x d heads concatenated (pre out-projection)
  Mat after_attn;           // residual after attention
  Mat ln2_xhat;
  Vec ln2_inv_sigma;
  Mat mlp_pre;              // n x (ratio*d)
};

struct VitCache {
  int side = 0, grid = 0, tokens = 0;
  Mat patches;              // n_patches x patch_dim
  std::vector<BlockCache> blocks;
  Mat final_in;
  Mat final_xhat;
  Vec final_inv_sigma;
  Vec cls_feat;             // d
  // classification head
  Vec ch_pre1, ch_act1, ch_pre2, ch_act2;
  // projection head
  Vec ph_pre1, ph_act1, ph_pre2, ph_act2, bottleneck;
  Vec bottleneck_unit;
  double bottleneck_norm = 0.0;
  Vec logits;
  Vec projection;
};

namespace vitdetail {

constexpr double kLnEps = 1e-6;

// y = LN(x) * g + b rowwise; caches xhat and 1/sigma.
inline Mat layer_norm(const Mat& x, const Mat& g, const Mat& b, Mat& xhat, Vec& inv_sigma) {
  const auto n = x.rows();
  const auto d = x.cols();
  xhat.resize(n, d);
  inv_sigma.resize(n);
  Mat y(n, d);
  for (Eigen::Index r = 0; r < n; ++r) {
    const double mu = x.row(r).mean();
    const double var = (x.row(r).array() - mu).square().mean();
    const double inv = 1.0 / std::sqrt(var + kLnEps);
    inv_sigma(r) = inv;
    xhat.row(r) = (x.row(r).array() - mu) * inv;
    y.row(r) = xhat.row(r).cwiseProduct(g.row(0)) + b.row(0);
  }
  return y;
}

// Backward of layer_norm; accumulates into dg/db and returns dx.
inline Mat layer_norm_backward(const Mat& dy, const Mat& xhat, const Vec& inv_sigma,
                               const Mat& g, Mat& dg, Mat& db) {
  const auto n = dy.rows();
  const auto d = dy.cols();
  Mat dx(n, d);
  for (Eigen::Index r = 0; r < n; ++r) {
    dg.row(0) += dy.row(r).cwiseProduct(xhat.row(r));
    db.row(0) += dy.row(r);
    const Eigen::RowVectorXd dxhat = dy.row(r).cwiseProduct(g.row(0));
    const double m1 = dxhat.mean();
    const double m2 = dxhat.cwiseProduct(xhat.row(r)).mean();
    dx.row(r) = (dxhat.array() - m1 - xhat.row(r).array() * m2) * inv_sigma(r);
  }
  return dx;
}

// Bilinear interpolation weights from the stored pos-embed grid (gf x gf) to
// a target grid (g x g). Each target cell maps to up to 4 source rows.
struct PosInterpTap {
  int src;      // row into pos_embed patch block (0-based, cls excluded)
  double w;
};

inline void pos_interp_taps(int src_grid, int dst_grid, int cell, PosInterpTap taps[4], int* n_taps) {
  const int i = cell / dst_grid;
  const int j = cell % dst_grid;
  const double scale = static_cast<double>(src_grid) / dst_grid;
  auto axis = [&](int t, int& lo, int& hi, double& w) {
    double f = (t + 0.5) * scale - 0.5;
    f = std::clamp(f, 0.0, static_cast<double>(src_grid - 1));
    lo = static_cast<int>(std::floor(f));
    hi = std::min(lo + 1, src_grid - 1);
    w = f - lo;
  };
  int y0, y1, x0, x1;
  double wy, wx;
  axis(i, y0, y1, wy);
  axis(j, x0, x1, wx);
  const double w00 = (1 - wy) * (1 - wx), w01 = (1 - wy) * wx, w10 = wy * (1 - wx), w11 = wy * wx;
  int k = 0;
  auto push = [&](int r, int c, double w) {
    if (w == 0.0) return;
    taps[k++] = {r * src_grid + c, w};
  };
  push(y0, x0, w00);
  push(y0, x1, w01);
  push(y1, x0, w10);
  push(y1, x1, w11);
  *n_taps = k;
}

inline void head_mlp3(const ParamSet& p, const std::string& prefix, const Vec& x,
                      Vec& pre1, Vec& act1, Vec& pre2, Vec& act2, Vec& out) {
  pre1 = p.at(prefix + ".w1").transpose() * x + p.at(prefix + ".b1").row(0).transpose();
  act1 = pre1.unaryExpr([](double v) { return gelu(v); });
  pre2 = p.at(prefix + ".w2").transpose() * act1 + p.at(prefix + ".b2").row(0).transpose();
  act2 = pre2.unaryExpr([](double v) { return gelu(v); });
  out = p.at(prefix + ".w3").transpose() * act2 + p.at(prefix + ".b3").row(0).transpose();
}

// Backward of head_mlp3; returns gradient w.r.t. the head input.
inline Vec head_mlp3_backward(const ParamSet& p, ParamSet& g, const std::string& prefix,
                              const Vec& x, const Vec& pre1, const Vec& act1, const Vec& pre2,
                              const Vec& act2, const Vec& dout) {
  g.at(prefix + ".w3") += act2 * dout.transpose();
  g.at(prefix + ".b3").row(0) += dout.transpose();
  Vec dact2 = p.at(prefix + ".w3") * dout;
  Vec dpre2 = dact2.cwiseProduct(pre2.unaryExpr([](double v) { return gelu_grad(v); }));
  g.at(prefix + ".w2") += act1 * dpre2.transpose();
  g.at(prefix + ".b2").row(0) += dpre2.transpose();
  Vec dact1 = p.at(prefix + ".w2") * dpre2;
  Vec dpre1 = dact1.cwiseProduct(pre1.unaryExpr([](double v) { return gelu_grad(v); }));
  g.at(prefix + ".w1") += x * dpre1.transpose();
  g.at(prefix + ".b1").row(0) += dpre1.transpose();
  return p.at(prefix + ".w1") * dpre1;
}

}  // namespace vitdetail

// Forward pass over one image at any side that is a positive multiple of
// patch_side (position embeddings are bilinearly interpolated for non-native
// grids). Returns the full activation cache for backprop and attention reads.
inline VitCache vit_forward(const ModelParams& m, const ImageTensor& img) {
  const ModelSpec& s = m.spec;
  const ParamSet& p = m.params;
  if (img.height != img.width || img.height < s.patch_side || img.height % s.patch_side != 0) {
    throw InvalidInput("vit_forward: unsupported input side " + std::to_string(img.height));
  }
  VitCache c;
  c.side = img.height;
  c.grid = img.height / s.patch_side;
  const int g = c.grid;
  const int n_patches = g * g;
  c.tokens = n_patches + 1;
  const int n = c.tokens;
  const int d = s.embed_dim;
  const int hd = d / s.heads;
  const double attn_scale = 1.0 / std::sqrt(static_cast<double>(hd));

  // patchify
  c.patches.resize(n_patches, s.patch_dim());
  for (int pi = 0; pi < g; ++pi) {
    for (int pj = 0; pj < g; ++pj) {
      const int row = pi * g + pj;
      for (int r = 0; r < s.patch_side; ++r) {
        for (int col = 0; col < s.patch_side; ++col) {
          c.patches(row, r * s.patch_side + col) =
              img.at(pi * s.patch_side + r, pj * s.patch_side + col);
        }
      }
    }
  }

  // embed + cls + pos
  Mat x(n, d);
  x.row(0) = p.at("cls_token").row(0);
  x.bottomRows(n_patches) = c.patches * p.at("patch_embed.w");
  x.bottomRows(n_patches).rowwise() += p.at("patch_embed.b").row(0);

  const Mat& pos = p.at("pos_embed");
  const int src_grid = s.grid();
  x.row(0) += pos.row(0);
  if (g == src_grid) {
    x.bottomRows(n_patches) += pos.bottomRows(n_patches);
  } else {
    for (int cell = 0; cell < n_patches; ++cell) {
      vitdetail::PosInterpTap taps[4];
      int k = 0;
      vitdetail::pos_interp_taps(src_grid, g, cell, taps, &k);
      for (int t = 0; t < k; ++t) x.row(1 + cell) += taps[t].w * pos.row(1 + taps[t].src);
    }
  }

  // encoder blocks (pre-LN)
  c.blocks.resize(s.depth);
  for (int b = 0; b < s.depth; ++b) {
    using vitdetail::blk;
    BlockCache& bc = c.blocks[b];
    bc.x_in = x;
    Mat ln1 = vitdetail::layer_norm(x, p.at(blk(b, "ln1.g")), p.at(blk(b, "ln1.b")),
                                    bc.ln1_xhat, bc.ln1_inv_sigma);
    bc.qkv = ln1 * p.at(blk(b, "qkv.w"));
    bc.qkv.rowwise() += p.at(blk(b, "qkv.b")).row(0);
    bc.attn.resize(s.heads);
    bc.attn_concat.resize(n, d);
    for (int h = 0; h < s.heads; ++h) {
      const auto q = bc.qkv.block(0, h * hd, n, hd);
      const auto kk = bc.qkv.block(0, d + h * hd, n, hd);
      const auto v = bc.qkv.block(0, 2 * d + h * hd, n, hd);
      Mat scores = q * kk.transpose() * attn_scale;
      softmax_rows(scores);
      bc.attn[h] = std::move(scores);
      bc.attn_concat.block(0, h * hd, n, hd) = bc.attn[h] * v;
    }
    Mat attn_out = bc.attn_concat * p.at(blk(b, "proj.w"));
    attn_out.rowwise() += p.at(blk(b, "proj.b")).row(0);
    bc.after_attn = x + attn_out;

    Mat ln2 = vitdetail::layer_norm(bc.after_attn, p.at(blk(b, "ln2.g")), p.at(blk(b, "ln2.b")),
                                    bc.ln2_xhat, bc.ln2_inv_sigma);
    bc.mlp_pre = ln2 * p.at(blk(b, "mlp.w1"));
    bc.mlp_pre.rowwise() += p.at(blk(b, "mlp.b1")).row(0);
    Mat act = bc.mlp_pre.unaryExpr([](double v) { return gelu(v); });
    Mat mlp_out = act * p.at(blk(b, "mlp.w2"));
    mlp_out.rowwise() += p.at(blk(b, "mlp.b2")).row(0);
    x = bc.after_attn + mlp_out;
  }

  c.final_in = x;
  Mat fin = vitdetail::layer_norm(x, p.at("final_ln.g"), p.at("final_ln.b"),
                                  c.final_xhat, c.final_inv_sigma);
  c.cls_feat = fin.row(0).transpose();

  vitdetail::head_mlp3(p, "cls_head", c.cls_feat, c.ch_pre1, c.ch_act1, c.ch_pre2, c.ch_act2,
                       c.logits);

  vitdetail::head_mlp3(p, "proj_head", c.cls_feat, c.ph_pre1, c.ph_act1, c.ph_pre2, c.ph_act2,
                       c.bottleneck);
  c.bottleneck_norm = std::max(c.bottleneck.norm(), 1e-12);
  c.bottleneck_unit = c.bottleneck / c.bottleneck_norm;
  c.projection = p.at("proj_head.out").transpose() * c.bottleneck_unit;
  return c;
}

// Accumulates parameter gradients for one cached forward pass given loss
// gradients w.r.t. the class logits and the projection output.
inline void vit_backward(const ModelParams& m, const VitCache& c, const Vec& dlogits,
                         const Vec& dproj, ParamSet& grads) {
  const ModelSpec& s = m.spec;
  const ParamSet& p = m.params;
  const int n = c.tokens;
  const int d = s.embed_dim;
  const int hd = d / s.heads;
  const double attn_scale = 1.0 / std::sqrt(static_cast<double>(hd));

  Vec dcls_feat = Vec::Zero(d);
  if (dlogits.size() > 0) {
    dcls_feat += vitdetail::head_mlp3_backward(p, grads, "cls_head", c.cls_feat, c.ch_pre1,
                                               c.ch_act1, c.ch_pre2, c.ch_act2, dlogits);
  }
  if (dproj.size() > 0) {
    grads.at("proj_head.out") += c.bottleneck_unit * dproj.transpose();
    Vec dunit = p.at("proj_head.out") * dproj;
    // unit-sphere normalization backward
    Vec dbottleneck =
        (dunit - c.bottleneck_unit * c.bottleneck_unit.dot(dunit)) / c.bottleneck_norm;
    dcls_feat += vitdetail::head_mlp3_backward(p, grads, "proj_head", c.cls_feat, c.ph_pre1,
                                               c.ph_act1, c.ph_pre2, c.ph_act2, dbottleneck);
  }

  Mat dfin = Mat::Zero(n, d);
  dfin.row(0) = dcls_feat.transpose();
  Mat dx = vitdetail::layer_norm_backward(dfin, c.final_xhat, c.final_inv_sigma,
                                          p.at("final_ln.g"), grads.at("final_ln.g"),
                                          grads.at("final_ln.b"));

  for (int b = s.depth - 1; b >= 0; --b) {
    using vitdetail::blk;
    const BlockCache& bc = c.blocks[b];

    // MLP branch
    Mat act = bc.mlp_pre.unaryExpr([](double v) { return gelu(v); });
    Mat ln2 = bc.ln2_xhat;
    for (Eigen::Index r = 0; r < ln2.rows(); ++r) {
      ln2.row(r) = bc.ln2_xhat.row(r).cwiseProduct(p.at(blk(b, "ln2.g")).row(0)) +
                   p.at(blk(b, "ln2.b")).row(0);
    }
    grads.at(blk(b, "mlp.w2")) += act.transpose() * dx;
    grads.at(blk(b, "mlp.b2")).row(0) += dx.colwise().sum();
    Mat dact = dx * p.at(blk(b, "mlp.w2")).transpose();
    Mat dpre = dact.cwiseProduct(bc.mlp_pre.unaryExpr([](double v) { return gelu_grad(v); }));
    grads.at(blk(b, "mlp.w1")) += ln2.transpose() * dpre;
    grads.at(blk(b, "mlp.b1")).row(0) += dpre.colwise().sum();
    Mat dln2 = dpre * p.at(blk(b, "mlp.w1")).transpose();
    Mat dafter = dx + vitdetail::layer_norm_backward(dln2, bc.ln2_xhat, bc.ln2_inv_sigma,
                                                     p.at(blk(b, "ln2.g")),
                                                     grads.at(blk(b, "ln2.g")),
                                                     grads.at(blk(b, "ln2.b")));

    // attention branch
    Mat ln1 = bc.ln1_xhat;
    for (Eigen::Index r = 0; r < ln1.rows(); ++r) {
      ln1.row(r) = bc.ln1_xhat.row(r).cwiseProduct(p.at(blk(b, "ln1.g")).row(0)) +
                   p.at(blk(b, "ln1.b")).row(0);
    }
    grads.at(blk(b, "proj.w")) += bc.attn_concat.transpose() * dafter;
    grads.at(blk(b, "proj.b")).row(0) += dafter.colwise().sum();
    Mat dconcat = dafter * p.at(blk(b, "proj.w")).transpose();

    Mat dqkv = Mat::Zero(n, 3 * d);
    for (int h = 0; h < s.heads; ++h) {
      const auto q = bc.qkv.block(0, h * hd, n, hd);
      const auto kk = bc.qkv.block(0, d + h * hd, n, hd);
      const auto v = bc.qkv.block(0, 2 * d + h * hd, n, hd);
      const Mat& a = bc.attn[h];
      const auto dout_h = dconcat.block(0, h * hd, n, hd);
      Mat da = dout_h * v.transpose();
      dqkv.block(0, 2 * d + h * hd, n, hd) = a.transpose() * dout_h;
      // softmax rows backward
      Mat dscores(n, n);
      for (int r = 0; r < n; ++r) {
        const double dot = da.row(r).dot(a.row(r));
        dscores.row(r) = a.row(r).cwiseProduct(da.row(r).array() - dot);
      }
      dscores *= attn_scale;
      dqkv.block(0, h * hd, n, hd) = dscores * kk;
      dqkv.block(0, d + h * hd, n, hd) = dscores.transpose() * q;
    }
    grads.at(blk(b, "qkv.w")) += ln1.transpose() * dqkv;
    grads.at(blk(b, "qkv.b")).row(0) += dqkv.colwise().sum();
    Mat dln1 = dqkv * p.at(blk(b, "qkv.w")).transpose();
    dx = dafter + vitdetail::layer_norm_backward(dln1, bc.ln1_xhat, bc.ln1_inv_sigma,
                                                 p.at(blk(b, "ln1.g")),
                                                 grads.at(blk(b, "ln1.g")),
                                                 grads.at(blk(b, "ln1.b")));
  }

  // token embedding
  grads.at("cls_token").row(0) += dx.row(0);
  const int n_patches = n - 1;
  grads.at("patch_embed.w") += c.patches.transpose() * dx.bottomRows(n_patches);
  grads.at("patch_embed.b").row(0) += dx.bottomRows(n_patches).colwise().sum();

  Mat& dpos = grads.at("pos_embed");
  dpos.row(0) += dx.row(0);
  const int src_grid = s.grid();
  if (c.grid == src_grid) {
    dpos.bottomRows(n_patches) += dx.bottomRows(n_patches);
  } else {
    for (int cell = 0; cell < n_patches; ++cell) {
      vitdetail::PosInterpTap taps[4];
      int k = 0;
      vitdetail::pos_interp_taps(src_grid, c.grid, cell, taps, &k);
      for (int t = 0; t < k; ++t) dpos.row(1 + taps[t].src) += taps[t].w * dx.row(1 + cell);
    }
  }
}

// Batched inference-mode forward; rows are images.
struct BatchForward {
  Mat logits;       // B x num_classes
  Mat projections;  // B x proj_dim
};

inline BatchForward forward(const ModelParams& m, const std::vector<ImageTensor>& batch) {
  BatchForward out;
  out.logits.resize(static_cast<Eigen::Index>(batch.size()), m.spec.num_classes);
  out.projections.resize(static_cast<Eigen::Index>(batch.size()), m.spec.proj_dim);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    VitCache c = vit_forward(m, batch[i]);
    out.logits.row(static_cast<Eigen::Index>(i)) = c.logits.transpose();
    out.projections.row(static_cast<Eigen::Index>(i)) = c.projection.transpose();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Attention extraction: last-layer class-token attention per head.
// ---------------------------------------------------------------------------

struct AttentionMap {
  int heads = 0;
  int grid = 0;
  std::vector<Mat> per_head;     // grid x grid, min-max normalized to [0,1]
  std::vector<Vec> raw_cls_row;  // per head: full softmax row of the class token
};

inline AttentionMap extract_attention(const ModelParams& m, const ImageTensor& img) {
  VitCache c = vit_forward(m, img);
  const BlockCache& last = c.blocks.back();
  AttentionMap out;
  out.heads = m.spec.heads;
  out.grid = c.grid;
  out.per_head.reserve(out.heads);
  out.raw_cls_row.reserve(out.heads);
  for (int h = 0; h < out.heads; ++h) {
    const Vec row = last.attn[h].row(0).transpose();
    out.raw_cls_row.push_back(row);
    Mat map(c.grid, c.grid);
    for (int i = 0; i < c.grid; ++i) {
      for (int j = 0; j < c.grid; ++j) map(i, j) = row(1 + i * c.grid + j);
    }
    const double mn = map.minCoeff();
    const double mx = map.maxCoeff();
    if (mx - mn > 0.0) {
      map = (map.array() - mn) / (mx - mn);
    } else {
      map.setZero();  // degenerate uniform attention
    }
    out.per_head.push_back(std::move(map));
  }
  return out;
}

}  // namespace distl
