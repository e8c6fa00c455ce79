#include "mrcner/encoder.hpp"

#include <cmath>
#include <numbers>

#include "mrcner/error.hpp"
#include "mrcner/kernels.hpp"
#include "mrcner/random.hpp"

namespace mrcner {

namespace {

constexpr double kInitStd = 0.02;

Matrix row_vector(std::size_t n, double fill = 0.0) { return Matrix(1, n, fill); }

void layer_norm(const Matrix& x, const Matrix& gain, const Matrix& bias, double eps,
                LayerNormCache& cache, Matrix& out) {
  const std::size_t rows = x.rows(), d = x.cols();
  cache.xhat = Matrix(rows, d);
  cache.rstd.assign(rows, 0.0);
  out = Matrix(rows, d);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto xr = x.row(r);
    double mean = 0.0;
    for (double v : xr) mean += v;
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (double v : xr) var += (v - mean) * (v - mean);
    var /= static_cast<double>(d);
    const double rstd = 1.0 / std::sqrt(var + eps);
    cache.rstd[r] = rstd;
    for (std::size_t c = 0; c < d; ++c) {
      const double xh = (xr[c] - mean) * rstd;
      cache.xhat(r, c) = xh;
      out(r, c) = xh * gain(0, c) + bias(0, c);
    }
  }
}

// Returns dx; accumulates dgain, dbias.
Matrix layer_norm_backward(const Matrix& dy, const Matrix& gain, const LayerNormCache& cache,
                           Matrix& dgain, Matrix& dbias) {
  const std::size_t rows = dy.rows(), d = dy.cols();
  Matrix dx(rows, d);
  std::vector<double> dxhat(d);
  for (std::size_t r = 0; r < rows; ++r) {
    double mean_dxhat = 0.0, mean_dxhat_xhat = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      const double g = dy(r, c);
      dgain(0, c) += g * cache.xhat(r, c);
      dbias(0, c) += g;
      dxhat[c] = g * gain(0, c);
      mean_dxhat += dxhat[c];
      mean_dxhat_xhat += dxhat[c] * cache.xhat(r, c);
    }
    mean_dxhat /= static_cast<double>(d);
    mean_dxhat_xhat /= static_cast<double>(d);
    for (std::size_t c = 0; c < d; ++c)
      dx(r, c) = cache.rstd[r] * (dxhat[c] - mean_dxhat - cache.xhat(r, c) * mean_dxhat_xhat);
  }
  return dx;
}

Matrix dropout_mask(std::size_t rows, std::size_t cols, double rate, Rng& rng) {
  Matrix m(rows, cols);
  const double keep = 1.0 / (1.0 - rate);
  for (auto& v : m.values()) v = rng.uniform() < rate ? 0.0 : keep;
  return m;
}

void apply_mask(Matrix& x, const Matrix& mask) {
  if (mask.empty()) return;
  auto& xv = x.values();
  const auto& mv = mask.values();
  for (std::size_t i = 0; i < xv.size(); ++i) xv[i] *= mv[i];
}

void check_finite(const Matrix& m, const std::string& where) {
  for (double v : m.values())
    if (!std::isfinite(v)) throw NumericError("non-finite activation in " + where);
}

void init_matrix(Matrix& m, Rng& rng) {
  for (auto& v : m.values()) v = rng.truncated_normal(kInitStd);
}

}  // namespace

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); }

double gelu_grad(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2));
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  return cdf + x * pdf;
}

void EncoderConfig::validate() const {
  if (layers < 1) throw Error("encoder needs at least one layer");
  if (heads < 1 || model_dim == 0 || model_dim % heads != 0)
    throw Error("model_dim " + std::to_string(model_dim) + " not divisible by heads " +
                std::to_string(heads));
  if (ffn_dim == 0) throw Error("ffn_dim must be positive");
  if (vocab_size < 4) throw Error("vocab_size must cover the special tokens");
  if (max_positions == 0) throw Error("max_positions must be positive");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw Error("dropout_rate must be in [0,1)");
}

EncoderParams EncoderParams::zeros(const EncoderConfig& cfg) {
  cfg.validate();
  const std::size_t d = cfg.model_dim, f = cfg.ffn_dim;
  EncoderParams p;
  p.token_embedding = Matrix(cfg.vocab_size, d);
  p.embedding_bias = row_vector(d);
  p.position_embedding = Matrix(cfg.max_positions, d);
  p.segment_embedding = Matrix(2, d);
  p.layers.resize(cfg.layers);
  for (auto& l : p.layers) {
    l.ln1_gain = row_vector(d, 1.0);
    l.ln1_bias = row_vector(d);
    l.wq = Matrix(d, d);
    l.bq = row_vector(d);
    l.wk = Matrix(d, d);
    l.bk = row_vector(d);
    l.wv = Matrix(d, d);
    l.bv = row_vector(d);
    l.wo = Matrix(d, d);
    l.bo = row_vector(d);
    l.ln2_gain = row_vector(d, 1.0);
    l.ln2_bias = row_vector(d);
    l.w1 = Matrix(d, f);
    l.b1 = row_vector(f);
    l.w2 = Matrix(f, d);
    l.b2 = row_vector(d);
  }
  p.final_ln_gain = row_vector(d, 1.0);
  p.final_ln_bias = row_vector(d);
  return p;
}

EncoderParams EncoderParams::initialize(const EncoderConfig& cfg, std::uint64_t seed) {
  auto p = zeros(cfg);
  Rng rng(seed);
  init_matrix(p.token_embedding, rng);
  init_matrix(p.position_embedding, rng);
  init_matrix(p.segment_embedding, rng);
  for (auto& l : p.layers) {
    init_matrix(l.wq, rng);
    init_matrix(l.wk, rng);
    init_matrix(l.wv, rng);
    init_matrix(l.wo, rng);
    init_matrix(l.w1, rng);
    init_matrix(l.w2, rng);
  }
  return p;
}

EncoderParams EncoderParams::zeros_like(const EncoderParams& p) {
  EncoderParams g = p;
  g.visit([](const std::string&, Matrix& m) { m.fill(0.0); });
  return g;
}

EncoderOutput encoder_forward(const EncoderParams& params, const EncoderConfig& cfg,
                              const EncoderInput& input, bool train_mode, std::uint64_t rng_seed) {
  const std::size_t T = input.ids.size(), d = cfg.model_dim, H = cfg.heads, dk = cfg.head_dim();
  if (input.segments.size() != T || input.mask.size() != T)
    throw ShapeError("ids, segments and mask differ in length");
  if (T == 0) throw ShapeError("empty input sequence");
  if (T > cfg.max_positions)
    throw Error("sequence of length " + std::to_string(T) + " exceeds max_positions " +
                std::to_string(cfg.max_positions));
  if (params.layers.size() != cfg.layers || params.token_embedding.rows() != cfg.vocab_size ||
      params.token_embedding.cols() != d)
    throw ShapeError("encoder parameters do not match the configuration");

  const bool dropout = train_mode && cfg.dropout_rate > 0.0;
  Rng rng(rng_seed);

  EncoderOutput out;
  auto& tape = out.tape;
  tape.ids.assign(input.ids.begin(), input.ids.end());
  tape.segments.assign(input.segments.begin(), input.segments.end());
  tape.mask.assign(input.mask.begin(), input.mask.end());

  Matrix x(T, d);
  for (std::size_t t = 0; t < T; ++t) {
    const auto id = input.ids[t];
    const auto seg = input.segments[t];
    if (id < 0 || static_cast<std::size_t>(id) >= cfg.vocab_size)
      throw Error("token id " + std::to_string(id) + " at position " + std::to_string(t) +
                  " outside vocabulary of size " + std::to_string(cfg.vocab_size));
    if (seg != 0 && seg != 1) throw Error("segment id must be 0 or 1");
    for (std::size_t c = 0; c < d; ++c)
      x(t, c) = params.token_embedding(id, c) + params.embedding_bias(0, c) +
                params.position_embedding(t, c) + params.segment_embedding(seg, c);
  }
  if (dropout) {
    tape.drop0 = dropout_mask(T, d, cfg.dropout_rate, rng);
    apply_mask(x, tape.drop0);
  }
  check_finite(x, "embeddings");

  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
  tape.layers.resize(cfg.layers);
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    const auto& p = params.layers[l];
    auto& lt = tape.layers[l];
    lt.x_in = x;

    layer_norm(x, p.ln1_gain, p.ln1_bias, cfg.layer_norm_eps, lt.ln1, lt.normed1);
    kernels::matmul(lt.normed1, p.wq, lt.q, p.bq.values());
    kernels::matmul(lt.normed1, p.wk, lt.k, p.bk.values());
    kernels::matmul(lt.normed1, p.wv, lt.v, p.bv.values());

    lt.ctx = Matrix(T, d);
    lt.probs.assign(H, Matrix(T, T));
    for (std::size_t h = 0; h < H; ++h) {
      const std::size_t off = h * dk;
      auto& P = lt.probs[h];
      for (std::size_t i = 0; i < T; ++i) {
        double mx = -INFINITY;
        for (std::size_t j = 0; j < T; ++j) {
          if (!input.mask[j]) continue;
          double s = 0.0;
          for (std::size_t c = 0; c < dk; ++c) s += lt.q(i, off + c) * lt.k(j, off + c);
          P(i, j) = s * scale;
          mx = std::max(mx, P(i, j));
        }
        double z = 0.0;
        for (std::size_t j = 0; j < T; ++j) {
          if (!input.mask[j]) {
            P(i, j) = 0.0;
            continue;
          }
          P(i, j) = std::exp(P(i, j) - mx);
          z += P(i, j);
        }
        if (z > 0.0)
          for (std::size_t j = 0; j < T; ++j) P(i, j) /= z;
        for (std::size_t j = 0; j < T; ++j) {
          const double pij = P(i, j);
          if (pij == 0.0) continue;
          for (std::size_t c = 0; c < dk; ++c) lt.ctx(i, off + c) += pij * lt.v(j, off + c);
        }
      }
    }

    Matrix attn;
    kernels::matmul(lt.ctx, p.wo, attn, p.bo.values());
    if (dropout) {
      lt.drop1 = dropout_mask(T, d, cfg.dropout_rate, rng);
      apply_mask(attn, lt.drop1);
    }
    kernels::add_inplace(x, attn);
    lt.x_mid = x;

    layer_norm(x, p.ln2_gain, p.ln2_bias, cfg.layer_norm_eps, lt.ln2, lt.normed2);
    kernels::matmul(lt.normed2, p.w1, lt.pre_act, p.b1.values());
    lt.act = lt.pre_act;
    for (auto& v : lt.act.values()) v = gelu(v);
    Matrix ffn;
    kernels::matmul(lt.act, p.w2, ffn, p.b2.values());
    if (dropout) {
      lt.drop2 = dropout_mask(T, d, cfg.dropout_rate, rng);
      apply_mask(ffn, lt.drop2);
    }
    kernels::add_inplace(x, ffn);
    check_finite(x, "layer " + std::to_string(l));
  }

  tape.x_final = x;
  layer_norm(x, params.final_ln_gain, params.final_ln_bias, cfg.layer_norm_eps, tape.final_ln,
             out.hidden);
  check_finite(out.hidden, "final layer norm");
  return out;
}

Matrix encoder_backward(const EncoderParams& params, const EncoderConfig& cfg,
                        const EncoderTape& tape, const Matrix& grad_hidden, EncoderParams& grads) {
  const std::size_t T = tape.ids.size(), d = cfg.model_dim, H = cfg.heads, dk = cfg.head_dim();
  if (grad_hidden.rows() != T || grad_hidden.cols() != d)
    throw ShapeError("grad_hidden is " + std::to_string(grad_hidden.rows()) + "x" +
                     std::to_string(grad_hidden.cols()) + ", expected " + std::to_string(T) + "x" +
                     std::to_string(d));
  if (tape.layers.size() != cfg.layers || grads.layers.size() != cfg.layers)
    throw ShapeError("tape or gradient buffer does not match the configuration");

  Matrix dx = layer_norm_backward(grad_hidden, params.final_ln_gain, tape.final_ln,
                                  grads.final_ln_gain, grads.final_ln_bias);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));

  for (std::size_t li = cfg.layers; li-- > 0;) {
    const auto& p = params.layers[li];
    auto& g = grads.layers[li];
    const auto& lt = tape.layers[li];

    // feed-forward branch
    Matrix dffn = dx;
    apply_mask(dffn, lt.drop2);
    kernels::matmul_at_b_acc(lt.act, dffn, g.w2);
    kernels::column_sum_acc(dffn, g.b2.values());
    Matrix dact;
    kernels::matmul_a_bt(dffn, p.w2, dact);
    for (std::size_t i = 0; i < dact.size(); ++i)
      dact.values()[i] *= gelu_grad(lt.pre_act.values()[i]);
    kernels::matmul_at_b_acc(lt.normed2, dact, g.w1);
    kernels::column_sum_acc(dact, g.b1.values());
    Matrix dnormed2;
    kernels::matmul_a_bt(dact, p.w1, dnormed2);
    kernels::add_inplace(dx, layer_norm_backward(dnormed2, p.ln2_gain, lt.ln2, g.ln2_gain,
                                                 g.ln2_bias));

    // attention branch
    Matrix dattn = dx;
    apply_mask(dattn, lt.drop1);
    kernels::matmul_at_b_acc(lt.ctx, dattn, g.wo);
    kernels::column_sum_acc(dattn, g.bo.values());
    Matrix dctx;
    kernels::matmul_a_bt(dattn, p.wo, dctx);

    Matrix dq(T, d), dkm(T, d), dv(T, d);
    std::vector<double> dP(T);
    for (std::size_t h = 0; h < H; ++h) {
      const std::size_t off = h * dk;
      const auto& P = lt.probs[h];
      for (std::size_t i = 0; i < T; ++i) {
        double dot = 0.0;
        for (std::size_t j = 0; j < T; ++j) {
          double s = 0.0;
          for (std::size_t c = 0; c < dk; ++c) s += dctx(i, off + c) * lt.v(j, off + c);
          dP[j] = s;
          dot += s * P(i, j);
        }
        for (std::size_t j = 0; j < T; ++j) {
          const double pij = P(i, j);
          if (pij == 0.0) continue;
          for (std::size_t c = 0; c < dk; ++c) dv(j, off + c) += pij * dctx(i, off + c);
          const double ds = pij * (dP[j] - dot) * scale;
          for (std::size_t c = 0; c < dk; ++c) {
            dq(i, off + c) += ds * lt.k(j, off + c);
            dkm(j, off + c) += ds * lt.q(i, off + c);
          }
        }
      }
    }

    kernels::matmul_at_b_acc(lt.normed1, dq, g.wq);
    kernels::column_sum_acc(dq, g.bq.values());
    kernels::matmul_at_b_acc(lt.normed1, dkm, g.wk);
    kernels::column_sum_acc(dkm, g.bk.values());
    kernels::matmul_at_b_acc(lt.normed1, dv, g.wv);
    kernels::column_sum_acc(dv, g.bv.values());
    Matrix dnormed1, tmp;
    kernels::matmul_a_bt(dq, p.wq, dnormed1);
    kernels::matmul_a_bt(dkm, p.wk, tmp);
    kernels::add_inplace(dnormed1, tmp);
    kernels::matmul_a_bt(dv, p.wv, tmp);
    kernels::add_inplace(dnormed1, tmp);
    kernels::add_inplace(dx, layer_norm_backward(dnormed1, p.ln1_gain, lt.ln1, g.ln1_gain,
                                                 g.ln1_bias));
  }

  apply_mask(dx, tape.drop0);
  for (std::size_t t = 0; t < T; ++t) {
    const auto id = static_cast<std::size_t>(tape.ids[t]);
    const auto seg = static_cast<std::size_t>(tape.segments[t]);
    for (std::size_t c = 0; c < d; ++c) {
      const double v = dx(t, c);
      grads.token_embedding(id, c) += v;
      grads.embedding_bias(0, c) += v;
      grads.position_embedding(t, c) += v;
      grads.segment_embedding(seg, c) += v;
    }
  }
  return dx;
}

}  // namespace mrcner
