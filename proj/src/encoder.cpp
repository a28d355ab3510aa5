#include "cmix/encoder.hpp"

#include <cmath>
#include <limits>

namespace cmix {

namespace {

constexpr double kLnEps = 1e-5;

void fill_normal(Tensor& t, Rng& rng, double stddev) {
  for (Eigen::Index r = 0; r < t.v.rows(); ++r) {
    for (Eigen::Index c = 0; c < t.v.cols(); ++c) {
      t.v(r, c) = rng.normal(0.0, stddev);
    }
  }
}

Mat ln_forward(const Mat& x, const Tensor& gamma, const Tensor& beta,
               LnCache* cache) {
  const Eigen::Index n = x.rows(), d = x.cols();
  Mat xhat(n, d);
  Vec rstd(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const double mu = x.row(r).mean();
    const double var = (x.row(r).array() - mu).square().mean();
    const double rs = 1.0 / std::sqrt(var + kLnEps);
    xhat.row(r) = (x.row(r).array() - mu) * rs;
    rstd(r) = rs;
  }
  Mat out = xhat.array().rowwise() * gamma.v.row(0).array();
  out.array().rowwise() += beta.v.row(0).array();
  if (cache) {
    cache->xhat = std::move(xhat);
    cache->rstd = std::move(rstd);
  }
  return out;
}

// dx = rstd * (dxhat - mean(dxhat) - xhat * mean(dxhat .* xhat)) per row.
Mat ln_backward(const Mat& dy, const LnCache& cache, Tensor& gamma, Tensor& beta) {
  gamma.g.row(0).array() += (dy.array() * cache.xhat.array()).colwise().sum();
  beta.g.row(0).array() += dy.array().colwise().sum();
  Mat dxhat = dy.array().rowwise() * gamma.v.row(0).array();
  const Eigen::Index n = dy.rows();
  Mat dx(n, dy.cols());
  for (Eigen::Index r = 0; r < n; ++r) {
    const double m1 = dxhat.row(r).mean();
    const double m2 = (dxhat.row(r).array() * cache.xhat.row(r).array()).mean();
    dx.row(r) =
        (dxhat.row(r).array() - m1 - cache.xhat.row(r).array() * m2) * cache.rstd(r);
  }
  return dx;
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); }

double gelu_grad(double x) {
  constexpr double kInvSqrt2Pi = 0.3989422804014327;
  return 0.5 * (1.0 + std::erf(x / std::sqrt(2.0))) +
         x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

void check_batch_shape(const Mat& x, const MultiTaskBatch& batch, Eigen::Index d) {
  const Eigen::Index n =
      static_cast<Eigen::Index>(batch.size() * batch.seq_len());
  if (x.rows() != n || x.cols() != d) {
    throw ValidationError("encoder: activation shape mismatch");
  }
}

}  // namespace

void EncoderConfig::validate() const {
  if (L < 1) throw ValidationError("encoder config: L must be >= 1");
  if (B < 0 || B >= L) throw ValidationError("encoder config: need 0 <= B < L");
  if (D < 1 || H < 1 || D % H != 0) {
    throw ValidationError("encoder config: D must be a positive multiple of H");
  }
  if (vocab_size < 3) throw ValidationError("encoder config: vocab_size < 3");
  if (max_len < 2) throw ValidationError("encoder config: max_len must be >= 2");
}

std::vector<Tensor*> EncoderLayer::tensors() {
  return {&wq, &bq, &wk, &bk, &wv, &bv, &wo, &bo, &ln1_g, &ln1_b,
          &w1, &b1, &w2, &b2, &ln2_g, &ln2_b};
}

std::vector<Tensor*> EncoderParams::tensors() {
  std::vector<Tensor*> out = {&emb.tok, &emb.pos, &emb.ln_g, &emb.ln_b};
  for (EncoderLayer& layer : layers) {
    for (Tensor* t : layer.tensors()) out.push_back(t);
  }
  return out;
}

std::vector<Tensor*> EncoderParams::bottom_tensors() {
  std::vector<Tensor*> out = {&emb.tok, &emb.pos, &emb.ln_g, &emb.ln_b};
  for (int i = 0; i < cfg.B; ++i) {
    for (Tensor* t : layers[static_cast<std::size_t>(i)].tensors()) out.push_back(t);
  }
  return out;
}

EncoderLayer init_layer(const std::string& prefix, int D, Rng& rng) {
  const int F = 4 * D;
  EncoderLayer layer;
  layer.wq = Tensor(prefix + ".wq", D, D);
  layer.bq = Tensor(prefix + ".bq", 1, D);
  layer.wk = Tensor(prefix + ".wk", D, D);
  layer.bk = Tensor(prefix + ".bk", 1, D);
  layer.wv = Tensor(prefix + ".wv", D, D);
  layer.bv = Tensor(prefix + ".bv", 1, D);
  layer.wo = Tensor(prefix + ".wo", D, D);
  layer.bo = Tensor(prefix + ".bo", 1, D);
  layer.ln1_g = Tensor(prefix + ".ln1_g", 1, D);
  layer.ln1_b = Tensor(prefix + ".ln1_b", 1, D);
  layer.w1 = Tensor(prefix + ".w1", D, F);
  layer.b1 = Tensor(prefix + ".b1", 1, F);
  layer.w2 = Tensor(prefix + ".w2", F, D);
  layer.b2 = Tensor(prefix + ".b2", 1, D);
  layer.ln2_g = Tensor(prefix + ".ln2_g", 1, D);
  layer.ln2_b = Tensor(prefix + ".ln2_b", 1, D);
  for (Tensor* t : {&layer.wq, &layer.wk, &layer.wv, &layer.wo, &layer.w1,
                    &layer.w2}) {
    fill_normal(*t, rng, 0.02);
  }
  layer.ln1_g.v.setOnes();
  layer.ln2_g.v.setOnes();
  return layer;
}

EncoderParams init_encoder(const EncoderConfig& cfg, Rng& rng) {
  cfg.validate();
  EncoderParams params;
  params.cfg = cfg;
  params.emb.tok = Tensor("enc.emb.tok", cfg.vocab_size, cfg.D);
  params.emb.pos = Tensor("enc.emb.pos", cfg.max_len, cfg.D);
  params.emb.ln_g = Tensor("enc.emb.ln_g", 1, cfg.D);
  params.emb.ln_b = Tensor("enc.emb.ln_b", 1, cfg.D);
  fill_normal(params.emb.tok, rng, 0.02);
  fill_normal(params.emb.pos, rng, 0.02);
  params.emb.ln_g.v.setOnes();
  for (int i = 0; i < cfg.L; ++i) {
    params.layers.push_back(
        init_layer("enc.layer" + std::to_string(i), cfg.D, rng));
  }
  return params;
}

Mat embed_forward(const Embeddings& emb, const MultiTaskBatch& batch,
                  EmbedCache* cache) {
  const std::size_t bs = batch.size();
  const std::size_t S = batch.seq_len();
  if (static_cast<Eigen::Index>(S) > emb.pos.v.rows()) {
    throw ValidationError("embed_forward: sequence longer than position table");
  }
  const Eigen::Index D = emb.tok.v.cols();
  Mat pre(static_cast<Eigen::Index>(bs * S), D);
  for (std::size_t s = 0; s < bs; ++s) {
    for (std::size_t j = 0; j < S; ++j) {
      const int id = batch.token_ids[s][j];
      if (id < 0 || id >= emb.tok.v.rows()) {
        throw ValidationError("embed_forward: token id out of range");
      }
      pre.row(static_cast<Eigen::Index>(s * S + j)) =
          emb.tok.v.row(id) + emb.pos.v.row(static_cast<Eigen::Index>(j));
    }
  }
  LnCache ln;
  Mat out = ln_forward(pre, emb.ln_g, emb.ln_b, &ln);
  if (cache) {
    cache->ln = std::move(ln);
    cache->out = out;
  }
  return out;
}

void embed_backward(Embeddings& emb, const MultiTaskBatch& batch,
                    const EmbedCache& cache, const Mat& dout) {
  Mat dpre = ln_backward(dout, cache.ln, emb.ln_g, emb.ln_b);
  const std::size_t bs = batch.size();
  const std::size_t S = batch.seq_len();
  for (std::size_t s = 0; s < bs; ++s) {
    for (std::size_t j = 0; j < S; ++j) {
      const Eigen::Index n = static_cast<Eigen::Index>(s * S + j);
      emb.tok.g.row(batch.token_ids[s][j]) += dpre.row(n);
      emb.pos.g.row(static_cast<Eigen::Index>(j)) += dpre.row(n);
    }
  }
}

Mat layer_forward(const EncoderLayer& layer, const Mat& x,
                  const MultiTaskBatch& batch, int H, LayerCache* cache) {
  const Eigen::Index D = layer.wq.v.rows();
  check_batch_shape(x, batch, D);
  const std::size_t bs = batch.size();
  const Eigen::Index S = static_cast<Eigen::Index>(batch.seq_len());
  const Eigen::Index dh = D / H;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();

  Mat q = x * layer.wq.v;
  q.rowwise() += layer.bq.v.row(0);
  Mat k = x * layer.wk.v;
  k.rowwise() += layer.bk.v.row(0);
  Mat v = x * layer.wv.v;
  v.rowwise() += layer.bv.v.row(0);

  Mat ctx(x.rows(), D);
  std::vector<Mat> attn;
  attn.reserve(bs * static_cast<std::size_t>(H));
  for (std::size_t s = 0; s < bs; ++s) {
    const Eigen::Index r0 = static_cast<Eigen::Index>(s) * S;
    for (int h = 0; h < H; ++h) {
      const Eigen::Index c0 = h * dh;
      Mat scores = q.block(r0, c0, S, dh) * k.block(r0, c0, S, dh).transpose();
      scores *= scale;
      for (Eigen::Index j = 0; j < S; ++j) {
        if (batch.attention_mask[s][static_cast<std::size_t>(j)] == 0) {
          scores.col(j).setConstant(kNegInf);
        }
      }
      Mat probs(S, S);
      for (Eigen::Index r = 0; r < S; ++r) {
        const double m = scores.row(r).maxCoeff();
        Eigen::ArrayXd e = (scores.row(r).array() - m).exp();
        probs.row(r) = e / e.sum();
      }
      ctx.block(r0, c0, S, dh) = probs * v.block(r0, c0, S, dh);
      attn.push_back(std::move(probs));
    }
  }

  Mat attn_out = ctx * layer.wo.v;
  attn_out.rowwise() += layer.bo.v.row(0);
  Mat res1 = x + attn_out;
  LnCache ln1;
  Mat ln1_out = ln_forward(res1, layer.ln1_g, layer.ln1_b, &ln1);

  Mat h1 = ln1_out * layer.w1.v;
  h1.rowwise() += layer.b1.v.row(0);
  Mat a1 = h1.unaryExpr([](double t) { return gelu(t); });
  Mat h2 = a1 * layer.w2.v;
  h2.rowwise() += layer.b2.v.row(0);
  Mat res2 = ln1_out + h2;
  LnCache ln2;
  Mat out = ln_forward(res2, layer.ln2_g, layer.ln2_b, &ln2);

  if (cache) {
    cache->x = x;
    cache->q = std::move(q);
    cache->k = std::move(k);
    cache->v = std::move(v);
    cache->attn = std::move(attn);
    cache->ctx = std::move(ctx);
    cache->attn_out = std::move(attn_out);
    cache->ln1 = std::move(ln1);
    cache->ln1_out = std::move(ln1_out);
    cache->h1 = std::move(h1);
    cache->a1 = std::move(a1);
    cache->h2 = std::move(h2);
    cache->ln2 = std::move(ln2);
    cache->out = out;
  }
  return out;
}

Mat layer_backward(EncoderLayer& layer, const MultiTaskBatch& batch, int H,
                   const LayerCache& cache, const Mat& dout) {
  const Eigen::Index D = layer.wq.v.rows();
  check_batch_shape(dout, batch, D);
  const std::size_t bs = batch.size();
  const Eigen::Index S = static_cast<Eigen::Index>(batch.seq_len());
  const Eigen::Index dh = D / H;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  Mat dres2 = ln_backward(dout, cache.ln2, layer.ln2_g, layer.ln2_b);
  Mat dln1_out = dres2;
  const Mat& dh2 = dres2;

  layer.w2.g += cache.a1.transpose() * dh2;
  layer.b2.g.row(0) += dh2.colwise().sum();
  Mat da1 = dh2 * layer.w2.v.transpose();
  Mat dh1 = da1.array() * cache.h1.unaryExpr([](double t) { return gelu_grad(t); }).array();
  layer.w1.g += cache.ln1_out.transpose() * dh1;
  layer.b1.g.row(0) += dh1.colwise().sum();
  dln1_out += dh1 * layer.w1.v.transpose();

  Mat dres1 = ln_backward(dln1_out, cache.ln1, layer.ln1_g, layer.ln1_b);
  Mat dx = dres1;
  const Mat& dattn_out = dres1;

  layer.wo.g += cache.ctx.transpose() * dattn_out;
  layer.bo.g.row(0) += dattn_out.colwise().sum();
  Mat dctx = dattn_out * layer.wo.v.transpose();

  Mat dq = Mat::Zero(dout.rows(), D);
  Mat dk = Mat::Zero(dout.rows(), D);
  Mat dv = Mat::Zero(dout.rows(), D);
  for (std::size_t s = 0; s < bs; ++s) {
    const Eigen::Index r0 = static_cast<Eigen::Index>(s) * S;
    for (int h = 0; h < H; ++h) {
      const Eigen::Index c0 = h * dh;
      const Mat& probs = cache.attn[s * static_cast<std::size_t>(H) +
                                    static_cast<std::size_t>(h)];
      const auto dctx_blk = dctx.block(r0, c0, S, dh);
      Mat dA = dctx_blk * cache.v.block(r0, c0, S, dh).transpose();
      dv.block(r0, c0, S, dh) = probs.transpose() * dctx_blk;
      // softmax backward: dS = A .* (dA - rowsum(dA .* A))
      Vec rowsum = (dA.array() * probs.array()).rowwise().sum();
      Mat dS = probs.array() * (dA.array().colwise() - rowsum.array());
      dq.block(r0, c0, S, dh) = dS * cache.k.block(r0, c0, S, dh) * scale;
      dk.block(r0, c0, S, dh) =
          dS.transpose() * cache.q.block(r0, c0, S, dh) * scale;
    }
  }

  layer.wq.g += cache.x.transpose() * dq;
  layer.bq.g.row(0) += dq.colwise().sum();
  layer.wk.g += cache.x.transpose() * dk;
  layer.bk.g.row(0) += dk.colwise().sum();
  layer.wv.g += cache.x.transpose() * dv;
  layer.bv.g.row(0) += dv.colwise().sum();
  dx += dq * layer.wq.v.transpose();
  dx += dk * layer.wk.v.transpose();
  dx += dv * layer.wv.v.transpose();
  return dx;
}

Mat cls_rows(const Mat& x, std::size_t batch_size, std::size_t seq_len) {
  Mat out(static_cast<Eigen::Index>(batch_size), x.cols());
  for (std::size_t s = 0; s < batch_size; ++s) {
    out.row(static_cast<Eigen::Index>(s)) =
        x.row(static_cast<Eigen::Index>(s * seq_len));
  }
  return out;
}

std::pair<Mat, Mat> forward_encoder(const EncoderParams& params,
                                    const MultiTaskBatch& batch) {
  Mat x = embed_forward(params.emb, batch, nullptr);
  Mat bottom = params.cfg.B == 0 ? x : Mat();
  for (int i = 0; i < params.cfg.L; ++i) {
    x = layer_forward(params.layers[static_cast<std::size_t>(i)], x, batch,
                      params.cfg.H, nullptr);
    if (i + 1 == params.cfg.B) bottom = x;
  }
  return {cls_rows(bottom, batch.size(), batch.seq_len()),
          cls_rows(x, batch.size(), batch.seq_len())};
}

}  // namespace cmix
