#pragma once

#include <vector>

#include "cmix/rng.hpp"
#include "cmix/sample.hpp"
#include "cmix/tensor.hpp"

namespace cmix {

// Transformer encoder geometry. Layers 0..B-1 form the bottom module,
// layers B..L-1 the shared top replica.
struct EncoderConfig {
  int L = 6;
  int B = 4;
  int D = 64;
  int H = 4;
  int vocab_size = 0;
  int max_len = 64;

  void validate() const;
};

struct Embeddings {
  Tensor tok;   // vocab_size x D
  Tensor pos;   // max_len x D
  Tensor ln_g;  // 1 x D
  Tensor ln_b;  // 1 x D
};

// Post-norm layer: x -> LN1(x + attn(x)) -> LN2(.. + ffn(..)).
struct EncoderLayer {
  Tensor wq, bq, wk, bk, wv, bv, wo, bo;  // D x D projections, 1 x D biases
  Tensor ln1_g, ln1_b;
  Tensor w1, b1;  // D x 4D, 1 x 4D
  Tensor w2, b2;  // 4D x D, 1 x D
  Tensor ln2_g, ln2_b;

  std::vector<Tensor*> tensors();
};

struct EncoderParams {
  EncoderConfig cfg;
  Embeddings emb;
  std::vector<EncoderLayer> layers;

  std::vector<Tensor*> tensors();
  std::vector<Tensor*> bottom_tensors();  // embeddings + layers 0..B-1
};

// Weights ~ N(0, 0.02^2), biases and LN shifts zero, LN scales one.
EncoderParams init_encoder(const EncoderConfig& cfg, Rng& rng);
EncoderLayer init_layer(const std::string& prefix, int D, Rng& rng);

// ---------------------------------------------------------------------------
// Sequence-level forward/backward primitives. Activations are stored as
// [batch*seq_len x D] with contiguous per-sample row blocks; padded key
// positions are excluded from attention via the mask, so CLS outputs are
// invariant to pad extension.
// ---------------------------------------------------------------------------

struct LnCache {
  Mat xhat;  // normalized input
  Vec rstd;  // per-row 1/sqrt(var+eps)
};

struct LayerCache {
  Mat x;
  Mat q, k, v;
  std::vector<Mat> attn;  // batch*H softmax matrices, each S x S
  Mat ctx;
  Mat attn_out;
  LnCache ln1;
  Mat ln1_out;
  Mat h1;  // pre-activation
  Mat a1;  // post-activation
  Mat h2;
  LnCache ln2;
  Mat out;
};

struct EmbedCache {
  LnCache ln;
  Mat out;
};

Mat embed_forward(const Embeddings& emb, const MultiTaskBatch& batch,
                  EmbedCache* cache);
void embed_backward(Embeddings& emb, const MultiTaskBatch& batch,
                    const EmbedCache& cache, const Mat& dout);

Mat layer_forward(const EncoderLayer& layer, const Mat& x,
                  const MultiTaskBatch& batch, int H, LayerCache* cache);
// Accumulates parameter gradients into `layer` and returns dL/dx.
Mat layer_backward(EncoderLayer& layer, const MultiTaskBatch& batch, int H,
                   const LayerCache& cache, const Mat& dout);

// CLS-position rows (one per sample) of a [batch*S x D] activation matrix.
Mat cls_rows(const Mat& x, std::size_t batch_size, std::size_t seq_len);

// CLS hidden states after the bottom module and after the full stack.
std::pair<Mat, Mat> forward_encoder(const EncoderParams& params,
                                    const MultiTaskBatch& batch);

}  // namespace cmix
