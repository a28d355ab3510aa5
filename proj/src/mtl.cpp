#include "cmix/mtl.hpp"

#include <cmath>

namespace cmix {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Mat scatter_cls(const Mat& rows, std::size_t batch_size, std::size_t seq_len,
                Eigen::Index d) {
  Mat out = Mat::Zero(static_cast<Eigen::Index>(batch_size * seq_len), d);
  for (std::size_t s = 0; s < batch_size; ++s) {
    out.row(static_cast<Eigen::Index>(s * seq_len)) =
        rows.row(static_cast<Eigen::Index>(s));
  }
  return out;
}

bool any_trainable(const std::vector<Tensor*>& tensors) {
  for (const Tensor* t : tensors) {
    if (t->trainable) return true;
  }
  return false;
}

}  // namespace

TaskLossSpec TaskLossSpec::from_counts(std::size_t positives, std::size_t negatives) {
  if (positives == 0 || negatives == 0) {
    throw ValidationError("TaskLossSpec: both classes must be present");
  }
  const double total = static_cast<double>(positives + negatives);
  TaskLossSpec spec;
  spec.w_pos = static_cast<double>(negatives) / total;
  spec.w_neg = static_cast<double>(positives) / total;
  return spec;
}

void TaskLossSpec::validate() const {
  if (w_neg <= 0.0 || w_pos <= 0.0) {
    throw ValidationError("TaskLossSpec: weights must be positive");
  }
}

Vec gate(const Vec& h_bert, const Vec& h_task, const Mat& w_g, const Vec& b_g) {
  const Eigen::Index d = h_bert.size();
  if (h_task.size() != d || w_g.rows() != d || w_g.cols() != 2 * d ||
      b_g.size() != d) {
    throw ValidationError("gate: shape mismatch");
  }
  Vec concat(2 * d);
  concat << h_bert, h_task;
  Vec alpha = (w_g * concat + b_g).unaryExpr([](double z) { return sigmoid(z); });
  return alpha.array() * h_bert.array() +
         (1.0 - alpha.array()) * h_task.array();
}

double weighted_ce(const Mat& logits, const std::vector<int>& labels,
                   const TaskLossSpec& spec, Mat* dlogits) {
  if (logits.cols() != 2 ||
      logits.rows() != static_cast<Eigen::Index>(labels.size())) {
    throw ValidationError("weighted_ce: logits/labels shape mismatch");
  }
  spec.validate();
  if (dlogits) *dlogits = Mat::Zero(logits.rows(), 2);

  std::size_t n_valid = 0;
  for (int y : labels) {
    if (y != 0 && y != 1 && y != kIgnoreLabel) {
      throw ValidationError("weighted_ce: label must be 0, 1 or 999");
    }
    if (y != kIgnoreLabel) ++n_valid;
  }
  if (n_valid == 0) return 0.0;

  double loss = 0.0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y == kIgnoreLabel) continue;
    const double l0 = logits(i, 0), l1 = logits(i, 1);
    const double m = std::max(l0, l1);
    const double lse = m + std::log(std::exp(l0 - m) + std::exp(l1 - m));
    const double w = y == 1 ? spec.w_pos : spec.w_neg;
    loss -= w * (logits(i, y) - lse);
    if (dlogits) {
      (*dlogits)(i, 0) = w * std::exp(l0 - lse);
      (*dlogits)(i, 1) = w * std::exp(l1 - lse);
      (*dlogits)(i, y) -= w;
    }
  }
  const double inv = 1.0 / static_cast<double>(n_valid);
  if (dlogits) *dlogits *= inv;
  return loss * inv;
}

double sharing_penalty(std::map<Task, Tensor*>& reg_mats, double lambda,
                       bool accumulate) {
  if (lambda < 0.0) throw ValidationError("sharing_penalty: lambda must be >= 0");
  if (lambda == 0.0 || reg_mats.size() < 2) return 0.0;
  double total = 0.0;
  for (auto it = reg_mats.begin(); it != reg_mats.end(); ++it) {
    auto jt = it;
    for (++jt; jt != reg_mats.end(); ++jt) {
      Tensor& wi = *it->second;
      Tensor& wj = *jt->second;
      const Mat diff = wi.v - wj.v;
      const double norm = diff.norm();
      total += norm;
      if (accumulate && norm > 0.0) {
        wi.g += (lambda / norm) * diff;
        wj.g -= (lambda / norm) * diff;
      }
    }
  }
  return lambda * total;
}

double NeuralModel::loss_only(const MultiTaskBatch& batch,
                              const JointLossConfig& cfg) const {
  const std::map<Task, Mat> logits = forward(batch);
  double total = 0.0;
  for (const Task t : tasks()) {
    const auto labels_it = batch.labels.find(t);
    if (labels_it == batch.labels.end()) continue;
    total += weighted_ce(logits.at(t), labels_it->second, cfg.task_specs.at(t),
                         nullptr);
  }
  return total;
}

// ---------------------------------------------------------------------------
// GatedMtlModel
// ---------------------------------------------------------------------------

struct GatedMtlModel::ForwardCache {
  EmbedCache emb;
  std::vector<LayerCache> bottom;
  std::vector<LayerCache> shared;
  std::map<Task, std::vector<LayerCache>> tops;
  Mat xb;
  Mat h_bert;
  std::map<Task, Mat> h_task;
  std::map<Task, Mat> alpha;
  std::map<Task, Mat> hcat;
  std::map<Task, Mat> head_in;
  std::map<Task, Mat> logits;
};

GatedMtlModel::GatedMtlModel(const GatedMtlConfig& cfg, Rng& rng) : cfg_(cfg) {
  cfg_.enc.validate();
  if (cfg_.task_list.empty()) {
    throw ValidationError("GatedMtlModel: task list is empty");
  }
  encoder = init_encoder(cfg_.enc, rng);
  const int D = cfg_.enc.D;
  for (Task t : cfg_.task_list) {
    const std::string tname = to_string(t);
    std::vector<EncoderLayer> top;
    for (int i = cfg_.enc.B; i < cfg_.enc.L; ++i) {
      top.push_back(
          init_layer("top." + tname + ".layer" + std::to_string(i), D, rng));
    }
    task_tops[t] = std::move(top);

    GateParams gp;
    gp.w = Tensor("gate." + tname + ".w", D, 2 * D);
    gp.b = Tensor("gate." + tname + ".b", 1, D);
    for (Eigen::Index r = 0; r < gp.w.v.rows(); ++r) {
      for (Eigen::Index c = 0; c < gp.w.v.cols(); ++c) {
        gp.w.v(r, c) = rng.normal(0.0, 0.02);
      }
    }
    if (!cfg_.gate_enabled) {
      gp.w.trainable = false;
      gp.b.trainable = false;
    }
    gates[t] = std::move(gp);

    HeadParams hp;
    hp.w = Tensor("head." + tname + ".w", 2, D);
    hp.b = Tensor("head." + tname + ".b", 1, 2);
    for (Eigen::Index r = 0; r < hp.w.v.rows(); ++r) {
      for (Eigen::Index c = 0; c < hp.w.v.cols(); ++c) {
        hp.w.v(r, c) = rng.normal(0.0, 0.02);
      }
    }
    heads[t] = std::move(hp);
  }
}

std::vector<Tensor*> GatedMtlModel::params() {
  std::vector<Tensor*> out = encoder.tensors();
  for (Task t : cfg_.task_list) {
    for (EncoderLayer& layer : task_tops.at(t)) {
      for (Tensor* p : layer.tensors()) out.push_back(p);
    }
    out.push_back(&gates.at(t).w);
    out.push_back(&gates.at(t).b);
    out.push_back(&heads.at(t).w);
    out.push_back(&heads.at(t).b);
  }
  return out;
}

void GatedMtlModel::freeze_bottom() {
  for (Tensor* t : encoder.bottom_tensors()) t->trainable = false;
}

Tensor& GatedMtlModel::reg_matrix(Task t, RegLayer which) {
  std::vector<EncoderLayer>& top = task_tops.at(t);
  if (top.empty()) throw ValidationError("reg_matrix: task top has no layers");
  if (which == RegLayer::second_last && top.size() < 2) {
    throw ValidationError("reg_matrix: top has no second-last layer");
  }
  const std::size_t idx =
      which == RegLayer::last ? top.size() - 1 : top.size() - 2;
  return top[idx].w2;
}

void GatedMtlModel::run_forward(const MultiTaskBatch& batch,
                                ForwardCache& fc) const {
  for (const auto& [t, unused] : batch.labels) {
    if (task_tops.find(t) == task_tops.end()) {
      throw ValidationError("forward: batch labels name unknown task " +
                            to_string(t));
    }
  }
  const std::size_t bs = batch.size();
  const std::size_t S = batch.seq_len();
  const int H = cfg_.enc.H;
  const Eigen::Index D = cfg_.enc.D;

  Mat x = embed_forward(encoder.emb, batch, &fc.emb);
  fc.bottom.resize(static_cast<std::size_t>(cfg_.enc.B));
  for (int i = 0; i < cfg_.enc.B; ++i) {
    x = layer_forward(encoder.layers[static_cast<std::size_t>(i)], x, batch, H,
                      &fc.bottom[static_cast<std::size_t>(i)]);
  }
  fc.xb = x;

  const std::size_t n_top = static_cast<std::size_t>(cfg_.enc.L - cfg_.enc.B);
  fc.shared.resize(n_top);
  Mat xs = fc.xb;
  for (std::size_t i = 0; i < n_top; ++i) {
    xs = layer_forward(encoder.layers[static_cast<std::size_t>(cfg_.enc.B) + i],
                       xs, batch, H, &fc.shared[i]);
  }
  fc.h_bert = cls_rows(xs, bs, S);

  for (Task t : cfg_.task_list) {
    auto& caches = fc.tops[t];
    caches.resize(n_top);
    Mat xt = fc.xb;
    const std::vector<EncoderLayer>& top = task_tops.at(t);
    for (std::size_t i = 0; i < n_top; ++i) {
      xt = layer_forward(top[i], xt, batch, H, &caches[i]);
    }
    Mat h_task = cls_rows(xt, bs, S);

    Mat head_in;
    if (cfg_.gate_enabled) {
      const GateParams& gp = gates.at(t);
      Mat hcat(static_cast<Eigen::Index>(bs), 2 * D);
      hcat.leftCols(D) = fc.h_bert;
      hcat.rightCols(D) = h_task;
      Mat z = hcat * gp.w.v.transpose();
      z.rowwise() += gp.b.v.row(0);
      Mat alpha = z.unaryExpr([](double u) { return sigmoid(u); });
      head_in = (alpha.array() * fc.h_bert.array() +
                 (1.0 - alpha.array()) * h_task.array())
                    .matrix();
      fc.alpha[t] = std::move(alpha);
      fc.hcat[t] = std::move(hcat);
    } else {
      head_in = h_task;
    }

    const HeadParams& hp = heads.at(t);
    Mat logits = head_in * hp.w.v.transpose();
    logits.rowwise() += hp.b.v.row(0);

    fc.h_task[t] = std::move(h_task);
    fc.head_in[t] = std::move(head_in);
    fc.logits[t] = std::move(logits);
  }
}

std::map<Task, Mat> GatedMtlModel::forward(const MultiTaskBatch& batch) const {
  ForwardCache fc;
  run_forward(batch, fc);
  return std::move(fc.logits);
}

LossBreakdown GatedMtlModel::forward_backward(const MultiTaskBatch& batch,
                                              const JointLossConfig& cfg) {
  ForwardCache fc;
  run_forward(batch, fc);
  const std::size_t bs = batch.size();
  const std::size_t S = batch.seq_len();
  const int H = cfg_.enc.H;
  const Eigen::Index D = cfg_.enc.D;
  const std::size_t n_top = static_cast<std::size_t>(cfg_.enc.L - cfg_.enc.B);

  LossBreakdown out;
  Mat dh_bert = Mat::Zero(static_cast<Eigen::Index>(bs), D);
  Mat dxb = Mat::Zero(static_cast<Eigen::Index>(bs * S), D);

  for (Task t : cfg_.task_list) {
    const auto spec_it = cfg.task_specs.find(t);
    if (spec_it == cfg.task_specs.end()) {
      throw ValidationError("joint loss: no TaskLossSpec for task " + to_string(t));
    }
    const auto labels_it = batch.labels.find(t);
    Mat dlogits;
    if (labels_it != batch.labels.end()) {
      out.per_task[t] =
          weighted_ce(fc.logits.at(t), labels_it->second, spec_it->second, &dlogits);
    } else {
      out.per_task[t] = 0.0;
      dlogits = Mat::Zero(static_cast<Eigen::Index>(bs), 2);
    }
    out.total += out.per_task[t];

    HeadParams& hp = heads.at(t);
    hp.w.g += dlogits.transpose() * fc.head_in.at(t);
    hp.b.g.row(0) += dlogits.colwise().sum();
    Mat dhead_in = dlogits * hp.w.v;

    Mat dh_task;
    if (cfg_.gate_enabled) {
      GateParams& gp = gates.at(t);
      const Mat& alpha = fc.alpha.at(t);
      const Mat& h_task = fc.h_task.at(t);
      Mat dalpha =
          (dhead_in.array() * (fc.h_bert.array() - h_task.array())).matrix();
      Mat dz =
          (dalpha.array() * alpha.array() * (1.0 - alpha.array())).matrix();
      gp.w.g += dz.transpose() * fc.hcat.at(t);
      gp.b.g.row(0) += dz.colwise().sum();
      Mat dhcat = dz * gp.w.v;
      dh_bert +=
          (dhead_in.array() * alpha.array()).matrix() + dhcat.leftCols(D);
      dh_task = (dhead_in.array() * (1.0 - alpha.array())).matrix() +
                dhcat.rightCols(D);
    } else {
      dh_task = std::move(dhead_in);
    }

    Mat dxt = scatter_cls(dh_task, bs, S, D);
    std::vector<EncoderLayer>& top = task_tops.at(t);
    for (std::size_t i = n_top; i-- > 0;) {
      dxt = layer_backward(top[i], batch, H, fc.tops.at(t)[i], dxt);
    }
    dxb += dxt;
  }

  if (cfg_.task_list.size() >= 2 && cfg.lambda > 0.0) {
    std::map<Task, Tensor*> reg_mats;
    for (Task t : cfg_.task_list) reg_mats[t] = &reg_matrix(t, cfg.reg_layer);
    out.reg = sharing_penalty(reg_mats, cfg.lambda, true);
    out.total += out.reg;
  }

  if (cfg_.gate_enabled) {
    Mat dxs = scatter_cls(dh_bert, bs, S, D);
    for (std::size_t i = n_top; i-- > 0;) {
      dxs = layer_backward(
          encoder.layers[static_cast<std::size_t>(cfg_.enc.B) + i], batch, H,
          fc.shared[i], dxs);
    }
    dxb += dxs;
  }

  if (any_trainable(encoder.bottom_tensors())) {
    for (std::size_t i = static_cast<std::size_t>(cfg_.enc.B); i-- > 0;) {
      dxb = layer_backward(encoder.layers[i], batch, H, fc.bottom[i], dxb);
    }
    embed_backward(encoder.emb, batch, fc.emb, dxb);
  }

  for (Tensor* t : params()) {
    if (!t->trainable) t->g.setZero();
  }
  return out;
}

double GatedMtlModel::loss_only(const MultiTaskBatch& batch,
                                const JointLossConfig& cfg) const {
  double total = NeuralModel::loss_only(batch, cfg);
  if (cfg_.task_list.size() >= 2 && cfg.lambda > 0.0) {
    std::map<Task, Tensor*> reg_mats;
    auto* self = const_cast<GatedMtlModel*>(this);
    for (Task t : cfg_.task_list) {
      reg_mats[t] = &self->reg_matrix(t, cfg.reg_layer);
    }
    total += sharing_penalty(reg_mats, cfg.lambda, false);
  }
  return total;
}

// ---------------------------------------------------------------------------
// SingleTaskModel
// ---------------------------------------------------------------------------

struct SingleTaskModel::ForwardCache {
  EmbedCache emb;
  std::vector<LayerCache> layers;
  Mat h_cls;
  Mat logits;
};

SingleTaskModel::SingleTaskModel(const EncoderConfig& cfg, Task task, Rng& rng)
    : task_(task) {
  encoder = init_encoder(cfg, rng);
  head_w = Tensor("head." + to_string(task) + ".w", 2, cfg.D);
  head_b = Tensor("head." + to_string(task) + ".b", 1, 2);
  for (Eigen::Index r = 0; r < head_w.v.rows(); ++r) {
    for (Eigen::Index c = 0; c < head_w.v.cols(); ++c) {
      head_w.v(r, c) = rng.normal(0.0, 0.02);
    }
  }
}

std::vector<Tensor*> SingleTaskModel::params() {
  std::vector<Tensor*> out = encoder.tensors();
  out.push_back(&head_w);
  out.push_back(&head_b);
  return out;
}

void SingleTaskModel::freeze_layers(int k) {
  if (k < 0 || k > encoder.cfg.L) {
    throw ValidationError("freeze_layers: k out of range");
  }
  for (Tensor* t : {&encoder.emb.tok, &encoder.emb.pos, &encoder.emb.ln_g,
                    &encoder.emb.ln_b}) {
    t->trainable = false;
  }
  for (int i = 0; i < k; ++i) {
    for (Tensor* t : encoder.layers[static_cast<std::size_t>(i)].tensors()) {
      t->trainable = false;
    }
  }
}

void SingleTaskModel::run_forward(const MultiTaskBatch& batch,
                                  ForwardCache& fc) const {
  for (const auto& [t, unused] : batch.labels) {
    if (t != task_) {
      throw ValidationError("forward: batch labels name unknown task " +
                            to_string(t));
    }
  }
  Mat x = embed_forward(encoder.emb, batch, &fc.emb);
  fc.layers.resize(static_cast<std::size_t>(encoder.cfg.L));
  for (int i = 0; i < encoder.cfg.L; ++i) {
    x = layer_forward(encoder.layers[static_cast<std::size_t>(i)], x, batch,
                      encoder.cfg.H, &fc.layers[static_cast<std::size_t>(i)]);
  }
  fc.h_cls = cls_rows(x, batch.size(), batch.seq_len());
  fc.logits = fc.h_cls * head_w.v.transpose();
  fc.logits.rowwise() += head_b.v.row(0);
}

std::map<Task, Mat> SingleTaskModel::forward(const MultiTaskBatch& batch) const {
  ForwardCache fc;
  run_forward(batch, fc);
  return {{task_, std::move(fc.logits)}};
}

LossBreakdown SingleTaskModel::forward_backward(const MultiTaskBatch& batch,
                                                const JointLossConfig& cfg) {
  ForwardCache fc;
  run_forward(batch, fc);

  LossBreakdown out;
  Mat dlogits;
  const auto labels_it = batch.labels.find(task_);
  if (labels_it != batch.labels.end()) {
    out.per_task[task_] = weighted_ce(fc.logits, labels_it->second,
                                      cfg.task_specs.at(task_), &dlogits);
  } else {
    out.per_task[task_] = 0.0;
    dlogits = Mat::Zero(static_cast<Eigen::Index>(batch.size()), 2);
  }
  out.total = out.per_task[task_];

  head_w.g += dlogits.transpose() * fc.h_cls;
  head_b.g.row(0) += dlogits.colwise().sum();
  Mat dh = dlogits * head_w.v;

  Mat dx = scatter_cls(dh, batch.size(), batch.seq_len(), encoder.cfg.D);
  const bool emb_trainable =
      encoder.emb.tok.trainable || encoder.emb.pos.trainable ||
      encoder.emb.ln_g.trainable || encoder.emb.ln_b.trainable;
  int lowest = encoder.cfg.L;
  for (int i = 0; i < encoder.cfg.L; ++i) {
    if (any_trainable(encoder.layers[static_cast<std::size_t>(i)].tensors())) {
      lowest = i;
      break;
    }
  }
  const int stop = emb_trainable ? 0 : lowest;
  for (int i = encoder.cfg.L; i-- > stop;) {
    dx = layer_backward(encoder.layers[static_cast<std::size_t>(i)], batch,
                        encoder.cfg.H, fc.layers[static_cast<std::size_t>(i)],
                        dx);
  }
  if (emb_trainable) embed_backward(encoder.emb, batch, fc.emb, dx);

  for (Tensor* t : params()) {
    if (!t->trainable) t->g.setZero();
  }
  return out;
}

}  // namespace cmix
