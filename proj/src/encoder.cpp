#include "optima/encoder.hpp"

#include "optima/hashing.hpp"

#include <cmath>
#include <sstream>

namespace optima {

namespace {

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;

Matrix gather_rows(const Matrix& src, const std::vector<int>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), src.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = src.row(rows[i]);
  return out;
}

void check_finite(const Matrix& m, const char* stage) {
  if (!m.allFinite()) {
    std::ostringstream msg;
    msg << "encoder forward: non-finite values at stage '" << stage << "' (" << m.rows() << "x" << m.cols()
        << ", max |finite| = ";
    double mx = 0.0;
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      const double x = m.data()[i];
      if (std::isfinite(x)) mx = std::max(mx, std::abs(x));
    }
    msg << mx << ")";
    throw NumericalError(msg.str());
  }
}

Vector softmax(const Vector& logits) {
  const double mx = logits.maxCoeff();
  Vector e = (logits.array() - mx).exp();
  return e / e.sum();
}

}  // namespace

double gelu(double u) { return 0.5 * u * (1.0 + std::tanh(kGeluC * (u + kGeluA * u * u * u))); }

double gelu_grad(double u) {
  const double t = std::tanh(kGeluC * (u + kGeluA * u * u * u));
  return 0.5 * (1.0 + t) + 0.5 * u * (1.0 - t * t) * kGeluC * (1.0 + 3.0 * kGeluA * u * u);
}

std::size_t BackboneWeights::parameter_count() const {
  return static_cast<std::size_t>(query.size() + key.size() + value.size() + output.size() + ffn_in.size() +
                                  ffn_out.size() + scale_attn.size() + scale_ffn.size());
}

void BackboneWeights::set_zero() {
  query.setZero();
  key.setZero();
  value.setZero();
  output.setZero();
  ffn_in.setZero();
  ffn_out.setZero();
  scale_attn.setZero();
  scale_ffn.setZero();
}

void BackboneWeights::axpy(double alpha, const BackboneWeights& o) {
  query += alpha * o.query;
  key += alpha * o.key;
  value += alpha * o.value;
  output += alpha * o.output;
  ffn_in += alpha * o.ffn_in;
  ffn_out += alpha * o.ffn_out;
  scale_attn += alpha * o.scale_attn;
  scale_ffn += alpha * o.scale_ffn;
}

bool BackboneWeights::all_finite() const {
  return query.allFinite() && key.allFinite() && value.allFinite() && output.allFinite() && ffn_in.allFinite() &&
         ffn_out.allFinite() && scale_attn.allFinite() && scale_ffn.allFinite();
}

std::vector<double> BackboneWeights::flatten() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  auto put = [&](const auto& m) { out.insert(out.end(), m.data(), m.data() + m.size()); };
  put(query);
  put(key);
  put(value);
  put(output);
  put(ffn_in);
  put(ffn_out);
  put(scale_attn);
  put(scale_ffn);
  return out;
}

void BackboneWeights::assign(std::span<const double> flat) {
  if (flat.size() != parameter_count()) throw InputError("BackboneWeights::assign: size mismatch");
  std::size_t at = 0;
  auto take = [&](auto& m) {
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(at), m.size(), m.data());
    at += static_cast<std::size_t>(m.size());
  };
  take(query);
  take(key);
  take(value);
  take(output);
  take(ffn_in);
  take(ffn_out);
  take(scale_attn);
  take(scale_ffn);
}

BackboneWeights make_backbone(const BackboneSpec& spec) {
  if (spec.dim <= 0) throw InputError("backbone dimension must be positive");
  const int d = spec.dim;
  Rng rng = derive_rng(spec.seed, 0xbacb07e);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto gaussian = [&](int rows, int cols, double scale) {
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * normal(rng);
    return m;
  };
  const double sd = 1.0 / std::sqrt(static_cast<double>(d));
  BackboneWeights w;
  w.query = gaussian(d, d, sd);
  w.key = gaussian(d, d, sd);
  w.value = spec.copy_strength * Matrix::Identity(d, d) + gaussian(d, d, sd * spec.copy_noise);
  w.output = spec.copy_strength * Matrix::Identity(d, d) + gaussian(d, d, sd * spec.copy_noise);
  w.ffn_in = gaussian(d, 4 * d, sd);
  w.ffn_out = gaussian(4 * d, d, 1.0 / std::sqrt(4.0 * d));
  w.scale_attn = Vector::Constant(d, spec.layer_scale);
  w.scale_ffn = Vector::Constant(d, spec.layer_scale);
  return w;
}

VerbalizerHead make_verbalizer(const EmbeddingTable& table, std::vector<std::string> labels, double scale) {
  const auto& layout = table.layout();
  if (static_cast<int>(labels.size()) != layout.classes) {
    throw InputError("verbalizer has " + std::to_string(labels.size()) + " labels, table has " +
                     std::to_string(layout.classes) + " verbalizer tokens");
  }
  VerbalizerHead head;
  head.readout.resize(layout.classes, table.dim());
  for (int c = 0; c < layout.classes; ++c) head.readout.row(c) = scale * table.rows().row(layout.verbalizer_id(c));
  head.labels = std::move(labels);
  return head;
}

ForwardPass forward(const EmbeddedSequence& seq, const BackboneWeights& w, const VerbalizerHead& head,
                    const ForwardOptions& options) {
  const int d = w.dim();
  if (seq.embeddings.cols() != d) throw InputError("forward: sequence width does not match backbone dimension");
  if (head.readout.cols() != d) throw InputError("forward: verbalizer width does not match backbone dimension");
  if (seq.mask_position < 0 || seq.mask_position >= seq.length() ||
      seq.roles[static_cast<std::size_t>(seq.mask_position)] != Role::mask) {
    throw InputError("forward: sequence has no mask position");
  }

  ForwardPass p;
  p.options = options;
  p.length = seq.length();
  p.dim = d;

  for (int i = 0; i < seq.length(); ++i) {
    const Role r = seq.roles[static_cast<std::size_t>(i)];
    if (r == Role::pad) continue;
    if (r == Role::prompt && !options.attend_prompt) continue;
    p.key_rows.push_back(i);
    const bool wanted = r == Role::mask || (options.need_pooled && r == Role::input);
    if (wanted) {
      if (r == Role::mask) p.mask_local = static_cast<int>(p.query_rows.size());
      if (r == Role::input) p.input_local.push_back(static_cast<int>(p.query_rows.size()));
      p.query_rows.push_back(i);
    }
  }

  p.xq = gather_rows(seq.embeddings, p.query_rows);
  p.xk = gather_rows(seq.embeddings, p.key_rows);
  check_finite(p.xk, "input");

  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  p.q.noalias() = p.xq * w.query;
  p.k.noalias() = p.xk * w.key;
  p.v.noalias() = p.xk * w.value;
  Matrix scores = (p.q * p.k.transpose()) * scale;
  p.attn.resize(scores.rows(), scores.cols());
  for (Eigen::Index r = 0; r < scores.rows(); ++r) {
    const double mx = scores.row(r).maxCoeff();
    const Eigen::RowVectorXd e = (scores.row(r).array() - mx).exp().matrix();
    p.attn.row(r) = e / e.sum();
  }
  p.ctx.noalias() = p.attn * p.v;
  p.att_out.noalias() = p.ctx * w.output;
  p.h1 = p.xq + (p.att_out.array().rowwise() * w.scale_attn.transpose().array()).matrix();
  p.pre_act.noalias() = p.h1 * w.ffn_in;
  p.act = p.pre_act.unaryExpr([](double u) { return gelu(u); });
  p.ffn.noalias() = p.act * w.ffn_out;
  p.h2 = p.h1 + (p.ffn.array().rowwise() * w.scale_ffn.transpose().array()).matrix();
  check_finite(p.h2, "hidden");

  p.logits = head.readout * p.h2.row(p.mask_local).transpose();
  p.probs = softmax(p.logits);
  if (!p.probs.allFinite()) throw NumericalError("encoder forward: non-finite probabilities");

  if (options.need_pooled) {
    p.pooled = Vector::Zero(d);
    if (!p.input_local.empty()) {
      for (int li : p.input_local) p.pooled += p.h2.row(li).transpose();
      p.pooled /= static_cast<double>(p.input_local.size());
    }
  }
  return p;
}

std::vector<ForwardPass> forward_batch(const EmbeddedBatch& batch, const BackboneWeights& weights,
                                       const VerbalizerHead& head, const ForwardOptions& options) {
  std::vector<ForwardPass> out;
  out.reserve(batch.size());
  for (const auto& seq : batch) out.push_back(forward(seq, weights, head, options));
  return out;
}

EncoderGradients backward(const ForwardPass& p, const BackboneWeights& w, const VerbalizerHead& head,
                          const Vector& d_logits, const Vector& d_pooled, bool weight_grads) {
  const int d = p.dim;
  const auto rq = static_cast<Eigen::Index>(p.query_rows.size());

  Matrix dh2 = Matrix::Zero(rq, d);
  if (d_logits.size() > 0) {
    if (d_logits.size() != head.readout.rows()) throw InputError("backward: d_logits has wrong size");
    dh2.row(p.mask_local) += (head.readout.transpose() * d_logits).transpose();
  }
  if (d_pooled.size() > 0) {
    if (!p.options.need_pooled) throw InputError("backward: pooled gradient given for a prediction-only pass");
    if (d_pooled.size() != d) throw InputError("backward: d_pooled has wrong size");
    if (!p.input_local.empty()) {
      const Vector share = d_pooled / static_cast<double>(p.input_local.size());
      for (int li : p.input_local) dh2.row(li) += share.transpose();
    }
  }

  EncoderGradients g;
  g.has_weight_grads = weight_grads;

  // Feed-forward branch.
  Matrix dffn = (dh2.array().rowwise() * w.scale_ffn.transpose().array()).matrix();
  Matrix dact = dffn * w.ffn_out.transpose();
  Matrix dpre = dact.array() * p.pre_act.unaryExpr([](double u) { return gelu_grad(u); }).array();
  Matrix dh1 = dh2 + dpre * w.ffn_in.transpose();

  // Attention branch.
  Matrix datt = (dh1.array().rowwise() * w.scale_attn.transpose().array()).matrix();
  Matrix dctx = datt * w.output.transpose();
  Matrix dattn = dctx * p.v.transpose();
  Matrix dv = p.attn.transpose() * dctx;
  Matrix dscores(dattn.rows(), dattn.cols());
  for (Eigen::Index r = 0; r < dattn.rows(); ++r) {
    const double dot = dattn.row(r).dot(p.attn.row(r));
    dscores.row(r) = p.attn.row(r).array() * (dattn.row(r).array() - dot);
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  dscores *= scale;
  Matrix dq = dscores * p.k;
  Matrix dk = dscores.transpose() * p.q;

  Matrix dxq = dh1 + dq * w.query.transpose();
  Matrix dxk = dk * w.key.transpose() + dv * w.value.transpose();

  g.d_embeddings = Matrix::Zero(p.length, d);
  for (Eigen::Index i = 0; i < rq; ++i) g.d_embeddings.row(p.query_rows[static_cast<std::size_t>(i)]) += dxq.row(i);
  for (std::size_t i = 0; i < p.key_rows.size(); ++i) {
    g.d_embeddings.row(p.key_rows[i]) += dxk.row(static_cast<Eigen::Index>(i));
  }

  if (weight_grads) {
    g.d_weights.query = p.xq.transpose() * dq;
    g.d_weights.key = p.xk.transpose() * dk;
    g.d_weights.value = p.xk.transpose() * dv;
    g.d_weights.output = p.ctx.transpose() * datt;
    g.d_weights.ffn_in = p.h1.transpose() * dpre;
    g.d_weights.ffn_out = p.act.transpose() * dffn;
    g.d_weights.scale_attn = (dh1.array() * p.att_out.array()).colwise().sum().transpose();
    g.d_weights.scale_ffn = (dh2.array() * p.ffn.array()).colwise().sum().transpose();
  }
  return g;
}

Matrix input_gradient(const EmbeddedSequence& seq, const Matrix& d_embeddings, int max_input_len) {
  Matrix out = Matrix::Zero(max_input_len, d_embeddings.cols());
  if (seq.input_len > 0) out.topRows(seq.input_len) = d_embeddings.middleRows(seq.input_begin(), seq.input_len);
  return out;
}

std::string digest(const BackboneWeights& w) {
  Sha256 h;
  h.update(w.query);
  h.update(w.key);
  h.update(w.value);
  h.update(w.output);
  h.update(w.ffn_in);
  h.update(w.ffn_out);
  h.update(w.scale_attn);
  h.update(w.scale_ffn);
  return h.hex_digest();
}

}  // namespace optima
