#include "rvos/nn.hpp"

#include <cmath>

#include "rvos/errors.hpp"

namespace rvos::nn {

Var linear(Binder& b, const Var& x, const std::string& prefix) {
  return ad::add_row(ad::matmul(x, b(prefix + ".w")), b(prefix + ".b"));
}

Var layer_norm(Binder& b, const Var& x, const std::string& prefix) {
  return ad::layer_norm(x, b(prefix + ".g"), b(prefix + ".b"));
}

Var attention(Binder& b, const Var& query, const Var& context, const std::string& prefix, int heads,
              const Matrix* mask) {
  const Eigen::Index dim = query.cols();
  if (context.cols() != dim)
    throw DomainError(prefix + ": query width " + std::to_string(dim) + " != context width " +
                      std::to_string(context.cols()));
  if (heads <= 0 || dim % heads != 0)
    throw DomainError(prefix + ": width " + std::to_string(dim) + " not divisible by " +
                      std::to_string(heads) + " heads");
  if (mask && (mask->rows() != query.rows() || mask->cols() != context.rows()))
    throw DomainError(prefix + ": attention mask shape mismatch");

  const Var q = linear(b, query, prefix + ".q");
  const Var k = linear(b, context, prefix + ".k");
  const Var v = linear(b, context, prefix + ".v");
  const Eigen::Index head_dim = dim / heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(head_dim));

  std::vector<Var> outs;
  outs.reserve(static_cast<std::size_t>(heads));
  for (int h = 0; h < heads; ++h) {
    const Var qh = ad::cols(q, h * head_dim, head_dim);
    const Var kh = ad::cols(k, h * head_dim, head_dim);
    const Var vh = ad::cols(v, h * head_dim, head_dim);
    Var logits = ad::scale(ad::matmul_bt(qh, kh), inv_sqrt);
    if (mask) logits = ad::add_constant(logits, *mask);
    outs.push_back(ad::matmul(ad::softmax_rows(logits), vh));
  }
  const Var merged = heads == 1 ? outs.front() : ad::hcat(outs);
  return linear(b, merged, prefix + ".o");
}

Var cross_attention_sublayer(Binder& b, const Var& x, const Var& context, const std::string& prefix,
                             int heads) {
  const Var qn = layer_norm(b, x, prefix + ".ln_q");
  const Var kvn = layer_norm(b, context, prefix + ".ln_kv");
  return ad::add(x, attention(b, qn, kvn, prefix, heads));
}

Var self_attention_sublayer(Binder& b, const Var& x, const std::string& prefix, int heads,
                            const Matrix* mask) {
  const Var xn = layer_norm(b, x, prefix + ".ln");
  return ad::add(x, attention(b, xn, xn, prefix, heads, mask));
}

Var ffn_sublayer(Binder& b, const Var& x, const std::string& prefix) {
  const Var xn = layer_norm(b, x, prefix + ".ln");
  const Var hidden = ad::silu(linear(b, xn, prefix + ".fc1"));
  return ad::add(x, linear(b, hidden, prefix + ".fc2"));
}

void init_linear(ParamStore& p, const std::string& prefix, int in, int out, Rng& rng, bool zero) {
  Matrix w = Matrix::Zero(in, out);
  if (!zero) {
    const double std = 1.0 / std::sqrt(static_cast<double>(in));
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = rng.normal() * std;
  }
  p.set(prefix + ".w", std::move(w));
  p.set(prefix + ".b", Matrix::Zero(1, out));
}

void init_layer_norm(ParamStore& p, const std::string& prefix, int dim) {
  p.set(prefix + ".g", Matrix::Ones(1, dim));
  p.set(prefix + ".b", Matrix::Zero(1, dim));
}

void init_attention(ParamStore& p, const std::string& prefix, int dim, Rng& rng, bool zero_output) {
  init_linear(p, prefix + ".q", dim, dim, rng);
  init_linear(p, prefix + ".k", dim, dim, rng);
  init_linear(p, prefix + ".v", dim, dim, rng);
  init_linear(p, prefix + ".o", dim, dim, rng, zero_output);
}

void init_cross_attention_sublayer(ParamStore& p, const std::string& prefix, int dim, Rng& rng,
                                   bool zero_output) {
  init_layer_norm(p, prefix + ".ln_q", dim);
  init_layer_norm(p, prefix + ".ln_kv", dim);
  init_attention(p, prefix, dim, rng, zero_output);
}

void init_self_attention_sublayer(ParamStore& p, const std::string& prefix, int dim, Rng& rng,
                                  bool zero_output) {
  init_layer_norm(p, prefix + ".ln", dim);
  init_attention(p, prefix, dim, rng, zero_output);
}

void init_ffn_sublayer(ParamStore& p, const std::string& prefix, int dim, Rng& rng, bool zero_output) {
  init_layer_norm(p, prefix + ".ln", dim);
  init_linear(p, prefix + ".fc1", dim, 2 * dim, rng);
  init_linear(p, prefix + ".fc2", 2 * dim, dim, rng, zero_output);
}

void zero_output_projections(ParamStore& p, const std::string& prefix) {
  auto ends_with = [](const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  for (auto& [name, m] : p.entries()) {
    if (name.rfind(prefix, 0) != 0) continue;
    if (ends_with(name, ".o.w") || ends_with(name, ".o.b") || ends_with(name, ".fc2.w") ||
        ends_with(name, ".fc2.b"))
      m.setZero();
  }
}

void check_finite(const Matrix& m, const std::string& where) {
  if (!m.allFinite()) throw NumericError("non-finite values in " + where);
}

}  // namespace rvos::nn
