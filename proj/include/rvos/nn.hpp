#pragma once

// Transformer building blocks shared by every attention stage. All sublayers
// are pre-norm residual: x + f(LayerNorm(x)).

#include <string>

#include "rvos/params.hpp"
#include "rvos/rng.hpp"

namespace rvos::nn {

Var linear(Binder& b, const Var& x, const std::string& prefix);
Var layer_norm(Binder& b, const Var& x, const std::string& prefix);

/// Multi-head attention of `query` rows over `context` rows. `mask`, when
/// given, is added to the (rows(query) × rows(context)) logits of every head.
Var attention(Binder& b, const Var& query, const Var& context, const std::string& prefix,
              int heads, const Matrix* mask = nullptr);

/// x + Attn(LN_q(x), LN_kv(context))
Var cross_attention_sublayer(Binder& b, const Var& x, const Var& context, const std::string& prefix,
                             int heads);
/// x + Attn(LN(x), LN(x))
Var self_attention_sublayer(Binder& b, const Var& x, const std::string& prefix, int heads,
                            const Matrix* mask = nullptr);
/// x + W2 silu(W1 LN(x))
Var ffn_sublayer(Binder& b, const Var& x, const std::string& prefix);

void init_linear(ParamStore& p, const std::string& prefix, int in, int out, Rng& rng,
                 bool zero = false);
void init_layer_norm(ParamStore& p, const std::string& prefix, int dim);
void init_attention(ParamStore& p, const std::string& prefix, int dim, Rng& rng, bool zero_output);
void init_cross_attention_sublayer(ParamStore& p, const std::string& prefix, int dim, Rng& rng,
                                   bool zero_output);
void init_self_attention_sublayer(ParamStore& p, const std::string& prefix, int dim, Rng& rng,
                                  bool zero_output);
void init_ffn_sublayer(ParamStore& p, const std::string& prefix, int dim, Rng& rng, bool zero_output);

/// Zeroes the output projections (`*.o.w`, `*.o.b`, `*.fc2.w`, `*.fc2.b`) of
/// every sublayer under `prefix`.
void zero_output_projections(ParamStore& p, const std::string& prefix);

/// Throws NumericError naming `where` if any entry is not finite.
void check_finite(const Matrix& m, const std::string& where);

}  // namespace rvos::nn
