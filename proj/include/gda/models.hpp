#pragma once

#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gda/graph.hpp"
#include "gda/nn.hpp"
#include "gda/sparse.hpp"
#include "gda/tensor.hpp"

namespace gda {

enum class EncoderKind { sage, sign };

inline EncoderKind parse_encoder_kind(const std::string& s) {
  if (s == "sage") return EncoderKind::sage;
  if (s == "sign") return EncoderKind::sign;
  throw std::invalid_argument("unknown encoder: " + s);
}

inline const char* encoder_kind_name(EncoderKind k) {
  return k == EncoderKind::sage ? "sage" : "sign";
}

struct ModelSpec {
  EncoderKind encoder = EncoderKind::sage;
  int in_dim = 0;
  int hidden_dim = 300;
  int num_layers = 3;  // sage depth
  int sign_hops = 5;   // k_max for sign
  int num_classes = 0;
  int classifier_hidden = 200;
  int link_hidden = 80;
};

inline void validate_model_spec(const ModelSpec& s) {
  if (s.in_dim <= 0) throw std::invalid_argument("model spec: in_dim must be positive");
  if (s.hidden_dim <= 0) throw std::invalid_argument("model spec: hidden_dim must be positive");
  if (s.num_classes <= 0) throw std::invalid_argument("model spec: num_classes must be positive");
  if (s.classifier_hidden <= 0 || s.link_hidden <= 0)
    throw std::invalid_argument("model spec: head hidden dims must be positive");
  if (s.encoder == EncoderKind::sage && s.num_layers < 1)
    throw std::invalid_argument("model spec: num_layers must be at least 1");
  if (s.encoder == EncoderKind::sign && s.sign_hops < 0)
    throw std::invalid_argument("model spec: sign_hops must be nonnegative");
}

template <typename T>
struct SageLayer {
  Tensor<T> w_self;   // in x out
  Tensor<T> w_neigh;  // in x out
  Tensor<T> b;        // 1 x out

  SageLayer() = default;
  SageLayer(std::size_t in, std::size_t out, std::mt19937& rng)
      : w_self(glorot_uniform<T>(in, out, rng)),
        w_neigh(glorot_uniform<T>(in, out, rng)),
        b(1, out, true) {}

  Tensor<T> forward(Tape<T>& tape, const SparseOp<T>& mean_op, const Tensor<T>& h) const {
    Tensor<T> self_part = tape.matmul(h, w_self);
    Tensor<T> neigh_part = tape.matmul(tape.spmm(mean_op, h), w_neigh);
    return tape.add_rowvec(tape.add(self_part, neigh_part), b);
  }

  void collect(std::vector<Tensor<T>>& out) const {
    out.push_back(w_self);
    out.push_back(w_neigh);
    out.push_back(b);
  }
};

/// Mean-aggregation message passing. Self information enters through w_self;
/// the adjacency carries no self-loops. Relu plus dropout between layers,
/// nothing after the last.
template <typename T>
struct SageEncoder {
  std::vector<SageLayer<T>> layers;

  SageEncoder() = default;
  SageEncoder(std::size_t in, std::size_t hidden, int depth, std::mt19937& rng) {
    std::size_t d = in;
    for (int l = 0; l < depth; ++l) {
      layers.emplace_back(d, hidden, rng);
      d = hidden;
    }
  }

  Tensor<T> forward(Tape<T>& tape, const SparseOp<T>& mean_op, const Tensor<T>& x,
                    const ForwardCtx& ctx) const {
    Tensor<T> h = x;
    for (std::size_t l = 0; l < layers.size(); ++l) {
      h = layers[l].forward(tape, mean_op, h);
      if (l + 1 < layers.size()) h = apply_dropout(tape, tape.relu(h), ctx);
    }
    return h;
  }

  void collect(std::vector<Tensor<T>>& out) const {
    for (const auto& l : layers) l.collect(out);
  }
};

/// Hop powers of the normalized adjacency applied to the features:
/// Theta_0 = X, Theta_k = A_hat * Theta_{k-1}.
template <typename T>
std::vector<Mat<T>> sign_precompute(const SparseOp<T>& a_hat, const Mat<T>& x, int k_max) {
  if (k_max < 0) throw std::invalid_argument("sign_precompute: k_max must be nonnegative");
  std::vector<Mat<T>> hops;
  hops.push_back(x);
  for (int k = 1; k <= k_max; ++k) hops.push_back(sparse_apply(a_hat, hops.back()));
  return hops;
}

/// Linear per-hop projections, column concatenation, then a 2-layer combiner.
template <typename T>
struct SignEncoder {
  int k_max = 0;
  std::vector<Linear<T>> hop_proj;
  Mlp2<T> combiner;

  SignEncoder() = default;
  SignEncoder(std::size_t in, std::size_t hidden, int k, std::mt19937& rng) : k_max(k) {
    for (int i = 0; i <= k; ++i) hop_proj.emplace_back(in, hidden, rng);
    combiner = Mlp2<T>(hop_proj.size() * hidden, hidden, hidden, rng);
  }

  Tensor<T> forward_hops(Tape<T>& tape, const std::vector<Mat<T>>& hops,
                         const ForwardCtx& ctx) const {
    if (hops.size() != hop_proj.size())
      throw std::invalid_argument("sign encoder: hop count mismatch");
    Tensor<T> z;
    for (std::size_t k = 0; k < hops.size(); ++k) {
      Tensor<T> p = hop_proj[k].forward(tape, Tensor<T>::from_mat(hops[k]));
      z = k == 0 ? p : tape.concat_cols(z, p);
    }
    return combiner.forward(tape, z, ctx);
  }

  void collect(std::vector<Tensor<T>>& out) const {
    for (const auto& p : hop_proj) p.collect(out);
    combiner.collect(out);
  }
};

/// Encoder, classifier head, and link-predictor head sharing one embedding
/// space. Parameter draw order is fixed (encoder, classifier, link) so a
/// given seed always produces the same initialization.
template <typename T>
struct ModelBundle {
  ModelSpec spec;
  SageEncoder<T> sage;
  SignEncoder<T> sign;
  Mlp2<T> classifier;
  Mlp2<T> link_mlp;

  ModelBundle() = default;

  ModelBundle(const ModelSpec& s, std::mt19937& rng) : spec(s) {
    validate_model_spec(s);
    if (s.encoder == EncoderKind::sage)
      sage = SageEncoder<T>(s.in_dim, s.hidden_dim, s.num_layers, rng);
    else
      sign = SignEncoder<T>(s.in_dim, s.hidden_dim, s.sign_hops, rng);
    classifier = Mlp2<T>(s.hidden_dim, s.classifier_hidden, s.num_classes, rng);
    link_mlp = Mlp2<T>(s.hidden_dim, s.link_hidden, 1, rng);
  }

  Tensor<T> encode(Tape<T>& tape, const Csr& adj, const Mat<T>& features,
                   const ForwardCtx& ctx) const {
    if (static_cast<int>(features.cols) != spec.in_dim)
      throw std::invalid_argument("encode: feature dimension mismatch");
    if (static_cast<int>(features.rows) != adj.num_nodes)
      throw std::invalid_argument("encode: feature row count mismatch");
    if (spec.encoder == EncoderKind::sage) {
      SparseOp<T> op = normalized_adjacency<T>(adj, NormMode::row_mean);
      return sage.forward(tape, op, Tensor<T>::from_mat(features), ctx);
    }
    SparseOp<T> op = normalized_adjacency<T>(adj, NormMode::sym_selfloop);
    return sign.forward_hops(tape, sign_precompute(op, features, sign.k_max), ctx);
  }

  std::vector<Tensor<T>> parameters() const {
    std::vector<Tensor<T>> out;
    if (spec.encoder == EncoderKind::sage)
      sage.collect(out);
    else
      sign.collect(out);
    classifier.collect(out);
    link_mlp.collect(out);
    return out;
  }

  std::vector<std::string> parameter_names() const {
    std::vector<std::string> names;
    if (spec.encoder == EncoderKind::sage) {
      for (std::size_t l = 0; l < sage.layers.size(); ++l) {
        const std::string p = "sage." + std::to_string(l) + ".";
        names.push_back(p + "w_self");
        names.push_back(p + "w_neigh");
        names.push_back(p + "b");
      }
    } else {
      for (std::size_t k = 0; k < sign.hop_proj.size(); ++k) {
        const std::string p = "sign.proj" + std::to_string(k) + ".";
        names.push_back(p + "w");
        names.push_back(p + "b");
      }
      for (const char* n : {"sign.comb.l1.w", "sign.comb.l1.b", "sign.comb.l2.w", "sign.comb.l2.b"})
        names.emplace_back(n);
    }
    for (const char* n : {"classifier.l1.w", "classifier.l1.b", "classifier.l2.w",
                          "classifier.l2.b", "link.l1.w", "link.l1.b", "link.l2.w", "link.l2.b"})
      names.emplace_back(n);
    return names;
  }

  template <typename U>
  ModelBundle<U> cast() const {
    ModelBundle<U> out;
    out.spec = spec;
    std::mt19937 rng(0);
    ModelBundle<U> shaped(spec, rng);
    out = shaped;
    auto src = parameters();
    auto dst = out.parameters();
    for (std::size_t p = 0; p < src.size(); ++p)
      for (std::size_t i = 0; i < src[p].size(); ++i)
        dst[p].value()[i] = static_cast<U>(src[p].value()[i]);
    return out;
  }
};

/// Scores one probability per pair: sigmoid(mlp(h_u . h_v)) with "."
/// the elementwise product, so (u,v) and (v,u) score identically.
template <typename T>
Tensor<T> edge_scores(Tape<T>& tape, const ModelBundle<T>& bundle, const Tensor<T>& embeddings,
                      const std::vector<std::pair<int, int>>& pairs, const ForwardCtx& ctx) {
  std::vector<int> us, vs;
  us.reserve(pairs.size());
  vs.reserve(pairs.size());
  for (const auto& [u, v] : pairs) {
    us.push_back(u);
    vs.push_back(v);
  }
  Tensor<T> fused = tape.hadamard(tape.row_gather(embeddings, us), tape.row_gather(embeddings, vs));
  return tape.sigmoid(bundle.link_mlp.forward(tape, fused, ctx));
}

template <typename T>
Tensor<T> classify(Tape<T>& tape, const ModelBundle<T>& bundle, const Tensor<T>& embeddings,
                   const ForwardCtx& ctx) {
  return bundle.classifier.forward(tape, embeddings, ctx);
}

/// Argmax with ties broken toward the lowest class index.
template <typename T>
int argmax_row(const T* row, std::size_t n) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < n; ++j)
    if (row[j] > row[best]) best = j;
  return static_cast<int>(best);
}

}  // namespace gda
