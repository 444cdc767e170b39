#pragma once

// Edge-enhanced bidirectional GCN classifier: word embeddings feed a Bi-LSTM
// and a transformer encoder; Bi-LSTM states are propagated through stacked
// bidirectional graph convolutions over the weighted dependency graph,
// masked to the aspect span, and used to attend back over the Bi-LSTM
// states; the pooled transformer output is added before a softmax layer.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "eegcn/autodiff.hpp"
#include "eegcn/corpus.hpp"
#include "eegcn/syntax_graph.hpp"
#include "eegcn/util.hpp"

namespace eegcn::model {

using ad::Tensor;

struct ModelConfig {
  std::size_t embed_dim = 300;   // d_w == d_model
  std::size_t hidden_dim = 300;  // per-direction Bi-LSTM width
  std::size_t gcn_layers = 3;
  std::size_t transformer_blocks = 1;
  std::size_t heads = 6;
  std::size_t ffn_dim = 600;
  double dropout = 0.3;
  double init_range = 0.01;
  bool no_dependency = false;     // identity adjacency
  bool no_edge_weight = false;    // binary adjacency instead of SDI
  bool no_bidirectional = false;  // forward graph direction only
  std::uint64_t seed = 1;

  // Throws std::invalid_argument on an inconsistent configuration.
  void validate() const;
  std::size_t gcn_width() const { return 2 * hidden_dim; }
};

struct LstmParams {
  Tensor w_input;   // d_in x 4h, gate order [input, forget, cell, output]
  Tensor w_hidden;  // h x 4h
  Tensor bias;      // 1 x 4h
};

struct EncoderBlockParams {
  Tensor w_query, w_key, w_value;  // d x d, head k uses columns [k*d_k, (k+1)*d_k)
  Tensor w_out, b_out;             // d x d, 1 x d
  Tensor ln1_gain, ln1_bias;
  Tensor ffn_w1, ffn_b1;  // d x f, 1 x f
  Tensor ffn_w2, ffn_b2;  // f x d, 1 x d
  Tensor ln2_gain, ln2_bias;
};

struct GcnLayerParams {
  Tensor weight;  // 2d x d (bidirectional) or d x d
  Tensor bias;    // 1 x d
};

struct NamedTensor {
  std::string name;
  Tensor* tensor;
  bool regularized;  // weight matrices; biases and normalization terms are not
};

struct ModelParams {
  Tensor embedding;  // |V| x d_w
  LstmParams lstm_forward;
  LstmParams lstm_backward;
  std::vector<EncoderBlockParams> encoder;
  std::vector<GcnLayerParams> gcn;
  Tensor projection;  // d_model x 2h
  Tensor cls_weight;  // 2h x 3
  Tensor cls_bias;    // 1 x 3

  // Every trainable tensor in a fixed order.
  std::vector<NamedTensor> named();
  std::vector<Tensor> tensors();
  std::vector<Tensor> regularized_tensors();
  ModelParams clone() const;

  // Uniform(-init_range, init_range) everywhere except normalization gains
  // (1) and offsets (0). Embedding rows come from pretrained when given.
  static ModelParams init(const ModelConfig& config, std::size_t vocab_size, std::uint64_t seed,
                          const std::vector<double>* pretrained = nullptr);
};

// ---- building blocks -------------------------------------------------------

Tensor embed_tokens(std::span<const std::size_t> ids, const ModelParams& params);
Tensor lstm_encode(const Tensor& inputs, const LstmParams& p, bool reverse);
Tensor bilstm_encode(const Tensor& inputs, const LstmParams& forward, const LstmParams& backward);

// P[pos][2i] = sin(pos / 10000^(2i/d)), P[pos][2i+1] = cos(same).
Tensor positional_encoding(std::size_t n, std::size_t d_model);
Tensor attention_weights(const Tensor& q, const Tensor& k);
Tensor scaled_dot_attention(const Tensor& q, const Tensor& k, const Tensor& v);
Tensor multi_head_attention(const Tensor& x, const EncoderBlockParams& p, std::size_t heads);
Tensor encoder_block(const Tensor& x, const EncoderBlockParams& p, std::size_t heads);
Tensor transformer_encode(const Tensor& embeddings, std::span<const EncoderBlockParams> blocks, std::size_t heads);

// One bidirectional graph convolution:
//   relu([A H ; A^T H] / (d_i + 1) W + b)
// where d_i counts nonzero off-diagonal entries of row i of A. With
// bidirectional == false only A H is used and W is d x d.
Tensor bigcn_layer(const Tensor& h, const graph::AdjacencyMatrix& adj, const GcnLayerParams& p,
                   bool bidirectional = true);
// Same computation with the two propagation matrices supplied separately;
// degrees come from forward_adj.
Tensor bigcn_layer(const Tensor& h, const graph::AdjacencyMatrix& forward_adj,
                   const graph::AdjacencyMatrix& backward_adj, const GcnLayerParams& p, bool bidirectional);

// Zeroes rows outside [start, start + len - 1] (1-based).
Tensor aspect_mask(const Tensor& h, std::size_t start, std::size_t len);
// beta_i = sum_j ctx[i] . masked[j]; returns softmax(beta) as 1 x n.
Tensor retrieval_attention(const Tensor& ctx, const Tensor& masked);
// alpha ctx + mean_rows(z_out) projection, 1 x 2h.
Tensor fuse_and_represent(const Tensor& ctx, const Tensor& alpha, const Tensor& z_out, const Tensor& projection);
Tensor classifier_logits(const Tensor& res_out, const Tensor& weight, const Tensor& bias);
Tensor classify(const Tensor& res_out, const Tensor& weight, const Tensor& bias);

// ---- full model ------------------------------------------------------------

// An example resolved against a vocabulary and adjacency choice.
struct PreparedExample {
  std::vector<std::size_t> ids;
  std::size_t aspect_start = 1;
  std::size_t aspect_len = 1;
  std::size_t label = 0;
  graph::AdjacencyMatrix adjacency;
};

graph::AdjacencyMatrix select_adjacency(const corpus::Example& example, const graph::SdiTable& table,
                                        const ModelConfig& config);
PreparedExample prepare(const corpus::Example& example, const corpus::Vocabulary& vocab,
                        const graph::SdiTable& table, const ModelConfig& config);
std::vector<PreparedExample> prepare_all(std::span<const corpus::Example> examples,
                                         const corpus::Vocabulary& vocab, const graph::SdiTable& table,
                                         const ModelConfig& config);

struct ForwardTrace {
  Tensor context;  // Bi-LSTM states, n x 2h
  Tensor z_out;    // transformer output, n x d_model
  Tensor gcn_out;  // last GCN layer, n x 2h
  Tensor masked;
  Tensor alpha;
  Tensor res_out;
  Tensor logits;
};

// dropout_rng == nullptr selects evaluation mode (no dropout).
ForwardTrace forward_trace(const PreparedExample& ex, const ModelParams& params, const ModelConfig& config,
                           Rng* dropout_rng = nullptr);
Tensor forward_logits(const PreparedExample& ex, const ModelParams& params, const ModelConfig& config,
                      Rng* dropout_rng = nullptr);
// Class probabilities in [negative, neutral, positive] order.
std::array<double, corpus::kNumClasses> forward_pass(const PreparedExample& ex, const ModelParams& params,
                                                     const ModelConfig& config);

// ---- checkpoints -----------------------------------------------------------

nlohmann::json config_to_json(const ModelConfig& config);
ModelConfig config_from_json(const nlohmann::json& j);

inline constexpr const char* kCheckpointFormat = "eegcn-checkpoint";
inline constexpr int kCheckpointVersion = 1;

class VersionError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Checkpoint {
  ModelConfig config;
  corpus::Vocabulary vocab;
  graph::SdiTable sdi;
  ModelParams params;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
// Throws VersionError on a foreign format tag or unsupported version.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace eegcn::model
