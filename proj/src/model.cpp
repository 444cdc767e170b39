#include "eegcn/model.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace eegcn::model {

using namespace ad;
using graph::AdjacencyMatrix;

void ModelConfig::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("invalid model config: " + what); };
  if (embed_dim == 0 || hidden_dim == 0 || ffn_dim == 0) fail("dimensions must be positive");
  if (gcn_layers < 1) fail("gcn_layers must be >= 1");
  if (transformer_blocks < 1) fail("transformer_blocks must be >= 1");
  if (heads == 0 || embed_dim % heads != 0) {
    fail("heads (" + std::to_string(heads) + ") must divide embed_dim (" + std::to_string(embed_dim) + ")");
  }
  if (embed_dim % 2 != 0) fail("embed_dim must be even for sinusoidal positions");
  if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout must lie in [0, 1)");
  if (!(init_range > 0.0)) fail("init_range must be positive");
}

// ---- parameters ------------------------------------------------------------

std::vector<NamedTensor> ModelParams::named() {
  std::vector<NamedTensor> out;
  out.push_back({"embedding", &embedding, true});
  for (auto [prefix, lstm] : {std::pair{"lstm_fwd", &lstm_forward}, std::pair{"lstm_bwd", &lstm_backward}}) {
    out.push_back({std::string(prefix) + ".w_input", &lstm->w_input, true});
    out.push_back({std::string(prefix) + ".w_hidden", &lstm->w_hidden, true});
    out.push_back({std::string(prefix) + ".bias", &lstm->bias, false});
  }
  for (std::size_t b = 0; b < encoder.size(); ++b) {
    auto& e = encoder[b];
    const std::string p = "encoder" + std::to_string(b) + ".";
    out.push_back({p + "w_query", &e.w_query, true});
    out.push_back({p + "w_key", &e.w_key, true});
    out.push_back({p + "w_value", &e.w_value, true});
    out.push_back({p + "w_out", &e.w_out, true});
    out.push_back({p + "b_out", &e.b_out, false});
    out.push_back({p + "ln1_gain", &e.ln1_gain, false});
    out.push_back({p + "ln1_bias", &e.ln1_bias, false});
    out.push_back({p + "ffn_w1", &e.ffn_w1, true});
    out.push_back({p + "ffn_b1", &e.ffn_b1, false});
    out.push_back({p + "ffn_w2", &e.ffn_w2, true});
    out.push_back({p + "ffn_b2", &e.ffn_b2, false});
    out.push_back({p + "ln2_gain", &e.ln2_gain, false});
    out.push_back({p + "ln2_bias", &e.ln2_bias, false});
  }
  for (std::size_t l = 0; l < gcn.size(); ++l) {
    const std::string p = "gcn" + std::to_string(l + 1) + ".";
    out.push_back({p + "weight", &gcn[l].weight, true});
    out.push_back({p + "bias", &gcn[l].bias, false});
  }
  out.push_back({"projection", &projection, true});
  out.push_back({"cls_weight", &cls_weight, true});
  out.push_back({"cls_bias", &cls_bias, false});
  return out;
}

std::vector<Tensor> ModelParams::tensors() {
  std::vector<Tensor> out;
  for (auto& n : named()) out.push_back(*n.tensor);
  return out;
}

std::vector<Tensor> ModelParams::regularized_tensors() {
  std::vector<Tensor> out;
  for (auto& n : named())
    if (n.regularized) out.push_back(*n.tensor);
  return out;
}

ModelParams ModelParams::clone() const {
  ModelParams copy = *this;
  for (auto& n : copy.named()) *n.tensor = n.tensor->clone();
  return copy;
}

ModelParams ModelParams::init(const ModelConfig& config, std::size_t vocab_size, std::uint64_t seed,
                              const std::vector<double>* pretrained) {
  config.validate();
  Rng rng(seed);
  const double r = config.init_range;
  auto uniform = [&](Shape shape) {
    std::vector<double> data(shape_size(shape));
    for (auto& v : data) v = rng.uniform(-r, r);
    return Tensor::parameter(std::move(shape), std::move(data));
  };
  auto constant = [](std::size_t n, double v) { return Tensor::parameter({1, n}, std::vector<double>(n, v)); };

  const std::size_t d = config.embed_dim;
  const std::size_t h = config.hidden_dim;
  const std::size_t g = config.gcn_width();
  ModelParams p;
  if (pretrained) {
    if (pretrained->size() != vocab_size * d) {
      throw ShapeError("init", "pretrained embedding holds " + std::to_string(pretrained->size()) +
                                   " values, expected " + std::to_string(vocab_size) + "x" + std::to_string(d));
    }
    p.embedding = Tensor::parameter({vocab_size, d}, *pretrained);
  } else {
    p.embedding = uniform({vocab_size, d});
  }
  for (auto* lstm : {&p.lstm_forward, &p.lstm_backward}) {
    lstm->w_input = uniform({d, 4 * h});
    lstm->w_hidden = uniform({h, 4 * h});
    lstm->bias = uniform({1, 4 * h});
  }
  for (std::size_t b = 0; b < config.transformer_blocks; ++b) {
    EncoderBlockParams e;
    e.w_query = uniform({d, d});
    e.w_key = uniform({d, d});
    e.w_value = uniform({d, d});
    e.w_out = uniform({d, d});
    e.b_out = uniform({1, d});
    e.ln1_gain = constant(d, 1.0);
    e.ln1_bias = constant(d, 0.0);
    e.ffn_w1 = uniform({d, config.ffn_dim});
    e.ffn_b1 = uniform({1, config.ffn_dim});
    e.ffn_w2 = uniform({config.ffn_dim, d});
    e.ffn_b2 = uniform({1, d});
    e.ln2_gain = constant(d, 1.0);
    e.ln2_bias = constant(d, 0.0);
    p.encoder.push_back(std::move(e));
  }
  const std::size_t gcn_in = config.no_bidirectional ? g : 2 * g;
  for (std::size_t l = 0; l < config.gcn_layers; ++l) p.gcn.push_back({uniform({gcn_in, g}), uniform({1, g})});
  p.projection = uniform({d, g});
  p.cls_weight = uniform({g, corpus::kNumClasses});
  p.cls_bias = uniform({1, corpus::kNumClasses});
  return p;
}

// ---- encoders --------------------------------------------------------------

Tensor embed_tokens(std::span<const std::size_t> ids, const ModelParams& params) {
  return gather_rows(params.embedding, ids);
}

Tensor lstm_encode(const Tensor& inputs, const LstmParams& p, bool reverse) {
  const std::size_t n = inputs.rows();
  const std::size_t h = p.w_hidden.rows();
  if (p.w_input.rows() != inputs.cols()) {
    throw ShapeError("lstm", "input width " + std::to_string(inputs.cols()) + " vs w_input " +
                                 shape_str(p.w_input.shape()));
  }
  const Tensor projected = add(matmul(inputs, p.w_input), p.bias);
  std::vector<Tensor> states(n);
  Tensor h_prev;
  Tensor c_prev;
  for (std::size_t step = 0; step < n; ++step) {
    const std::size_t t = reverse ? n - 1 - step : step;
    Tensor gates = slice_rows(projected, t, t + 1);
    // zero initial state: the recurrent terms vanish on the first step
    if (step > 0) gates = add(gates, matmul(h_prev, p.w_hidden));
    const Tensor i = sigmoid(slice_cols(gates, 0, h));
    const Tensor f = sigmoid(slice_cols(gates, h, 2 * h));
    const Tensor g = ad::tanh(slice_cols(gates, 2 * h, 3 * h));
    const Tensor o = sigmoid(slice_cols(gates, 3 * h, 4 * h));
    const Tensor c = step > 0 ? add(mul(f, c_prev), mul(i, g)) : mul(i, g);
    h_prev = mul(o, ad::tanh(c));
    c_prev = c;
    states[t] = h_prev;
  }
  return concat_rows(states);
}

Tensor bilstm_encode(const Tensor& inputs, const LstmParams& forward, const LstmParams& backward) {
  const std::array<Tensor, 2> halves{lstm_encode(inputs, forward, false), lstm_encode(inputs, backward, true)};
  return concat_cols(halves);
}

Tensor positional_encoding(std::size_t n, std::size_t d_model) {
  if (d_model == 0 || d_model % 2 != 0) {
    throw std::invalid_argument("positional encoding needs an even d_model, got " + std::to_string(d_model));
  }
  std::vector<double> p(n * d_model);
  for (std::size_t pos = 0; pos < n; ++pos) {
    for (std::size_t i = 0; 2 * i < d_model; ++i) {
      const double angle =
          static_cast<double>(pos) / std::pow(10000.0, static_cast<double>(2 * i) / static_cast<double>(d_model));
      p[pos * d_model + 2 * i] = std::sin(angle);
      p[pos * d_model + 2 * i + 1] = std::cos(angle);
    }
  }
  return Tensor::from({n, d_model}, std::move(p));
}

Tensor attention_weights(const Tensor& q, const Tensor& k) {
  if (q.cols() != k.cols()) {
    throw ShapeError("attention", "query " + shape_str(q.shape()) + " and key " + shape_str(k.shape()) +
                                      " widths differ");
  }
  return softmax(scale(matmul(q, transpose(k)), 1.0 / std::sqrt(static_cast<double>(k.cols()))));
}

Tensor scaled_dot_attention(const Tensor& q, const Tensor& k, const Tensor& v) {
  if (k.rows() != v.rows()) {
    throw ShapeError("attention", "key " + shape_str(k.shape()) + " and value " + shape_str(v.shape()) +
                                      " row counts differ");
  }
  return matmul(attention_weights(q, k), v);
}

Tensor multi_head_attention(const Tensor& x, const EncoderBlockParams& p, std::size_t heads) {
  const std::size_t d = x.cols();
  if (heads == 0 || d % heads != 0) {
    throw std::invalid_argument("head count " + std::to_string(heads) + " does not divide width " +
                                std::to_string(d));
  }
  const std::size_t dk = d / heads;
  const Tensor q = matmul(x, p.w_query);
  const Tensor k = matmul(x, p.w_key);
  const Tensor v = matmul(x, p.w_value);
  std::vector<Tensor> outs;
  outs.reserve(heads);
  for (std::size_t hd = 0; hd < heads; ++hd) {
    const std::size_t b = hd * dk;
    outs.push_back(scaled_dot_attention(slice_cols(q, b, b + dk), slice_cols(k, b, b + dk), slice_cols(v, b, b + dk)));
  }
  return add(matmul(concat_cols(outs), p.w_out), p.b_out);
}

Tensor encoder_block(const Tensor& x, const EncoderBlockParams& p, std::size_t heads) {
  const Tensor attended = layer_norm(add(x, multi_head_attention(x, p, heads)), p.ln1_gain, p.ln1_bias);
  const Tensor ff = add(matmul(relu(add(matmul(attended, p.ffn_w1), p.ffn_b1)), p.ffn_w2), p.ffn_b2);
  return layer_norm(add(attended, ff), p.ln2_gain, p.ln2_bias);
}

Tensor transformer_encode(const Tensor& embeddings, std::span<const EncoderBlockParams> blocks, std::size_t heads) {
  Tensor x = add(embeddings, positional_encoding(embeddings.rows(), embeddings.cols()));
  for (const auto& b : blocks) x = encoder_block(x, b, heads);
  return x;
}

// ---- graph convolution and aspect attention --------------------------------

namespace {

Tensor row_normalized(const AdjacencyMatrix& a, const AdjacencyMatrix& degrees_from) {
  const std::size_t n = a.n;
  std::vector<double> v(a.values);
  for (std::size_t i = 0; i < n; ++i) {
    const double inv = 1.0 / (static_cast<double>(degrees_from.degree(i)) + 1.0);
    for (std::size_t j = 0; j < n; ++j) v[i * n + j] *= inv;
  }
  return Tensor::from({n, n}, std::move(v));
}

void check_square(const AdjacencyMatrix& a, const Tensor& h) {
  if (a.values.size() != a.n * a.n) {
    throw ShapeError("bigcn_layer", "adjacency with " + std::to_string(a.values.size()) + " values is not " +
                                        std::to_string(a.n) + "x" + std::to_string(a.n));
  }
  if (a.n != h.rows()) {
    throw ShapeError("bigcn_layer", "adjacency is " + std::to_string(a.n) + "x" + std::to_string(a.n) +
                                        " but features are " + shape_str(h.shape()));
  }
}

Tensor dropout(const Tensor& x, double rate, Rng& rng) {
  if (rate <= 0.0) return x;
  const double keep = 1.0 - rate;
  std::vector<double> mask(x.size());
  for (auto& m : mask) m = rng.uniform01() < keep ? 1.0 / keep : 0.0;
  return mul(x, Tensor::from(x.shape(), std::move(mask)));
}

}  // namespace

Tensor bigcn_layer(const Tensor& h, const AdjacencyMatrix& forward_adj, const AdjacencyMatrix& backward_adj,
                   const GcnLayerParams& p, bool bidirectional) {
  check_square(forward_adj, h);
  check_square(backward_adj, h);
  const std::size_t in_width = (bidirectional ? 2 : 1) * h.cols();
  if (p.weight.rows() != in_width || p.bias.size() != p.weight.cols()) {
    throw ShapeError("bigcn_layer", "weight " + shape_str(p.weight.shape()) + " / bias " +
                                        shape_str(p.bias.shape()) + " for input width " + std::to_string(in_width));
  }
  Tensor combined = matmul(row_normalized(forward_adj, forward_adj), h);
  if (bidirectional) {
    const std::array<Tensor, 2> halves{combined, matmul(row_normalized(backward_adj, forward_adj), h)};
    combined = concat_cols(halves);
  }
  return relu(add(matmul(combined, p.weight), p.bias));
}

Tensor bigcn_layer(const Tensor& h, const AdjacencyMatrix& adj, const GcnLayerParams& p, bool bidirectional) {
  return bigcn_layer(h, adj, adj.transposed(), p, bidirectional);
}

Tensor aspect_mask(const Tensor& h, std::size_t start, std::size_t len) {
  const std::size_t n = h.rows();
  if (start < 1 || len < 1 || start + len - 1 > n) {
    throw std::invalid_argument("aspect span [" + std::to_string(start) + ", " + std::to_string(start + len - 1) +
                                "] outside 1.." + std::to_string(n));
  }
  const std::size_t d = h.cols();
  std::vector<double> mask(n * d, 0.0);
  for (std::size_t i = start - 1; i < start - 1 + len; ++i) std::fill_n(mask.begin() + i * d, d, 1.0);
  return mul(h, Tensor::from(h.shape(), std::move(mask)));
}

Tensor retrieval_attention(const Tensor& ctx, const Tensor& masked) {
  if (ctx.shape() != masked.shape()) {
    throw ShapeError("retrieval_attention", shape_str(ctx.shape()) + " vs " + shape_str(masked.shape()));
  }
  const Tensor ones = Tensor::full({1, masked.rows()}, 1.0);
  const Tensor aspect_sum = matmul(ones, masked);         // 1 x d
  const Tensor scores = matmul(ctx, transpose(aspect_sum));  // n x 1
  return softmax(transpose(scores));
}

Tensor fuse_and_represent(const Tensor& ctx, const Tensor& alpha, const Tensor& z_out, const Tensor& projection) {
  if (alpha.cols() != ctx.rows() || alpha.rows() != 1) {
    throw ShapeError("fuse", "weights " + shape_str(alpha.shape()) + " for context " + shape_str(ctx.shape()));
  }
  if (projection.rows() != z_out.cols() || projection.cols() != ctx.cols()) {
    throw ShapeError("fuse", "projection " + shape_str(projection.shape()) + " cannot map " +
                                 shape_str(z_out.shape()) + " onto width " + std::to_string(ctx.cols()));
  }
  return add(matmul(alpha, ctx), matmul(mean(z_out, 0), projection));
}

Tensor classifier_logits(const Tensor& res_out, const Tensor& weight, const Tensor& bias) {
  return add(matmul(res_out, weight), bias);
}

Tensor classify(const Tensor& res_out, const Tensor& weight, const Tensor& bias) {
  return softmax(classifier_logits(res_out, weight, bias));
}

// ---- full model ------------------------------------------------------------

AdjacencyMatrix select_adjacency(const corpus::Example& example, const graph::SdiTable& table,
                                 const ModelConfig& config) {
  if (config.no_dependency) return graph::identity_adjacency(example.size());
  if (!example.parse) throw std::invalid_argument("example has no dependency parse attached");
  if (config.no_edge_weight) return graph::binary_adjacency(*example.parse);
  return graph::sdi_adjacency(*example.parse, table);
}

PreparedExample prepare(const corpus::Example& example, const corpus::Vocabulary& vocab,
                        const graph::SdiTable& table, const ModelConfig& config) {
  return {vocab.encode(example.tokens), example.aspect_start, example.aspect_len,
          static_cast<std::size_t>(example.label), select_adjacency(example, table, config)};
}

std::vector<PreparedExample> prepare_all(std::span<const corpus::Example> examples, const corpus::Vocabulary& vocab,
                                         const graph::SdiTable& table, const ModelConfig& config) {
  std::vector<PreparedExample> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) out.push_back(prepare(ex, vocab, table, config));
  return out;
}

ForwardTrace forward_trace(const PreparedExample& ex, const ModelParams& params, const ModelConfig& config,
                           Rng* dropout_rng) {
  ForwardTrace tr;
  Tensor embedded = embed_tokens(ex.ids, params);
  if (dropout_rng) embedded = dropout(embedded, config.dropout, *dropout_rng);
  tr.context = bilstm_encode(embedded, params.lstm_forward, params.lstm_backward);
  tr.z_out = transformer_encode(embedded, params.encoder, config.heads);

  Tensor h = tr.context;
  if (dropout_rng) h = dropout(h, config.dropout, *dropout_rng);
  const AdjacencyMatrix backward_adj = ex.adjacency.transposed();
  for (const auto& layer : params.gcn) h = bigcn_layer(h, ex.adjacency, backward_adj, layer, !config.no_bidirectional);
  tr.gcn_out = h;
  tr.masked = aspect_mask(h, ex.aspect_start, ex.aspect_len);
  tr.alpha = retrieval_attention(tr.context, tr.masked);
  tr.res_out = fuse_and_represent(tr.context, tr.alpha, tr.z_out, params.projection);
  tr.logits = classifier_logits(tr.res_out, params.cls_weight, params.cls_bias);
  return tr;
}

Tensor forward_logits(const PreparedExample& ex, const ModelParams& params, const ModelConfig& config,
                      Rng* dropout_rng) {
  return forward_trace(ex, params, config, dropout_rng).logits;
}

std::array<double, corpus::kNumClasses> forward_pass(const PreparedExample& ex, const ModelParams& params,
                                                     const ModelConfig& config) {
  NoGradGuard no_grad;
  const Tensor prob = softmax(forward_logits(ex, params, config));
  std::array<double, corpus::kNumClasses> out{};
  std::copy(prob.data().begin(), prob.data().end(), out.begin());
  return out;
}

// ---- checkpoints -----------------------------------------------------------

nlohmann::json config_to_json(const ModelConfig& c) {
  return {{"embed_dim", c.embed_dim},
          {"hidden_dim", c.hidden_dim},
          {"gcn_layers", c.gcn_layers},
          {"transformer_blocks", c.transformer_blocks},
          {"heads", c.heads},
          {"ffn_dim", c.ffn_dim},
          {"dropout", c.dropout},
          {"init_range", c.init_range},
          {"no_dependency", c.no_dependency},
          {"no_edge_weight", c.no_edge_weight},
          {"no_bidirectional", c.no_bidirectional},
          {"seed", c.seed}};
}

ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.embed_dim = j.at("embed_dim").get<std::size_t>();
  c.hidden_dim = j.at("hidden_dim").get<std::size_t>();
  c.gcn_layers = j.at("gcn_layers").get<std::size_t>();
  c.transformer_blocks = j.at("transformer_blocks").get<std::size_t>();
  c.heads = j.at("heads").get<std::size_t>();
  c.ffn_dim = j.at("ffn_dim").get<std::size_t>();
  c.dropout = j.at("dropout").get<double>();
  c.init_range = j.at("init_range").get<double>();
  c.no_dependency = j.at("no_dependency").get<bool>();
  c.no_edge_weight = j.at("no_edge_weight").get<bool>();
  c.no_bidirectional = j.at("no_bidirectional").get<bool>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.validate();
  return c;
}

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint payload is written little-endian");
constexpr char kMagic[8] = {'E', 'E', 'G', 'C', 'N', 'C', 'K', 'P'};

}  // namespace

// Layout: 8-byte magic, u32 version, u64 header length, JSON header, then
// every tensor's float64 values in header order.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  ModelParams params = ckpt.params;
  nlohmann::json header = {{"format", kCheckpointFormat},
                           {"version", kCheckpointVersion},
                           {"config", config_to_json(ckpt.config)},
                           {"vocab", {{"tokens", ckpt.vocab.tokens()}, {"digest", ckpt.vocab.digest()}}},
                           {"sdi", ckpt.sdi.to_json()}};
  nlohmann::json dir = nlohmann::json::array();
  for (auto& n : params.named()) dir.push_back({{"name", n.name}, {"shape", n.tensor->shape()}});
  header["tensors"] = dir;

  const std::string text = header.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  const std::uint32_t version = kCheckpointVersion;
  const std::uint64_t len = text.size();
  out.write(kMagic, sizeof kMagic);
  out.write(reinterpret_cast<const char*>(&version), sizeof version);
  out.write(reinterpret_cast<const char*>(&len), sizeof len);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (auto& n : params.named()) {
    auto data = n.tensor->data();
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size_bytes()));
  }
  if (!out) throw std::runtime_error("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  char magic[sizeof kMagic] = {};
  std::uint32_t version = 0;
  std::uint64_t len = 0;
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw VersionError(path.string() + " is not an eegcn checkpoint");
  }
  in.read(reinterpret_cast<char*>(&version), sizeof version);
  if (!in || version != kCheckpointVersion) {
    throw VersionError("checkpoint version " + std::to_string(version) + " unsupported (expected " +
                       std::to_string(kCheckpointVersion) + ")");
  }
  in.read(reinterpret_cast<char*>(&len), sizeof len);
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) throw std::runtime_error("truncated checkpoint header in " + path.string());
  const auto header = nlohmann::json::parse(text);
  if (header.at("format") != kCheckpointFormat || header.at("version") != kCheckpointVersion) {
    throw VersionError("checkpoint header tag mismatch in " + path.string());
  }

  Checkpoint ckpt;
  ckpt.config = config_from_json(header.at("config"));
  ckpt.vocab = corpus::Vocabulary::from_tokens(header.at("vocab").at("tokens").get<std::vector<std::string>>());
  if (ckpt.vocab.digest() != header.at("vocab").at("digest").get<std::string>()) {
    throw std::runtime_error("vocabulary digest mismatch in " + path.string());
  }
  ckpt.sdi = graph::SdiTable::from_json(header.at("sdi"));
  ckpt.params = ModelParams::init(ckpt.config, ckpt.vocab.size(), 0);
  const auto& dir = header.at("tensors");
  auto named = ckpt.params.named();
  if (dir.size() != named.size()) throw std::runtime_error("checkpoint tensor count does not match its config");
  for (std::size_t k = 0; k < named.size(); ++k) {
    if (dir[k].at("name") != named[k].name || dir[k].at("shape").get<Shape>() != named[k].tensor->shape()) {
      throw std::runtime_error("checkpoint tensor '" + dir[k].at("name").get<std::string>() +
                               "' does not match the model layout");
    }
    auto data = named[k].tensor->mutable_data();
    in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size_bytes()));
    if (!in) throw std::runtime_error("truncated checkpoint payload in " + path.string());
  }
  return ckpt;
}

}  // namespace eegcn::model
