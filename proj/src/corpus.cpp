#include "eegcn/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "eegcn/util.hpp"

namespace eegcn::corpus {

using json = nlohmann::json;

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path.string(), 0, "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const auto next = s.find(sep, pos);
    out.push_back(s.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

std::string_view trim_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

bool is_blank(std::string_view line) {
  return std::all_of(line.begin(), line.end(), [](char c) { return c == ' ' || c == '\t' || c == '\r'; });
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

template <typename F>
void for_each_line(std::string_view text, F f) {
  std::size_t lineno = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto next = text.find('\n', pos);
    const auto line = text.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos);
    ++lineno;
    if (next == std::string_view::npos) {
      if (!line.empty()) f(lineno, trim_cr(line));
      break;
    }
    f(lineno, trim_cr(line));
    pos = next + 1;
  }
}

}  // namespace

DataError::DataError(const std::string& file, std::size_t line, const std::string& what)
    : std::runtime_error(file + (line ? ":" + std::to_string(line) : std::string()) + ": " + what),
      file_(file),
      line_(line) {}

std::string_view to_string(Sentiment s) {
  switch (s) {
    case Sentiment::negative: return "negative";
    case Sentiment::neutral: return "neutral";
    case Sentiment::positive: return "positive";
  }
  return "?";
}

std::optional<Sentiment> parse_sentiment(std::string_view s) {
  if (s == "negative") return Sentiment::negative;
  if (s == "neutral") return Sentiment::neutral;
  if (s == "positive") return Sentiment::positive;
  return std::nullopt;
}

// ---- examples --------------------------------------------------------------

std::vector<Example> load_examples(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  const std::string file = path.string();
  std::vector<Example> out;
  for_each_line(text, [&](std::size_t lineno, std::string_view line) {
    if (is_blank(line)) return;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError(file, lineno, std::string("malformed JSON: ") + e.what());
    }
    Example ex;
    try {
      ex.tokens = rec.at("tokens").get<std::vector<std::string>>();
      const auto start = rec.at("aspect_start").get<std::int64_t>();
      const auto len = rec.at("aspect_len").get<std::int64_t>();
      const auto label = rec.at("label").get<std::string>();
      const auto sentiment = parse_sentiment(label);
      if (!sentiment) throw DataError(file, lineno, "unknown label '" + label + "'");
      if (ex.tokens.empty()) throw DataError(file, lineno, "empty token list");
      if (start < 1 || len < 1 || static_cast<std::size_t>(start + len - 1) > ex.tokens.size()) {
        throw DataError(file, lineno,
                        "aspect span out of range: start " + std::to_string(start) + ", length " +
                            std::to_string(len) + ", " + std::to_string(ex.tokens.size()) + " tokens");
      }
      ex.aspect_start = static_cast<std::size_t>(start);
      ex.aspect_len = static_cast<std::size_t>(len);
      ex.label = *sentiment;
    } catch (const json::exception& e) {
      throw DataError(file, lineno, std::string("malformed record: ") + e.what());
    }
    out.push_back(std::move(ex));
  });
  if (out.empty()) throw DataError(file, 0, "no examples");
  return out;
}

void save_examples(const std::filesystem::path& path, std::span<const Example> examples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(path.string(), 0, "cannot open file for writing");
  for (const auto& ex : examples) {
    json rec = {{"tokens", ex.tokens},
                {"aspect_start", ex.aspect_start},
                {"aspect_len", ex.aspect_len},
                {"label", std::string(to_string(ex.label))}};
    out << rec.dump() << '\n';
  }
}

std::array<std::size_t, kNumClasses> label_counts(std::span<const Example> examples) {
  std::array<std::size_t, kNumClasses> counts{};
  for (const auto& ex : examples) ++counts[static_cast<std::size_t>(ex.label)];
  return counts;
}

// ---- CoNLL-U ---------------------------------------------------------------

void validate_graph(const DependencyGraph& g) {
  std::vector<std::size_t> head(g.n + 1, 0);
  std::vector<bool> has_head(g.n + 1, false);
  for (const auto& e : g.edges) {
    if (e.head < 1 || e.head > g.n || e.dependent < 1 || e.dependent > g.n) {
      throw std::invalid_argument("edge " + std::to_string(e.head) + "->" + std::to_string(e.dependent) +
                                  " outside 1.." + std::to_string(g.n));
    }
    if (e.head == e.dependent) throw std::invalid_argument("self-edge at node " + std::to_string(e.head));
    if (has_head[e.dependent]) {
      throw std::invalid_argument("node " + std::to_string(e.dependent) + " has more than one head");
    }
    has_head[e.dependent] = true;
    head[e.dependent] = e.head;
  }
  for (std::size_t start = 1; start <= g.n; ++start) {
    std::size_t cur = start;
    for (std::size_t steps = 0; has_head[cur]; ++steps) {
      if (steps > g.n) throw std::invalid_argument("cycle through node " + std::to_string(start));
      cur = head[cur];
    }
  }
}

std::vector<DependencyGraph> parse_conllu_text(std::string_view text, const std::string& source) {
  std::vector<DependencyGraph> graphs;
  DependencyGraph cur;
  std::size_t block = 0;
  std::size_t block_line = 0;
  bool open = false;

  auto fail = [&](std::size_t lineno, const std::string& what) {
    throw DataError(source, lineno, "sentence block " + std::to_string(block) + ": " + what);
  };
  auto close = [&](std::size_t lineno) {
    if (!open) return;
    if (cur.n == 0) fail(block_line, "no token lines");
    try {
      validate_graph(cur);
    } catch (const std::invalid_argument& e) {
      fail(block_line ? block_line : lineno, e.what());
    }
    graphs.push_back(std::move(cur));
    cur = DependencyGraph{};
    open = false;
  };

  for_each_line(text, [&](std::size_t lineno, std::string_view line) {
    if (is_blank(line)) {
      close(lineno);
      return;
    }
    if (!open) {
      open = true;
      ++block;
      block_line = lineno;
    }
    if (line.front() == '#') return;
    const auto cols = split(line, '\t');
    if (cols.size() != 10) fail(lineno, "expected 10 tab-separated columns, got " + std::to_string(cols.size()));
    const auto id = cols[0];
    if (id.find('-') != std::string_view::npos || id.find('.') != std::string_view::npos) return;
    std::size_t idv = 0;
    if (std::from_chars(id.data(), id.data() + id.size(), idv).ec != std::errc{} || idv != cur.n + 1) {
      fail(lineno, "token id '" + std::string(id) + "' out of sequence");
    }
    std::size_t headv = 0;
    const auto h = cols[6];
    auto [ptr, ec] = std::from_chars(h.data(), h.data() + h.size(), headv);
    if (ec != std::errc{} || ptr != h.data() + h.size()) fail(lineno, "non-integer HEAD '" + std::string(h) + "'");
    cur.n = idv;
    cur.forms.emplace_back(cols[1]);
    if (headv == 0) {
      cur.roots.push_back(idv);
    } else {
      cur.edges.push_back({headv, idv, std::string(cols[7])});
    }
  });
  close(0);
  return graphs;
}

std::vector<DependencyGraph> parse_conllu(const std::filesystem::path& path) {
  return parse_conllu_text(read_file(path), path.string());
}

void attach_parses(std::vector<Example>& examples, std::vector<DependencyGraph> graphs, const std::string& source) {
  if (graphs.size() != examples.size()) {
    throw DataError(source, 0,
                    std::to_string(graphs.size()) + " parses for " + std::to_string(examples.size()) + " examples");
  }
  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (graphs[i].n != examples[i].size()) {
      throw DataError(source, 0,
                      "sentence block " + std::to_string(i + 1) + " has " + std::to_string(graphs[i].n) +
                          " nodes but example has " + std::to_string(examples[i].size()) + " tokens");
    }
    examples[i].parse = std::move(graphs[i]);
  }
}

// ---- vocabulary ------------------------------------------------------------

Vocabulary::Vocabulary() : tokens_{std::string(kPadToken), std::string(kUnkToken)} {
  index_.emplace(tokens_[kPad], kPad);
  index_.emplace(tokens_[kUnk], kUnk);
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
  if (tokens.size() < 2 || tokens[kPad] != kPadToken || tokens[kUnk] != kUnkToken) {
    throw std::invalid_argument("vocabulary must start with the pad and unknown markers");
  }
  Vocabulary v;
  v.tokens_ = std::move(tokens);
  v.index_.clear();
  for (std::size_t i = 0; i < v.tokens_.size(); ++i) {
    if (!v.index_.emplace(v.tokens_[i], i).second) {
      throw std::invalid_argument("duplicate vocabulary token '" + v.tokens_[i] + "'");
    }
  }
  return v;
}

std::size_t Vocabulary::id(std::string_view token) const {
  const auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(std::string_view token) const { return index_.contains(std::string(token)); }

std::vector<std::size_t> Vocabulary::encode(std::span<const std::string> tokens) const {
  std::vector<std::size_t> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id(t));
  return ids;
}

std::string Vocabulary::digest() const {
  std::string joined;
  for (const auto& t : tokens_) {
    joined += t;
    joined += '\n';
  }
  return sha256_hex(joined);
}

Vocabulary build_vocab(std::span<const std::vector<std::string>> sentences, std::size_t min_count) {
  std::map<std::string, std::size_t> counts;
  for (const auto& s : sentences)
    for (const auto& t : s) ++counts[t];
  std::vector<std::pair<std::string, std::size_t>> ranked;
  for (auto& [tok, c] : counts) {
    if (c >= min_count && tok != Vocabulary::kPadToken && tok != Vocabulary::kUnkToken) ranked.emplace_back(tok, c);
  }
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> tokens{std::string(Vocabulary::kPadToken), std::string(Vocabulary::kUnkToken)};
  for (auto& [tok, c] : ranked) tokens.push_back(tok);
  return Vocabulary::from_tokens(std::move(tokens));
}

Vocabulary build_vocab(std::span<const Example> examples, std::size_t min_count) {
  std::vector<std::vector<std::string>> sentences;
  sentences.reserve(examples.size());
  for (const auto& ex : examples) sentences.push_back(ex.tokens);
  return build_vocab(sentences, min_count);
}

// ---- GloVe -----------------------------------------------------------------

EmbeddingTable load_glove(const std::filesystem::path& path, const Vocabulary& vocab, std::uint64_t seed,
                          std::optional<std::size_t> expected_dim) {
  std::ifstream in(path, std::ios::binary);
  const std::string file = path.string();
  if (!in) throw DataError(file, 0, "cannot open file");

  std::unordered_map<std::string, std::vector<std::size_t>> by_lower;
  for (std::size_t id = 2; id < vocab.size(); ++id) by_lower[to_lower(vocab.token(id))].push_back(id);

  EmbeddingTable table;
  table.vocab = vocab;
  std::vector<std::uint8_t> filled(vocab.size(), 0);  // 0 none, 1 case-folded match, 2 exact
  std::vector<std::vector<double>> rows(vocab.size());

  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string_view> fields;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view sv = trim_cr(line);
    if (is_blank(sv)) continue;
    fields.clear();
    std::size_t pos = 0;
    while (pos < sv.size()) {
      while (pos < sv.size() && (sv[pos] == ' ' || sv[pos] == '\t')) ++pos;
      if (pos >= sv.size()) break;
      const auto end = sv.find_first_of(" \t", pos);
      fields.push_back(sv.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos));
      pos = end == std::string_view::npos ? sv.size() : end;
    }
    if (fields.size() < 2) throw DataError(file, lineno, "expected a token followed by floats");
    if (table.dim == 0) {
      table.dim = fields.size() - 1;
      if (expected_dim && *expected_dim != table.dim) {
        throw DataError(file, lineno,
                        "embedding dimension " + std::to_string(table.dim) + " but model expects " +
                            std::to_string(*expected_dim));
      }
    }
    if (fields.size() - 1 < table.dim) {
      throw DataError(file, lineno,
                      "inconsistent dimension: " + std::to_string(fields.size() - 1) + " values, expected " +
                          std::to_string(table.dim));
    }
    // Tokens containing spaces occupy the leading fields.
    const std::size_t first_value = fields.size() - table.dim;
    std::string token(fields[0]);
    for (std::size_t k = 1; k < first_value; ++k) (token += ' ') += fields[k];

    // An exact match always wins; otherwise the line fills case-folded
    // matches that nothing else has claimed yet.
    std::vector<std::pair<std::size_t, std::uint8_t>> targets;
    if (vocab.contains(token) && vocab.id(token) >= 2 && filled[vocab.id(token)] < 2) {
      targets.emplace_back(vocab.id(token), 2);
    }
    if (auto it = by_lower.find(to_lower(token)); it != by_lower.end()) {
      for (auto id : it->second)
        if (filled[id] == 0 && id != vocab.id(token)) targets.emplace_back(id, 1);
    }
    if (targets.empty()) continue;

    std::vector<double> row(table.dim);
    for (std::size_t k = 0; k < table.dim; ++k) {
      const auto f = fields[first_value + k];
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), row[k]);
      if (ec != std::errc{} || ptr != f.data() + f.size()) {
        throw DataError(file, lineno, "unreadable float '" + std::string(f) + "'");
      }
    }
    for (auto [id, strength] : targets) {
      rows[id] = row;
      filled[id] = strength;
    }
  }
  if (table.dim == 0) throw DataError(file, 0, "no embeddings in file");

  Rng rng(seed);
  const double bound = 0.25 / static_cast<double>(table.dim);
  table.matrix.assign(vocab.size() * table.dim, 0.0);
  for (std::size_t id = 1; id < vocab.size(); ++id) {
    double* dst = table.matrix.data() + id * table.dim;
    if (filled[id]) {
      std::copy(rows[id].begin(), rows[id].end(), dst);
      ++table.found;
    } else {
      for (std::size_t k = 0; k < table.dim; ++k) dst[k] = rng.uniform(-bound, bound);
    }
  }
  return table;
}

}  // namespace eegcn::corpus
