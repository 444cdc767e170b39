#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace eegcn::corpus {

// Input data could not be read or validated. Carries the offending file and
// 1-based line when known.
class DataError : public std::runtime_error {
 public:
  DataError(const std::string& file, std::size_t line, const std::string& what);
  const std::string& file() const { return file_; }
  std::size_t line() const { return line_; }

 private:
  std::string file_;
  std::size_t line_;
};

// Fixed class order used for every tensor, confusion matrix and report.
enum class Sentiment : std::uint8_t { negative = 0, neutral = 1, positive = 2 };
inline constexpr std::size_t kNumClasses = 3;

std::string_view to_string(Sentiment s);
std::optional<Sentiment> parse_sentiment(std::string_view s);

struct DependencyEdge {
  std::size_t head = 0;       // 1-based
  std::size_t dependent = 0;  // 1-based
  std::string relation;

  bool operator==(const DependencyEdge&) const = default;
};

struct DependencyGraph {
  std::size_t n = 0;
  std::vector<DependencyEdge> edges;
  std::vector<std::size_t> roots;  // 1-based nodes whose HEAD is 0
  std::vector<std::string> forms;  // FORM column, informational

  bool operator==(const DependencyGraph&) const = default;
};

// Throws std::invalid_argument when a head is out of range, a node has more
// than one head, or the head chain cycles.
void validate_graph(const DependencyGraph& graph);

struct Example {
  std::vector<std::string> tokens;
  std::size_t aspect_start = 1;  // 1-based
  std::size_t aspect_len = 1;
  Sentiment label = Sentiment::neutral;
  std::optional<DependencyGraph> parse;

  std::size_t size() const { return tokens.size(); }
  bool operator==(const Example&) const = default;
};

std::vector<Example> load_examples(const std::filesystem::path& path);
void save_examples(const std::filesystem::path& path, std::span<const Example> examples);
std::array<std::size_t, kNumClasses> label_counts(std::span<const Example> examples);

std::vector<DependencyGraph> parse_conllu(const std::filesystem::path& path);
std::vector<DependencyGraph> parse_conllu_text(std::string_view text, const std::string& source = "<memory>");

// Pairs graph i with example i; node counts must equal token counts.
void attach_parses(std::vector<Example>& examples, std::vector<DependencyGraph> graphs, const std::string& source);

class Vocabulary {
 public:
  static constexpr std::size_t kPad = 0;
  static constexpr std::size_t kUnk = 1;
  static constexpr std::string_view kPadToken = "<pad>";
  static constexpr std::string_view kUnkToken = "<unk>";

  Vocabulary();
  // tokens[0] and tokens[1] must be the pad and unknown markers.
  static Vocabulary from_tokens(std::vector<std::string> tokens);

  std::size_t size() const { return tokens_.size(); }
  std::size_t id(std::string_view token) const;
  bool contains(std::string_view token) const;
  const std::string& token(std::size_t id) const { return tokens_.at(id); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  std::vector<std::size_t> encode(std::span<const std::string> tokens) const;
  std::string digest() const;

  bool operator==(const Vocabulary& o) const { return tokens_ == o.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Ids ordered by descending count, ties lexicographic; tokens below
// min_count map to the unknown id.
Vocabulary build_vocab(std::span<const Example> examples, std::size_t min_count = 1);
Vocabulary build_vocab(std::span<const std::vector<std::string>> sentences, std::size_t min_count = 1);

struct EmbeddingTable {
  Vocabulary vocab;
  std::size_t dim = 0;
  std::vector<double> matrix;  // vocab.size() x dim, row-major
  std::size_t found = 0;       // rows filled from the file

  std::span<const double> row(std::size_t id) const { return {matrix.data() + id * dim, dim}; }
};

// Reads GloVe text format. Rows for vocabulary tokens absent from the file
// are drawn from U(-0.25/dim, 0.25/dim); the pad row is zero. When
// expected_dim is set the file must match it.
EmbeddingTable load_glove(const std::filesystem::path& path, const Vocabulary& vocab, std::uint64_t seed = 1,
                          std::optional<std::size_t> expected_dim = std::nullopt);

}  // namespace eegcn::corpus
