#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "eegcn/corpus.hpp"

namespace eegcn::graph {

// Corpus-level relation-label frequencies. The weight of a dependency edge
// is the relative frequency of its label over all training edges.
class SdiTable {
 public:
  SdiTable() = default;

  void add(const std::string& relation, std::uint64_t count = 1);
  void merge(const SdiTable& other);

  std::uint64_t count(const std::string& relation) const;
  std::uint64_t total() const { return total_; }
  bool contains(const std::string& relation) const { return counts_.contains(relation); }
  // Unseen labels get 1/total, the smallest observed granularity.
  double sdi(const std::string& relation) const;
  const std::map<std::string, std::uint64_t>& counts() const { return counts_; }

  // {label: count, ..., "__total": total}
  nlohmann::json to_json() const;
  static SdiTable from_json(const nlohmann::json& j);

  bool operator==(const SdiTable&) const = default;

 private:
  std::map<std::string, std::uint64_t> counts_;
  std::uint64_t total_ = 0;
};

// Counts every edge label across the graphs. Throws std::invalid_argument on
// an empty corpus or one without edges.
SdiTable compute_sdi_table(std::span<const corpus::DependencyGraph> graphs);

enum class AdjacencyMode : std::uint8_t { identity, binary, sdi };

struct AdjacencyMatrix {
  std::size_t n = 0;
  AdjacencyMode mode = AdjacencyMode::binary;
  std::vector<double> values;  // n x n, row-major; [head][dependent]
  std::size_t unseen_labels = 0;

  double operator()(std::size_t i, std::size_t j) const { return values[i * n + j]; }
  // Nonzero off-diagonal entries in row i.
  std::size_t degree(std::size_t row) const;
  AdjacencyMatrix transposed() const;
};

AdjacencyMatrix identity_adjacency(std::size_t n);
AdjacencyMatrix binary_adjacency(const corpus::DependencyGraph& graph);
AdjacencyMatrix sdi_adjacency(const corpus::DependencyGraph& graph, const SdiTable& table);

}  // namespace eegcn::graph
