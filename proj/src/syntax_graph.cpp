#include "eegcn/syntax_graph.hpp"

#include <stdexcept>

#include <nlohmann/json.hpp>

namespace eegcn::graph {

namespace {
constexpr const char* kTotalKey = "__total";
}

void SdiTable::add(const std::string& relation, std::uint64_t count) {
  counts_[relation] += count;
  total_ += count;
}

void SdiTable::merge(const SdiTable& other) {
  for (const auto& [rel, c] : other.counts_) add(rel, c);
}

std::uint64_t SdiTable::count(const std::string& relation) const {
  const auto it = counts_.find(relation);
  return it == counts_.end() ? 0 : it->second;
}

double SdiTable::sdi(const std::string& relation) const {
  if (total_ == 0) throw std::logic_error("SDI lookup on an empty table");
  const auto c = count(relation);
  return static_cast<double>(c == 0 ? 1 : c) / static_cast<double>(total_);
}

nlohmann::json SdiTable::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [rel, c] : counts_) j[rel] = c;
  j[kTotalKey] = total_;
  return j;
}

SdiTable SdiTable::from_json(const nlohmann::json& j) {
  SdiTable t;
  for (const auto& [key, value] : j.items()) {
    if (key == kTotalKey) continue;
    t.add(key, value.get<std::uint64_t>());
  }
  if (!j.contains(kTotalKey) || j.at(kTotalKey).get<std::uint64_t>() != t.total_) {
    throw std::invalid_argument("SDI table total does not match the sum of its label counts");
  }
  return t;
}

SdiTable compute_sdi_table(std::span<const corpus::DependencyGraph> graphs) {
  if (graphs.empty()) throw std::invalid_argument("cannot compute SDI statistics from an empty corpus");
  SdiTable t;
  for (const auto& g : graphs)
    for (const auto& e : g.edges) t.add(e.relation);
  if (t.total() == 0) throw std::invalid_argument("cannot compute SDI statistics: corpus has no dependency edges");
  return t;
}

std::size_t AdjacencyMatrix::degree(std::size_t row) const {
  std::size_t d = 0;
  for (std::size_t j = 0; j < n; ++j)
    if (j != row && values[row * n + j] != 0.0) ++d;
  return d;
}

AdjacencyMatrix AdjacencyMatrix::transposed() const {
  AdjacencyMatrix t = *this;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) t.values[j * n + i] = values[i * n + j];
  return t;
}

AdjacencyMatrix identity_adjacency(std::size_t n) {
  AdjacencyMatrix a{n, AdjacencyMode::identity, std::vector<double>(n * n, 0.0), 0};
  for (std::size_t i = 0; i < n; ++i) a.values[i * n + i] = 1.0;
  return a;
}

AdjacencyMatrix binary_adjacency(const corpus::DependencyGraph& graph) {
  AdjacencyMatrix a = identity_adjacency(graph.n);
  a.mode = AdjacencyMode::binary;
  for (const auto& e : graph.edges) a.values[(e.head - 1) * graph.n + (e.dependent - 1)] = 1.0;
  return a;
}

AdjacencyMatrix sdi_adjacency(const corpus::DependencyGraph& graph, const SdiTable& table) {
  AdjacencyMatrix a = identity_adjacency(graph.n);
  a.mode = AdjacencyMode::sdi;
  for (const auto& e : graph.edges) {
    if (!table.contains(e.relation)) ++a.unseen_labels;
    a.values[(e.head - 1) * graph.n + (e.dependent - 1)] = table.sdi(e.relation);
  }
  return a;
}

}  // namespace eegcn::graph
