#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "netsumm/corpus.hpp"

namespace netsumm {

/// Weighted undirected graph over documents, stored as a dense symmetric
/// matrix with zero diagonal. Degrees are kept in sync with the weights.
class DocumentGraph {
 public:
  DocumentGraph() = default;

  /// `weights` is row-major n*n. Throws InputError unless symmetric,
  /// zero-diagonal, finite and non-negative. Empty `ids` get "0".."n-1".
  DocumentGraph(std::size_t n, std::vector<double> weights, std::vector<std::string> ids = {});

  std::size_t size() const { return n_; }
  double weight(std::size_t u, std::size_t v) const { return weights_[u * n_ + v]; }
  std::span<const double> row(std::size_t u) const { return {weights_.data() + u * n_, n_}; }
  double degree(std::size_t u) const { return degrees_[u]; }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<double>& degrees() const { return degrees_; }
  const std::vector<std::string>& ids() const { return ids_; }
  std::optional<std::size_t> index_of(const std::string& id) const;

 private:
  std::size_t n_ = 0;
  std::vector<double> weights_;
  std::vector<double> degrees_;
  std::vector<std::string> ids_;
};

/// Label per node in [0, k). Empty groups are allowed.
struct Assignment {
  std::vector<int> labels;
  int k = 1;

  std::size_t size() const { return labels.size(); }
  void validate() const;

  static Assignment trivial(std::size_t n) { return {std::vector<int>(n, 0), 1}; }

  friend bool operator==(const Assignment&, const Assignment&) = default;
};

/// Groups of a summary network and their average-similarity super-edges.
struct SummaryGraph {
  std::vector<std::vector<std::size_t>> supernodes;  // member node indices, ascending
  std::vector<int> source_labels;                    // assignment label of each super-node
  std::vector<double> superedges;                    // row-major k*k, zero diagonal
  int level = 0;

  std::size_t size() const { return supernodes.size(); }
  double superedge(std::size_t p, std::size_t q) const { return superedges[p * supernodes.size() + q]; }

  /// The super-node network itself as a graph, e.g. for layout.
  DocumentGraph as_graph() const;
};

/// Cosine similarity over TF-IDF vectors; all-zero vectors have similarity 0.
DocumentGraph build_document_graph(const Corpus& corpus);
DocumentGraph build_document_graph(const std::vector<TermVector>& vectors, std::vector<std::string> ids);

/// Sum over occupied groups of within-group weight over group degree.
/// Groups with zero degree mass contribute 0.
double f_prob(const DocumentGraph& graph, const Assignment& assignment);

struct MergeResult {
  DocumentGraph graph;
  std::size_t merged_node = 0;             // index of the new node (always last)
  std::vector<std::size_t> old_to_new;     // members map to merged_node
};

/// Replaces `members` with one node whose edge to each outside node is the
/// members' average weight to it.
MergeResult merge_supernode(const DocumentGraph& graph, const std::vector<std::size_t>& members);

SummaryGraph build_summary(const DocumentGraph& graph, const Assignment& assignment, int level = 0);

struct Subgraph {
  DocumentGraph graph;
  std::vector<std::size_t> to_parent;  // subgraph index -> parent index
};

/// Restriction of the graph to `members` (deduplicated, ascending order).
Subgraph induced_subgraph(const DocumentGraph& graph, const std::vector<std::size_t>& members);

/// Edge list: one JSON header line {"n":..,"ids":[..]} then "u v w" per
/// positive-weight pair u < v.
std::string export_edge_list(const DocumentGraph& graph);
DocumentGraph parse_edge_list(std::string_view text);

}  // namespace netsumm
