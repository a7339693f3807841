#include "netsumm/netgraph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <nlohmann/json.hpp>

#include "netsumm/errors.hpp"

namespace netsumm {

DocumentGraph::DocumentGraph(std::size_t n, std::vector<double> weights, std::vector<std::string> ids)
    : n_(n), weights_(std::move(weights)), degrees_(n, 0.0), ids_(std::move(ids)) {
  if (weights_.size() != n * n) throw InputError("weight matrix size does not match node count");
  if (ids_.empty()) {
    for (std::size_t i = 0; i < n; ++i) ids_.push_back(std::to_string(i));
  }
  if (ids_.size() != n) throw InputError("id table size does not match node count");
  for (std::size_t u = 0; u < n; ++u) {
    if (weights_[u * n + u] != 0.0) throw InputError("graph diagonal must be zero");
    for (std::size_t v = 0; v < n; ++v) {
      const double w = weights_[u * n + v];
      if (!std::isfinite(w) || w < 0.0) throw InputError("graph weights must be finite and non-negative");
      if (w != weights_[v * n + u]) throw InputError("graph weights must be symmetric");
      degrees_[u] += w;
    }
  }
}

std::optional<std::size_t> DocumentGraph::index_of(const std::string& id) const {
  auto it = std::find(ids_.begin(), ids_.end(), id);
  if (it == ids_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - ids_.begin());
}

void Assignment::validate() const {
  if (k < 1) throw InputError("assignment needs k >= 1");
  for (int l : labels) {
    if (l < 0 || l >= k) throw InputError("label " + std::to_string(l) + " out of range for k=" + std::to_string(k));
  }
}

DocumentGraph SummaryGraph::as_graph() const {
  std::vector<std::string> ids;
  for (int l : source_labels) ids.push_back(std::to_string(l));
  return DocumentGraph(supernodes.size(), superedges, std::move(ids));
}

DocumentGraph build_document_graph(const std::vector<TermVector>& vectors, std::vector<std::string> ids) {
  const std::size_t n = vectors.size();
  if (n < 2) throw InputError("document graph needs at least 2 documents");
  std::vector<double> norms(n);
  for (std::size_t i = 0; i < n; ++i) norms[i] = vectors[i].norm();
  std::vector<double> w(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double c = 0.0;
      if (norms[i] > 0.0 && norms[j] > 0.0) {
        c = std::clamp(vectors[i].dot(vectors[j]) / (norms[i] * norms[j]), 0.0, 1.0);
      }
      w[i * n + j] = c;
      w[j * n + i] = c;
    }
  }
  return DocumentGraph(n, std::move(w), std::move(ids));
}

DocumentGraph build_document_graph(const Corpus& corpus) {
  if (corpus.size() < 2) throw InputError("document graph needs at least 2 documents");
  return build_document_graph(tfidf(corpus), corpus.ids());
}

double f_prob(const DocumentGraph& graph, const Assignment& assignment) {
  const std::size_t n = graph.size();
  if (assignment.size() != n) throw DimensionError("assignment length does not match graph size");
  const auto k = static_cast<std::size_t>(assignment.k);
  std::vector<double> within(k, 0.0);
  std::vector<double> degree(k, 0.0);
  // First member of each group fixes the summation order, so relabeling
  // groups yields bitwise-identical results.
  std::vector<std::size_t> first(k, n);
  for (std::size_t u = 0; u < n; ++u) {
    const auto g = static_cast<std::size_t>(assignment.labels[u]);
    if (g >= k) throw InputError("label out of range");
    if (first[g] == n) first[g] = u;
    // Row totals and within-group row sums share one summation order, so a
    // group holding every neighbour of its members scores exactly 1.
    const auto row = graph.row(u);
    double row_within = 0.0, row_total = 0.0;
    for (std::size_t v = 0; v < n; ++v) {
      row_total += row[v];
      if (assignment.labels[v] == assignment.labels[u]) row_within += row[v];
    }
    within[g] += row_within;
    degree[g] += row_total;
  }
  std::vector<std::size_t> order;
  for (std::size_t g = 0; g < k; ++g) {
    if (first[g] != n) order.push_back(g);
  }
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return first[a] < first[b]; });
  double total = 0.0;
  for (auto g : order) {
    if (degree[g] > 0.0) total += within[g] / degree[g];
  }
  return total;
}

MergeResult merge_supernode(const DocumentGraph& graph, const std::vector<std::size_t>& members) {
  const std::size_t n = graph.size();
  if (members.empty()) throw InputError("merge needs a non-empty member set");
  std::vector<bool> in(n, false);
  for (auto m : members) {
    if (m >= n) throw InputError("unknown node " + std::to_string(m));
    in[m] = true;
  }
  const auto b = static_cast<double>(std::count(in.begin(), in.end(), true));

  MergeResult out;
  out.old_to_new.assign(n, 0);
  std::vector<std::size_t> kept;
  for (std::size_t u = 0; u < n; ++u) {
    if (!in[u]) {
      out.old_to_new[u] = kept.size();
      kept.push_back(u);
    }
  }
  const std::size_t m = kept.size() + 1;
  out.merged_node = kept.size();
  for (std::size_t u = 0; u < n; ++u) {
    if (in[u]) out.old_to_new[u] = out.merged_node;
  }

  std::vector<double> w(m * m, 0.0);
  std::vector<std::string> ids;
  for (std::size_t a = 0; a < kept.size(); ++a) {
    ids.push_back(graph.ids()[kept[a]]);
    for (std::size_t c = 0; c < kept.size(); ++c) w[a * m + c] = graph.weight(kept[a], kept[c]);
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (in[j]) sum += graph.weight(j, kept[a]);
    }
    w[a * m + out.merged_node] = sum / b;
    w[out.merged_node * m + a] = sum / b;
  }
  std::string merged_id = "{";
  for (std::size_t u = 0; u < n; ++u) {
    if (!in[u]) continue;
    if (merged_id.size() > 1) merged_id += ',';
    merged_id += graph.ids()[u];
  }
  ids.push_back(merged_id + "}");
  out.graph = DocumentGraph(m, std::move(w), std::move(ids));
  return out;
}

SummaryGraph build_summary(const DocumentGraph& graph, const Assignment& assignment, int level) {
  const std::size_t n = graph.size();
  if (assignment.size() != n) throw DimensionError("assignment length does not match graph size");
  assignment.validate();
  std::vector<std::vector<std::size_t>> groups(static_cast<std::size_t>(assignment.k));
  for (std::size_t u = 0; u < n; ++u) groups[static_cast<std::size_t>(assignment.labels[u])].push_back(u);

  SummaryGraph s;
  s.level = level;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (groups[g].empty()) continue;
    s.supernodes.push_back(std::move(groups[g]));
    s.source_labels.push_back(static_cast<int>(g));
  }
  const std::size_t k = s.supernodes.size();
  s.superedges.assign(k * k, 0.0);
  for (std::size_t p = 0; p < k; ++p) {
    for (std::size_t q = p + 1; q < k; ++q) {
      double sum = 0.0;
      for (auto u : s.supernodes[p]) {
        for (auto v : s.supernodes[q]) sum += graph.weight(u, v);
      }
      const double mean = sum / static_cast<double>(s.supernodes[p].size() * s.supernodes[q].size());
      s.superedges[p * k + q] = mean;
      s.superedges[q * k + p] = mean;
    }
  }
  return s;
}

Subgraph induced_subgraph(const DocumentGraph& graph, const std::vector<std::size_t>& members) {
  if (members.empty()) throw InputError("induced subgraph needs a non-empty member set");
  Subgraph sub;
  sub.to_parent = members;
  std::sort(sub.to_parent.begin(), sub.to_parent.end());
  sub.to_parent.erase(std::unique(sub.to_parent.begin(), sub.to_parent.end()), sub.to_parent.end());
  for (auto m : sub.to_parent) {
    if (m >= graph.size()) throw InputError("unknown node " + std::to_string(m));
  }
  const std::size_t m = sub.to_parent.size();
  std::vector<double> w(m * m);
  std::vector<std::string> ids;
  for (std::size_t a = 0; a < m; ++a) {
    ids.push_back(graph.ids()[sub.to_parent[a]]);
    for (std::size_t b = 0; b < m; ++b) w[a * m + b] = graph.weight(sub.to_parent[a], sub.to_parent[b]);
  }
  sub.graph = DocumentGraph(m, std::move(w), std::move(ids));
  return sub;
}

std::string export_edge_list(const DocumentGraph& graph) {
  nlohmann::json header = {{"n", graph.size()}, {"ids", graph.ids()}};
  std::string out = header.dump() + "\n";
  char buf[96];
  for (std::size_t u = 0; u < graph.size(); ++u) {
    for (std::size_t v = u + 1; v < graph.size(); ++v) {
      const double w = graph.weight(u, v);
      if (w == 0.0) continue;
      std::snprintf(buf, sizeof buf, "%zu %zu %.17g\n", u, v, w);
      out += buf;
    }
  }
  return out;
}

DocumentGraph parse_edge_list(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line)) throw InputError("edge list: missing header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error&) {
    throw InputError("edge list: malformed header");
  }
  const auto n = header.at("n").get<std::size_t>();
  auto ids = header.at("ids").get<std::vector<std::string>>();
  std::vector<double> w(n * n, 0.0);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::size_t u = 0, v = 0;
    double weight = 0.0;
    if (!(fields >> u >> v >> weight) || u >= n || v >= n || u == v) {
      throw InputError("edge list: bad edge on line " + std::to_string(line_no));
    }
    w[u * n + v] = weight;
    w[v * n + u] = weight;
  }
  return DocumentGraph(n, std::move(w), std::move(ids));
}

}  // namespace netsumm
