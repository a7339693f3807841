#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "netsumm/netgraph.hpp"

namespace netsumm {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

double distance(const Point& a, const Point& b);

struct ForceConfig {
  std::size_t iterations = 300;
  double repulsion = 0.05;    // c_r, repulsive magnitude c_r / dist
  double attraction = 1.0;    // c_a, attractive magnitude c_a * w * dist^2
  double initial_temperature = 0.1;  // max displacement per step, cooled linearly to 0
  double min_edge_weight = 0.01;     // lighter edges are ignored
  std::uint64_t seed = 1;

  void validate() const;
  nlohmann::json to_json() const;
  static ForceConfig from_json(const nlohmann::json& j);
};

/// Weighted force-directed layout rescaled into [-1, 1]^2.
std::vector<Point> force_layout(const DocumentGraph& graph, const ForceConfig& config);

struct LayoutResult {
  std::vector<std::string> ids;
  std::vector<Point> positions;             // per document, graph order
  std::vector<int> supernode_labels;        // assignment label of each super-node
  std::vector<Point> supernode_positions;
  ForceConfig config;
  bool jittered = false;  // a post-pass separated coincident positions

  nlohmann::json to_json() const;
};

/// Backbone layout of the summary, per-group sublayouts shrunk by 1/k and
/// placed at their super-node.
LayoutResult two_step_layout(const DocumentGraph& graph, const Assignment& assignment, const SummaryGraph& summary,
                             const ForceConfig& config);

}  // namespace netsumm
