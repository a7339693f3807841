#include "netsumm/layout.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <nlohmann/json.hpp>

#include "netsumm/errors.hpp"
#include "netsumm/rng.hpp"

namespace netsumm {
namespace {

constexpr double kMinSeparation = 1e-9;

void rescale(std::vector<Point>& pts) {
  if (pts.empty()) return;
  double lo_x = pts[0].x, hi_x = pts[0].x, lo_y = pts[0].y, hi_y = pts[0].y;
  for (const auto& p : pts) {
    lo_x = std::min(lo_x, p.x);
    hi_x = std::max(hi_x, p.x);
    lo_y = std::min(lo_y, p.y);
    hi_y = std::max(hi_y, p.y);
  }
  const double cx = 0.5 * (lo_x + hi_x);
  const double cy = 0.5 * (lo_y + hi_y);
  const double half = 0.5 * std::max(hi_x - lo_x, hi_y - lo_y);
  for (auto& p : pts) {
    p.x -= cx;
    p.y -= cy;
    if (half > 0.0) {
      p.x = std::clamp(p.x / half, -1.0, 1.0);
      p.y = std::clamp(p.y / half, -1.0, 1.0);
    }
  }
}

// Nudges exactly coincident points apart. Returns true if anything moved.
bool separate(std::vector<Point>& pts, Rng& rng, double scale) {
  bool moved = false;
  for (int pass = 0; pass < 8; ++pass) {
    bool clean = true;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      for (std::size_t j = i + 1; j < pts.size(); ++j) {
        if (distance(pts[i], pts[j]) > 0.0) continue;
        const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
        pts[j].x += scale * std::cos(angle);
        pts[j].y += scale * std::sin(angle);
        clean = false;
        moved = true;
      }
    }
    if (clean) break;
  }
  return moved;
}

}  // namespace

double distance(const Point& a, const Point& b) { return std::hypot(a.x - b.x, a.y - b.y); }

void ForceConfig::validate() const {
  if (iterations < 1) throw InputError("layout needs at least one iteration");
  if (!(repulsion > 0.0) || !(attraction > 0.0) || !(initial_temperature > 0.0)) {
    throw InputError("layout force scales must be positive");
  }
  if (min_edge_weight < 0.0) throw InputError("min_edge_weight must be non-negative");
}

nlohmann::json ForceConfig::to_json() const {
  return {{"iterations", iterations},
          {"repulsion", repulsion},
          {"attraction", attraction},
          {"initial_temperature", initial_temperature},
          {"min_edge_weight", min_edge_weight},
          {"seed", seed}};
}

ForceConfig ForceConfig::from_json(const nlohmann::json& j) {
  ForceConfig c;
  try {
    c.iterations = j.value("iterations", c.iterations);
    c.repulsion = j.value("repulsion", c.repulsion);
    c.attraction = j.value("attraction", c.attraction);
    c.initial_temperature = j.value("initial_temperature", c.initial_temperature);
    c.min_edge_weight = j.value("min_edge_weight", c.min_edge_weight);
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("bad layout config: ") + e.what());
  }
  c.validate();
  return c;
}

std::vector<Point> force_layout(const DocumentGraph& graph, const ForceConfig& config) {
  config.validate();
  const std::size_t n = graph.size();
  if (n == 0) throw InputError("layout needs a non-empty graph");
  if (n == 1) return {Point{}};

  Rng rng(config.seed);
  std::vector<Point> pos(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n) +
                         rng.uniform(-0.1, 0.1);
    const double radius = 1.0 + rng.uniform(-0.05, 0.05);
    pos[i] = {radius * std::cos(angle), radius * std::sin(angle)};
  }

  std::vector<Point> disp(n);
  for (std::size_t it = 0; it < config.iterations; ++it) {
    const double temp = config.initial_temperature *
                        (1.0 - static_cast<double>(it) / static_cast<double>(config.iterations));
    std::fill(disp.begin(), disp.end(), Point{});
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        double dx = pos[i].x - pos[j].x;
        double dy = pos[i].y - pos[j].y;
        double dist = std::hypot(dx, dy);
        if (dist < kMinSeparation) {
          const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
          dx = kMinSeparation * std::cos(angle);
          dy = kMinSeparation * std::sin(angle);
          dist = kMinSeparation;
        }
        double force = config.repulsion / dist;
        const double w = graph.weight(i, j);
        if (w >= config.min_edge_weight && w > 0.0) force -= config.attraction * w * dist * dist;
        const double fx = force * dx / dist;
        const double fy = force * dy / dist;
        disp[i].x += fx;
        disp[i].y += fy;
        disp[j].x -= fx;
        disp[j].y -= fy;
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double len = std::hypot(disp[i].x, disp[i].y);
      if (len <= 0.0) continue;
      const double step = std::min(len, temp);
      pos[i].x += disp[i].x / len * step;
      pos[i].y += disp[i].y / len * step;
    }
  }
  rescale(pos);
  separate(pos, rng, 1e-6);
  return pos;
}

LayoutResult two_step_layout(const DocumentGraph& graph, const Assignment& assignment, const SummaryGraph& summary,
                             const ForceConfig& config) {
  const std::size_t n = graph.size();
  if (assignment.size() != n) throw DimensionError("assignment length does not match graph size");
  std::size_t covered = 0;
  for (const auto& members : summary.supernodes) {
    covered += members.size();
    for (auto m : members) {
      if (m >= n) throw DimensionError("summary references a node outside the graph");
    }
  }
  if (covered != n || summary.size() == 0) throw DimensionError("summary does not partition the graph");

  LayoutResult out;
  out.ids = graph.ids();
  out.config = config;
  out.supernode_labels = summary.source_labels;
  const std::size_t k = summary.size();

  ForceConfig backbone_cfg = config;
  backbone_cfg.seed = derive_seed(config.seed, "backbone");
  out.supernode_positions = force_layout(summary.as_graph(), backbone_cfg);

  out.positions.assign(n, Point{});
  for (std::size_t g = 0; g < k; ++g) {
    const auto& members = summary.supernodes[g];
    const auto sub = induced_subgraph(graph, members);
    ForceConfig sub_cfg = config;
    sub_cfg.seed = derive_seed(config.seed, "group:" + std::to_string(summary.source_labels[g]));
    const auto local = force_layout(sub.graph, sub_cfg);
    const Point& centre = out.supernode_positions[g];
    for (std::size_t i = 0; i < sub.to_parent.size(); ++i) {
      out.positions[sub.to_parent[i]] = {local[i].x / static_cast<double>(k) + centre.x,
                                         local[i].y / static_cast<double>(k) + centre.y};
    }
  }
  Rng rng(derive_seed(config.seed, "separate"));
  out.jittered = separate(out.positions, rng, 1e-9);
  return out;
}

nlohmann::json LayoutResult::to_json() const {
  nlohmann::json positions_json = nlohmann::json::object();
  for (std::size_t i = 0; i < ids.size(); ++i) positions_json[ids[i]] = {positions[i].x, positions[i].y};
  nlohmann::json supernodes = nlohmann::json::object();
  for (std::size_t g = 0; g < supernode_positions.size(); ++g) {
    supernodes[std::to_string(supernode_labels[g])] = {supernode_positions[g].x, supernode_positions[g].y};
  }
  return {{"v", 1}, {"positions", positions_json}, {"supernodes", supernodes}, {"config", config.to_json()},
          {"jittered", jittered}};
}

}  // namespace netsumm
