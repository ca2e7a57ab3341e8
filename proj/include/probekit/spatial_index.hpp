#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "probekit/error.hpp"
#include "probekit/graph.hpp"
#include "probekit/math.hpp"

namespace probekit {

/// Closed ball: p is inside iff |p - center| <= radius, compared exactly.
struct Ball {
  Vec3 center;
  double radius{1.0};

  static Ball make(const Vec3& center, double radius) {
    if (!(radius > 0.0) || !std::isfinite(radius))
      throw Error(ErrorCode::NonPositiveRadius, "ball radius must be positive and finite");
    if (!is_finite(center)) throw Error(ErrorCode::NonFiniteCoordinate, "ball center is not finite");
    return {center, radius};
  }

  bool contains(const Vec3& p) const { return distance(p, center) <= radius; }

  friend bool operator==(const Ball&, const Ball&) = default;
};

struct Ray {
  Vec3 origin;
  Vec3 direction{0.0, 0.0, -1.0};

  /// Normalizes `direction`; zero or non-finite input is rejected. A
  /// direction already unit to within rounding is kept bit-for-bit, so a
  /// ray survives a serialize/parse cycle unchanged.
  static Ray make(const Vec3& origin, const Vec3& direction) {
    if (!is_finite(origin) || !is_finite(direction))
      throw Error(ErrorCode::NonFiniteCoordinate, "ray origin/direction not finite");
    const double n = norm(direction);
    if (!(n > 0.0)) throw Error(ErrorCode::InvalidParameter, "ray direction must be nonzero");
    if (std::abs(n - 1.0) <= 4.0 * std::numeric_limits<double>::epsilon()) return {origin, direction};
    return {origin, direction / n};
  }

  friend bool operator==(const Ray&, const Ray&) = default;
};

inline Vec3 point_on_ray(const Ray& ray, double t) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw Error(ErrorCode::NegativeParameter, "ray parameter must be >= 0");
  return ray.origin + t * ray.direction;
}

/// Uniform grid over node positions. The grid only prunes candidates; every
/// reported node passed the exact closed-ball test, so results equal a
/// linear scan.
class SpatialIndex {
 public:
  /// Cell edge is max(bbox extent / kCellsPerAxis, typical_radius).
  static constexpr double kCellsPerAxis = 32.0;

  SpatialIndex() = default;
  explicit SpatialIndex(const Graph& graph, double typical_radius = 1.0) : typical_radius_(typical_radius) {
    rebuild(graph);
  }

  void rebuild(const Graph& graph) {
    ids_.clear();
    positions_.clear();
    ids_.reserve(graph.node_count());
    positions_.reserve(graph.node_count());
    for (const auto& [id, node] : graph.nodes()) {
      ids_.push_back(id);
      positions_.push_back(node.position);
    }
    revision_ = graph.revision();
    build_grid();
  }

  bool is_current(const Graph& graph) const { return revision_ == graph.revision(); }

  /// Rebuilds only when the graph changed since the last build.
  void refresh(const Graph& graph) {
    if (!is_current(graph)) rebuild(graph);
  }

  /// Sorted ids of indexed nodes inside the closed ball.
  std::vector<NodeId> nodes_in_ball(const Ball& ball) const {
    std::vector<std::uint32_t> hits;
    visit_candidates(ball, [&](std::uint32_t i) {
      if (distance(positions_[i], ball.center) <= ball.radius) hits.push_back(i);
      return true;
    });
    std::sort(hits.begin(), hits.end());
    std::vector<NodeId> out;
    out.reserve(hits.size());
    for (auto i : hits) out.push_back(ids_[i]);
    return out;
  }

  /// As above, but in strict mode throws StaleIndex if `graph` moved on
  /// since the last rebuild.
  std::vector<NodeId> nodes_in_ball(const Graph& graph, const Ball& ball, bool strict = true) const {
    if (strict && !is_current(graph))
      throw Error(ErrorCode::StaleIndex, "spatial index was built for an older graph revision");
    return nodes_in_ball(ball);
  }

  bool any_in_ball(const Ball& ball) const {
    bool found = false;
    visit_candidates(ball, [&](std::uint32_t i) {
      found = distance(positions_[i], ball.center) <= ball.radius;
      return !found;
    });
    return found;
  }

  std::size_t size() const { return ids_.size(); }
  double cell_size() const { return cell_; }
  std::array<int, 3> dims() const { return dims_; }

 private:
  void build_grid() {
    cell_start_.clear();
    entries_.clear();
    if (ids_.empty()) {
      dims_ = {0, 0, 0};
      return;
    }
    Vec3 lo = positions_.front();
    Vec3 hi = lo;
    for (const auto& p : positions_) {
      lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
      hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
    }
    origin_ = lo;
    const Vec3 ext = hi - lo;
    const double extent = std::max({ext.x, ext.y, ext.z});
    cell_ = std::max(extent / kCellsPerAxis, typical_radius_);
    if (!(cell_ > 0.0) || !std::isfinite(cell_)) cell_ = 1.0;
    dims_ = {axis_cells(ext.x), axis_cells(ext.y), axis_cells(ext.z)};

    const std::size_t cells = static_cast<std::size_t>(dims_[0]) * dims_[1] * dims_[2];
    std::vector<std::uint32_t> cell_of(ids_.size());
    cell_start_.assign(cells + 1, 0);
    for (std::size_t i = 0; i < positions_.size(); ++i) {
      const Vec3 rel = positions_[i] - origin_;
      cell_of[i] = flat(clamp_cell(rel.x, 0), clamp_cell(rel.y, 1), clamp_cell(rel.z, 2));
      ++cell_start_[cell_of[i] + 1];
    }
    for (std::size_t c = 0; c < cells; ++c) cell_start_[c + 1] += cell_start_[c];
    entries_.resize(ids_.size());
    std::vector<std::uint32_t> cursor(cell_start_.begin(), cell_start_.end() - 1);
    for (std::size_t i = 0; i < positions_.size(); ++i) entries_[cursor[cell_of[i]]++] = static_cast<std::uint32_t>(i);
  }

  int axis_cells(double extent) const { return static_cast<int>(std::floor(extent / cell_)) + 1; }

  int clamp_cell(double rel, int axis) const {
    const double c = std::floor(rel / cell_);
    return static_cast<int>(std::clamp(c, 0.0, static_cast<double>(dims_[axis] - 1)));
  }

  std::uint32_t flat(int i, int j, int k) const {
    return static_cast<std::uint32_t>((static_cast<std::size_t>(k) * dims_[1] + j) * dims_[0] + i);
  }

  // Visits candidates until fn returns false. The cell range is padded by one
  // cell on each side so rounding in the cell assignment cannot drop a node.
  template <typename Fn>
  void visit_candidates(const Ball& ball, Fn&& fn) const {
    if (ids_.empty()) return;
    int lo[3];
    int hi[3];
    const double c[3] = {ball.center.x - origin_.x, ball.center.y - origin_.y, ball.center.z - origin_.z};
    for (int a = 0; a < 3; ++a) {
      const double l = std::floor((c[a] - ball.radius) / cell_) - 1.0;
      const double h = std::floor((c[a] + ball.radius) / cell_) + 1.0;
      if (h < 0.0 || l > dims_[a] - 1) return;
      lo[a] = static_cast<int>(std::max(l, 0.0));
      hi[a] = static_cast<int>(std::min(h, static_cast<double>(dims_[a] - 1)));
    }
    for (int k = lo[2]; k <= hi[2]; ++k) {
      for (int j = lo[1]; j <= hi[1]; ++j) {
        for (int i = lo[0]; i <= hi[0]; ++i) {
          const auto cell = flat(i, j, k);
          for (auto e = cell_start_[cell]; e < cell_start_[cell + 1]; ++e) {
            if (!fn(entries_[e])) return;
          }
        }
      }
    }
  }

  double typical_radius_{1.0};
  std::vector<NodeId> ids_;
  std::vector<Vec3> positions_;
  std::uint64_t revision_{0};
  Vec3 origin_;
  double cell_{1.0};
  std::array<int, 3> dims_{0, 0, 0};
  std::vector<std::uint32_t> cell_start_;
  std::vector<std::uint32_t> entries_;
};

}  // namespace probekit
