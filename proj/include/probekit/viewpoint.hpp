#pragma once

#include <string_view>

#include "probekit/error.hpp"
#include "probekit/math.hpp"

namespace probekit {

enum class ViewMode { Egocentric, Exocentric };

constexpr std::string_view to_string(ViewMode m) { return m == ViewMode::Egocentric ? "egocentric" : "exocentric"; }

inline ViewMode parse_view_mode(std::string_view s) {
  if (s == "egocentric") return ViewMode::Egocentric;
  if (s == "exocentric") return ViewMode::Exocentric;
  throw Error(ErrorCode::InvalidParameter, "view mode must be 'egocentric' or 'exocentric'");
}

/// Camera pose. The camera looks down its local -z axis with +y up.
struct Viewpoint {
  Vec3 position;
  Quat orientation;
  ViewMode mode{ViewMode::Egocentric};

  Vec3 view_direction() const { return orientation.rotate({0.0, 0.0, -1.0}); }
  Vec3 up() const { return orientation.rotate({0.0, 1.0, 0.0}); }

  /// Local (camera-space) offset to world space.
  Vec3 to_world(const Vec3& local) const { return position + orientation.rotate(local); }

  void validate() const {
    if (!is_finite(position)) throw Error(ErrorCode::NonFiniteCoordinate, "viewpoint position is not finite");
    if (!is_finite(orientation) || !orientation.is_unit())
      throw Error(ErrorCode::InvalidParameter, "viewpoint orientation must be a unit quaternion");
  }

  friend bool operator==(const Viewpoint&, const Viewpoint&) = default;
};

}  // namespace probekit
