#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "probekit/error.hpp"
#include "probekit/graph.hpp"
#include "probekit/layout3d.hpp"
#include "probekit/rng.hpp"

namespace probekit {

/// Shape of a synthetic player graph: players linked when they share a club,
/// topped up with cross-club links until the requested link count is met.
struct SyntheticSpec {
  std::size_t nodes{95};
  std::size_t links{1046};
  std::size_t attrs{39};
  std::uint64_t seed{7};

  friend bool operator==(const SyntheticSpec&, const SyntheticSpec&) = default;
};

namespace synth_detail {

// "club" is the only string attribute; the rest are per-player statistics.
inline constexpr std::array<std::string_view, 39> kAttributeNames{
    "club",          "appearances",       "minutesPlayed",   "goals",         "assists",
    "passAccuracy",  "passesCompleted",   "passesAttempted", "shots",         "shotsOnTarget",
    "tackles",       "tacklesWon",        "interceptions",   "clearances",    "blocks",
    "duelsWon",      "duelsLost",         "aerialsWon",      "foulsCommitted", "foulsSuffered",
    "yellowCards",   "redCards",          "offsides",        "crosses",       "crossAccuracy",
    "dribbles",      "dribblesCompleted", "keyPasses",       "bigChances",    "saves",
    "cleanSheets",   "goalsConceded",     "distanceCovered", "topSpeed",      "sprints",
    "age",           "height",            "weight",          "marketValue",
};

inline std::string attribute_name(std::size_t i) {
  if (i < kAttributeNames.size()) return std::string(kAttributeNames[i]);
  return "stat" + std::to_string(i);
}

inline std::string player_id(std::size_t i, std::size_t n) {
  const std::size_t width = std::to_string(n).size();
  std::string digits = std::to_string(i + 1);
  return "p" + std::string(width - digits.size(), '0') + digits;
}

inline AttrValue attribute_value(const std::string& name, SplitMix64& rng, std::size_t club) {
  if (name == "club") return "club" + std::to_string(club + 1);
  if (name == "minutesPlayed") return std::floor(rng.uniform(0.0, 1171.0));
  if (name == "appearances") return std::floor(rng.uniform(0.0, 14.0));
  if (name == "passAccuracy" || name == "crossAccuracy") return std::round(rng.uniform(40.0, 95.0) * 10.0) / 10.0;
  if (name == "age") return std::floor(rng.uniform(17.0, 38.0));
  if (name == "height") return std::floor(rng.uniform(165.0, 200.0));
  if (name == "weight") return std::floor(rng.uniform(60.0, 95.0));
  if (name == "topSpeed") return std::round(rng.uniform(25.0, 36.0) * 10.0) / 10.0;
  if (name == "marketValue") return std::round(rng.uniform(0.5, 120.0) * 10.0) / 10.0;
  return std::floor(rng.uniform(0.0, 60.0));
}

}  // namespace synth_detail

inline Graph generate_graph(const SyntheticSpec& spec) {
  const std::size_t n = spec.nodes;
  const std::size_t max_links = n < 2 ? 0 : n * (n - 1) / 2;
  if (spec.links > max_links)
    throw Error(ErrorCode::InvalidParameter,
                std::to_string(spec.links) + " links do not fit in a simple graph on " + std::to_string(n) + " nodes");

  SplitMix64 rng(spec.seed);
  const std::size_t clubs = std::max<std::size_t>(1, (n + 5) / 6);
  std::vector<std::size_t> club_of(n);
  for (auto& c : club_of) c = static_cast<std::size_t>(rng.below(clubs));

  std::vector<std::string> names;
  for (std::size_t a = 0; a < spec.attrs; ++a) names.push_back(synth_detail::attribute_name(a));

  Graph graph;
  LayoutParams seeding;
  seeding.seed = spec.seed;
  const double radius = seeding_radius(n, seeding);
  for (std::size_t i = 0; i < n; ++i) {
    Attributes attrs;
    for (const auto& name : names) attrs.emplace(name, synth_detail::attribute_value(name, rng, club_of[i]));
    graph.add_node(synth_detail::player_id(i, n), radius * rng.in_unit_ball(), std::move(attrs));
  }

  std::vector<std::pair<std::size_t, std::size_t>> same_club;
  std::vector<std::pair<std::size_t, std::size_t>> cross_club;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) (club_of[i] == club_of[j] ? same_club : cross_club).emplace_back(i, j);
  }
  shuffle(same_club, rng);
  shuffle(cross_club, rng);
  same_club.insert(same_club.end(), cross_club.begin(), cross_club.end());
  for (std::size_t k = 0; k < spec.links; ++k) {
    graph.add_link(synth_detail::player_id(same_club[k].first, n), synth_detail::player_id(same_club[k].second, n));
  }
  return graph;
}

}  // namespace probekit
