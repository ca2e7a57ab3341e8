#pragma once

#include <gtest/gtest.h>

#include <string>

#include "probekit/error.hpp"
#include "probekit/graph.hpp"
#include "probekit/rng.hpp"

// Passes when `expr` throws probekit::Error with the given code.
#define EXPECT_ERROR_CODE(expr, expected_code)                                                    \
  do {                                                                                            \
    try {                                                                                         \
      (void)(expr);                                                                               \
      ADD_FAILURE() << #expr " did not throw";                                                    \
    } catch (const ::probekit::Error& e_) {                                                       \
      EXPECT_EQ(e_.code(), expected_code) << e_.what();                                           \
    }                                                                                             \
  } while (0)

namespace testing_support {

/// Erdos-Renyi style graph with ids "v0".."v{n-1}" and positions in a ball.
inline probekit::Graph random_graph(probekit::SplitMix64& rng, std::size_t n, double link_probability,
                                    double spread = 2.0) {
  probekit::Graph g;
  for (std::size_t i = 0; i < n; ++i) g.add_node("v" + std::to_string(i), spread * rng.in_unit_ball());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (rng.uniform() < link_probability) g.add_link("v" + std::to_string(i), "v" + std::to_string(j));
    }
  }
  return g;
}

}  // namespace testing_support
