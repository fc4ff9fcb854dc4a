#pragma once

// Random valid schemas for property tests: connected, bipartite, 2-5 entity
// types with sizes 1-6, no self or duplicate views.

#include <set>
#include <utility>
#include <vector>

#include "xmc/rng.hpp"
#include "xmc/schema.hpp"

namespace xmc_test {

inline xmc::SchemaPtr random_bipartite_schema(xmc::Rng& rng, xmc::Index max_size = 6) {
  const int k_count = 2 + static_cast<int>(rng.uniform_below(4));
  std::vector<int> color(k_count);
  color[0] = 0;
  color[1] = 1;
  for (int k = 2; k < k_count; ++k) color[k] = static_cast<int>(rng.uniform_below(2));

  std::vector<xmc::ViewDecl> views;
  std::set<std::pair<int, int>> used;
  auto add_view = [&](int a, int b) {
    const auto key = std::minmax(a, b);
    if (used.count({key.first, key.second})) return false;
    used.insert({key.first, key.second});
    if (rng.uniform_below(2) == 0) std::swap(a, b);
    views.push_back({a, b});
    return true;
  };

  // Spanning construction: each entity links to an earlier one of the other
  // color, so the view graph is connected and properly two-colored.
  add_view(0, 1);
  for (int k = 2; k < k_count; ++k) {
    std::vector<int> partners;
    for (int j = 0; j < k; ++j)
      if (color[j] != color[k]) partners.push_back(j);
    add_view(k, partners[rng.uniform_below(static_cast<xmc::Index>(partners.size()))]);
  }
  for (int a = 0; a < k_count; ++a)
    for (int b = a + 1; b < k_count; ++b)
      if (color[a] != color[b] && rng.uniform01() < 0.4) add_view(a, b);

  std::vector<xmc::Index> sizes(k_count);
  for (int k = 0; k < k_count; ++k) sizes[k] = 1 + rng.uniform_below(max_size);
  return std::make_shared<xmc::CollectiveSchema>(sizes, views);
}

}  // namespace xmc_test
