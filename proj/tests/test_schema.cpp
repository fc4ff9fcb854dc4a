#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <set>
#include <utility>

#include "doctest.h"
#include "support/random_schema.hpp"
#include "xmc/schema.hpp"

using namespace xmc;

namespace {

SchemaPtr chain(Index n) {
  return std::make_shared<CollectiveSchema>(std::vector<Index>{n, n, n, n},
                                            std::vector<ViewDecl>{{0, 1}, {0, 2}, {1, 3}});
}

}  // namespace

TEST_CASE("concatenation widths") {
  auto s = chain(2);
  CHECK(s->entity_width(0) == 4);
  CHECK(s->entity_width(1) == 4);
  CHECK(s->entity_width(2) == 2);
  CHECK(s->entity_width(3) == 2);

  auto s5 = chain(5);
  CHECK(s5->entity_width(0) == 10);
  CHECK(s5->entity_width(1) == 10);
  CHECK(s5->entity_width(2) == 5);
  CHECK(s5->entity_width(3) == 5);

  CollectiveSchema pair({2, 3}, {{0, 1}});
  CHECK(pair.entity_width(0) == 3);
  CHECK(pair.entity_width(1) == 2);
}

TEST_CASE("global index on the stacked layout") {
  auto s = chain(2);
  CHECK(s->total_size() == 8);
  CHECK(s->entity_offset(0) == 0);
  CHECK(s->entity_offset(1) == 2);
  CHECK(s->entity_offset(2) == 4);
  CHECK(s->entity_offset(3) == 6);

  const GlobalPair g = s->global_index({2, 0, 0});  // view (1,3), first cell
  CHECK(g.a == 2);
  CHECK(g.b == 6);
  const GlobalPair h = s->global_index({0, 0, 0});
  CHECK(h.a == 0);
  CHECK(h.b == 2);

  CHECK_THROWS_AS((void)s->global_index({0, 2, 0}), std::out_of_range);
  CHECK_THROWS_AS((void)s->global_index({3, 0, 0}), std::out_of_range);
}

TEST_CASE("entity column map and inverse") {
  auto s = chain(2);
  // Entity 0 concatenates view 0 then view 1, two columns each.
  const EntityColumn c = s->entity_column(0, 2);
  CHECK(c.view == 1);
  CHECK(c.index == 0);
  CHECK_FALSE(c.transposed);
  // Entity 1 concatenates view 0 transposed, then view 2.
  const EntityColumn d = s->entity_column(1, 0);
  CHECK(d.view == 0);
  CHECK(d.index == 0);
  CHECK(d.transposed);

  for (int k = 0; k < s->entity_count(); ++k)
    for (Index col = 0; col < s->entity_width(k); ++col)
      CHECK(s->entity_column_inverse(k, s->entity_column(k, col)) == col);

  CHECK_THROWS_AS((void)s->entity_column(0, 4), std::out_of_range);
}

TEST_CASE("entity cell mapping matches the column map") {
  auto s = chain(3);
  for (int k = 0; k < s->entity_count(); ++k) {
    for (Index i = 0; i < s->entity_size(k); ++i) {
      for (Index col = 0; col < s->entity_width(k); ++col) {
        const BasisIndex idx = s->entity_cell(k, i, col);
        CHECK(s->contains(idx));
        const ViewDecl v = s->view(idx.view);
        const EntityColumn ec = s->entity_column(k, col);
        if (ec.transposed) {
          CHECK(v.col_entity == k);
          CHECK(idx.j == i);
          CHECK(idx.i == ec.index);
        } else {
          CHECK(v.row_entity == k);
          CHECK(idx.i == i);
          CHECK(idx.j == ec.index);
        }
      }
    }
  }
}

TEST_CASE("validation: benchmark chain is bipartite with classes {0,3},{1,2}") {
  auto s = chain(4);
  const ValidationReport rep = validate(*s);
  REQUIRE(rep.ok);
  REQUIRE(rep.coloring.size() == 4);
  CHECK(rep.coloring[0] == rep.coloring[3]);
  CHECK(rep.coloring[1] == rep.coloring[2]);
  CHECK(rep.coloring[0] != rep.coloring[1]);
  CHECK_NOTHROW(require_bipartite(*s));
}

TEST_CASE("validation failures") {
  CollectiveSchema triangle({2, 2, 2}, {{0, 1}, {1, 2}, {0, 2}});
  auto rep = validate(triangle);
  CHECK_FALSE(rep.ok);
  bool odd = false;
  for (const auto& iss : rep.issues) odd |= iss.code == SchemaIssueCode::OddCycle;
  CHECK(odd);
  CHECK_THROWS_AS(require_bipartite(triangle), std::invalid_argument);

  CollectiveSchema self({2, 2}, {{0, 0}, {0, 1}});
  rep = validate(self);
  bool selfish = false;
  for (const auto& iss : rep.issues) selfish |= iss.code == SchemaIssueCode::SelfView;
  CHECK(selfish);

  CollectiveSchema dup({2, 2}, {{0, 1}, {1, 0}});
  rep = validate(dup);
  bool dupped = false;
  for (const auto& iss : rep.issues) dupped |= iss.code == SchemaIssueCode::DuplicateView;
  CHECK(dupped);

  CollectiveSchema split({2, 2, 2, 2}, {{0, 1}, {2, 3}});
  rep = validate(split);
  bool disc = false;
  for (const auto& iss : rep.issues) disc |= iss.code == SchemaIssueCode::Disconnected;
  CHECK(disc);

  CollectiveSchema empty({2, 0}, {{0, 1}});
  rep = validate(empty);
  bool hollow = false;
  for (const auto& iss : rep.issues) hollow |= iss.code == SchemaIssueCode::EmptyEntity;
  CHECK(hollow);
}

TEST_CASE("random schemas: width identity, proper coloring, injective global index") {
  Rng rng(0xc0ffee);
  for (int trial = 0; trial < 50; ++trial) {
    SchemaPtr s = xmc_test::random_bipartite_schema(rng);
    const ValidationReport rep = validate(*s);
    REQUIRE(rep.ok);

    Index lhs = 0, rhs = 0;
    for (int k = 0; k < s->entity_count(); ++k) lhs += s->entity_width(k) * s->entity_size(k);
    for (int v = 0; v < s->view_count(); ++v) rhs += s->view_cells(v);
    CHECK(lhs == 2 * rhs);

    for (int v = 0; v < s->view_count(); ++v)
      CHECK(rep.coloring[s->view(v).row_entity] != rep.coloring[s->view(v).col_entity]);

    std::set<std::pair<Index, Index>> seen;
    for (int v = 0; v < s->view_count(); ++v)
      for (Index i = 0; i < s->view_rows(v); ++i)
        for (Index j = 0; j < s->view_cols(v); ++j) {
          const GlobalPair g = s->global_index({v, i, j});
          CHECK(g.a != g.b);
          CHECK(seen.insert({g.a, g.b}).second);
        }
  }
}
