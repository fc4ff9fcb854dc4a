#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <array>
#include <cmath>

#include "doctest.h"
#include "support/random_schema.hpp"
#include "xmc/collective.hpp"
#include "xmc/factors.hpp"
#include "xmc/schema.hpp"

using namespace xmc;

namespace {

CollectiveMatrix<double> random_collective(const SchemaPtr& s, Rng& rng) {
  auto x = zeros_like<double>(s);
  for (auto& v : x.views)
    for (Index i = 0; i < v.rows(); ++i)
      for (Index j = 0; j < v.cols(); ++j) v(i, j) = rng.normal();
  return x;
}

}  // namespace

TEST_CASE("synthesis from shared factors") {
  auto s = std::make_shared<CollectiveSchema>(std::vector<Index>{2, 3},
                                              std::vector<ViewDecl>{{0, 1}});
  std::vector<DenseMatrix<double>> mats(2);
  mats[0] = DenseMatrix<double>::Zero(2, 2);
  mats[1] = DenseMatrix<double>::Zero(3, 2);
  auto fs = make_factor_set<double>(s, std::move(mats));
  CHECK(frobenius_norm(synthesize(fs)) == doctest::Approx(0.0));

  fs.factors[0].setOnes();
  fs.factors[1].setOnes();
  auto x = synthesize(fs);
  CHECK(x.views[0](0, 0) == doctest::Approx(2.0));
  CHECK(x.views[0](1, 2) == doctest::Approx(2.0));

  Rng rng(41);
  auto s2 = xmc_test::random_bipartite_schema(rng);
  auto fr = random_factor_set<double>(s2, 3, 17);
  auto y = synthesize(fr);
  for (int v = 0; v < s2->view_count(); ++v) {
    Eigen::JacobiSVD<DenseMatrix<double>> svd(y.views[v]);
    Index r = 0;
    for (Index i = 0; i < svd.singularValues().size(); ++i)
      if (svd.singularValues()(i) > 1e-9 * std::max(1.0, svd.singularValues()(0))) ++r;
    CHECK(r <= 3);
  }
}

TEST_CASE("factor trace sums squared norms") {
  Rng rng(5);
  auto s = xmc_test::random_bipartite_schema(rng);
  auto fs = random_factor_set<double>(s, 2, 7);
  double total = 0.0;
  for (const auto& m : fs.factors) total += m.squaredNorm();
  CHECK(factor_trace(fs) == doctest::Approx(total));
}

TEST_CASE("tangent basis columns are orthonormal and rank aware") {
  auto s = std::make_shared<CollectiveSchema>(std::vector<Index>{4, 5},
                                              std::vector<ViewDecl>{{0, 1}});
  auto fs = random_factor_set<double>(s, 3, 11);
  auto tb = tangent_basis(fs);
  REQUIRE(tb.bases.size() == 2);
  for (const auto& q : tb.bases) {
    if (q.cols() == 0) continue;
    DenseMatrix<double> gram = q.transpose() * q;
    CHECK((gram - DenseMatrix<double>::Identity(q.cols(), q.cols())).norm() <= 1e-10);
  }
  CHECK(tb.bases[0].cols() == 3);

  // A duplicated factor column cannot widen the span.
  auto dup = fs;
  dup.factors[0].col(2) = dup.factors[0].col(1);
  dup.factors[1].col(2) = dup.factors[1].col(1);
  auto tdup = tangent_basis(dup);
  CHECK(tdup.bases[0].cols() == 2);
  CHECK(tdup.bases[1].cols() == 2);
}

TEST_CASE("tangent projector identities") {
  Rng rng(0x7a);
  for (int trial = 0; trial < 10; ++trial) {
    auto s = xmc_test::random_bipartite_schema(rng);
    auto fs = random_factor_set<double>(s, 2, 100 + trial);
    auto tb = tangent_basis(fs);
    auto x = random_collective(s, rng);

    auto pt = project_tangent(x, tb);
    auto pc = project_tangent_complement(x, tb);

    // Complementary split.
    auto sum = (pt + pc);
    CHECK(frobenius_norm((sum - x)) <= 1e-10 * (1.0 + frobenius_norm(x)));
    // Idempotence.
    CHECK(frobenius_norm((project_tangent(pt, tb) - pt)) <=
          1e-10 * (1.0 + frobenius_norm(pt)));
    CHECK(frobenius_norm((project_tangent_complement(pc, tb) - pc)) <=
          1e-10 * (1.0 + frobenius_norm(pc)));
    // Orthogonality and contraction.
    CHECK(std::abs(inner(pt, pc)) <= 1e-10 * (1.0 + squared_norm(x)));
    CHECK(frobenius_norm(pt) <= frobenius_norm(x) + 1e-10);
    CHECK(frobenius_norm(pc) <= frobenius_norm(x) + 1e-10);

    // Points synthesized from the factors live in the tangent space.
    auto m = synthesize(fs);
    CHECK(frobenius_norm(project_tangent_complement(m, tb)) <=
          1e-10 * (1.0 + frobenius_norm(m)));
  }
}

TEST_CASE("tiny tangent example with axis factors") {
  auto s = std::make_shared<CollectiveSchema>(std::vector<Index>{2, 2},
                                              std::vector<ViewDecl>{{0, 1}});
  std::vector<DenseMatrix<double>> mats(2);
  mats[0] = DenseMatrix<double>::Zero(2, 1);
  mats[1] = DenseMatrix<double>::Zero(2, 1);
  mats[0](0, 0) = 1.0;
  mats[1](0, 0) = 1.0;
  auto fs = make_factor_set<double>(s, std::move(mats));
  auto tb = tangent_basis(fs);

  // Cell (1,1) touches neither factor direction: its basis element is fixed
  // by the complement projector.
  const auto e11 = to_dense(basis_element<double>(s, {0, 1, 1}));
  auto pc = project_tangent_complement(e11, tb);
  CHECK(frobenius_norm((pc - e11)) <= 1e-12);
  CHECK(tangent_cell_energy(tb, {0, 1, 1}) == doctest::Approx(0.0));

  // Cell (0,0) lies entirely inside the tangent space.
  const auto e00 = to_dense(basis_element<double>(s, {0, 0, 0}));
  auto pt = project_tangent(e00, tb);
  CHECK(squared_norm(pt) == doctest::Approx(1.0));
  CHECK(tangent_cell_energy(tb, {0, 0, 0}) == doctest::Approx(1.0));
}

TEST_CASE("cell energy closed form matches explicit projection") {
  Rng rng(0xce11);
  for (int trial = 0; trial < 6; ++trial) {
    auto s = xmc_test::random_bipartite_schema(rng, 4);
    auto fs = random_factor_set<double>(s, 2, 300 + trial);
    auto tb = tangent_basis(fs);
    for (int v = 0; v < s->view_count(); ++v)
      for (Index i = 0; i < s->view_rows(v); ++i)
        for (Index j = 0; j < s->view_cols(v); ++j) {
          const auto e = to_dense(basis_element<double>(s, {v, i, j}));
          const double direct = squared_norm(project_tangent(e, tb));
          CHECK(tangent_cell_energy(tb, {v, i, j}) == doctest::Approx(direct).epsilon(1e-10));
        }
  }
}

TEST_CASE("full rank factors absorb every cell") {
  auto s = std::make_shared<CollectiveSchema>(std::vector<Index>{3, 3},
                                              std::vector<ViewDecl>{{0, 1}});
  auto fs = random_factor_set<double>(s, 3, 2024);
  auto tb = tangent_basis(fs);
  for (Index i = 0; i < 3; ++i)
    for (Index j = 0; j < 3; ++j)
      CHECK(tangent_cell_energy(tb, {0, i, j}) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("incoherence is a finite max over cells") {
  Rng rng(0x14c0);
  auto s = xmc_test::random_bipartite_schema(rng);
  auto fs = random_factor_set<double>(s, 2, 55);
  auto tb = tangent_basis(fs);
  const double mu = incoherence(tb);
  CHECK(mu >= 0.0);
  CHECK(std::isfinite(mu));

  // Oracle: brute force over all cells. The denominator uses the widths of
  // the two incident entity matrices.
  const double r = static_cast<double>(std::max<Index>(tb.nominal_rank, 1));
  double best = 0.0;
  for (int v = 0; v < s->view_count(); ++v) {
    const double mr = static_cast<double>(s->entity_width(s->view(v).row_entity));
    const double mc = static_cast<double>(s->entity_width(s->view(v).col_entity));
    for (Index i = 0; i < s->view_rows(v); ++i)
      for (Index j = 0; j < s->view_cols(v); ++j) {
        const double energy = tangent_cell_energy(tb, {v, i, j});
        best = std::max(best, energy / (r / mr + r / mc));
      }
  }
  CHECK(mu == doctest::Approx(best).epsilon(1e-9));
}

TEST_CASE("balancing preserves views and minimizes the trace") {
  Rng rng(0xba1a);
  for (int trial = 0; trial < 8; ++trial) {
    auto s = xmc_test::random_bipartite_schema(rng);
    auto fs = random_factor_set<double>(s, 3, 400 + trial);
    // Skew one side so the input is far from balanced.
    fs.factors[0] *= 5.0;
    auto bal = balance_factor_set(fs);

    // Every view is exactly preserved.
    auto before = synthesize(fs);
    auto after = synthesize(bal);
    CHECK(frobenius_norm((after - before)) <= 1e-9 * (1.0 + frobenius_norm(before)));

    // The trace never grows.
    CHECK(factor_trace(bal) <= factor_trace(fs) + 1e-9);

    const auto rep = validate(*s);
    const int r = fs.rank;
    auto class_grams = [&](const FactorSet<double>& f) {
      std::array<DenseMatrix<double>, 2> g = {DenseMatrix<double>::Zero(r, r),
                                              DenseMatrix<double>::Zero(r, r)};
      for (int k = 0; k < s->entity_count(); ++k)
        g[rep.coloring[k]] += f.factors[k].transpose() * f.factors[k];
      return g;
    };
    const auto in_gram = class_grams(fs);
    const bool full_rank =
        Eigen::FullPivLU<DenseMatrix<double>>(in_gram[0]).rank() == r &&
        Eigen::FullPivLU<DenseMatrix<double>>(in_gram[1]).rank() == r;

    const auto out_gram = class_grams(bal);
    if (full_rank) {
      // The trace strictly shrinks for the skewed input, and both sides of
      // the bipartition end up with the same Gram matrix.
      CHECK(factor_trace(bal) < 0.9 * factor_trace(fs));
      CHECK((out_gram[0] - out_gram[1]).norm() <= 1e-8 * (1.0 + out_gram[0].norm()));
    } else {
      // A rank-deficient side has no invertible gauge, so nothing moves.
      CHECK(factor_trace(bal) == doctest::Approx(factor_trace(fs)));
    }

    // Balancing a balanced set is a no-op up to roundoff.
    auto twice = balance_factor_set(bal);
    double drift = 0.0;
    for (std::size_t k = 0; k < bal.factors.size(); ++k)
      drift += (twice.factors[k] - bal.factors[k]).norm();
    CHECK(drift <= 1e-8 * (1.0 + factor_trace(bal)));
  }
}

TEST_CASE("random factors are deterministic in the seed") {
  Rng rng(2);
  auto s = xmc_test::random_bipartite_schema(rng);
  auto a = random_factor_set<double>(s, 2, 9001);
  auto b = random_factor_set<double>(s, 2, 9001);
  auto c = random_factor_set<double>(s, 2, 9002);
  double diff = 0.0, diff2 = 0.0;
  for (std::size_t k = 0; k < a.factors.size(); ++k) {
    diff += (a.factors[k] - b.factors[k]).norm();
    diff2 += (a.factors[k] - c.factors[k]).norm();
  }
  CHECK(diff == 0.0);
  CHECK(diff2 > 0.0);
}
