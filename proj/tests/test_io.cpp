#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdlib>
#include <filesystem>

#include "doctest.h"
#include "xmc/harness.hpp"
#include "xmc/io.hpp"

using namespace xmc;

TEST_CASE("schema json round trip") {
  auto s = four_entity_chain(3);
  const auto j = io::schema_to_json(*s);
  auto back = io::parse_schema_json(j);
  CHECK(schema_equal(*s, *back));
  CHECK(back->entity_names()[0] == "e1");

  // Views may name entities or use their one-based ids.
  const char* by_id = R"({
    "entities": [{"size": 2}, {"size": 3}],
    "views": [{"row": 1, "col": 2}]
  })";
  auto parsed = io::parse_schema_json(nlohmann::json::parse(by_id));
  CHECK(parsed->entity_count() == 2);
  CHECK(parsed->view(0).row_entity == 0);
  CHECK(parsed->view(0).col_entity == 1);
  CHECK(parsed->entity_names()[1] == "entity2");

  const char* by_name = R"({
    "entities": [{"name": "genes", "size": 2}, {"name": "drugs", "size": 3}],
    "views": [{"row": "drugs", "col": "genes"}]
  })";
  auto named = io::parse_schema_json(nlohmann::json::parse(by_name));
  CHECK(named->view(0).row_entity == 1);
  CHECK(named->view(0).col_entity == 0);

  const char* bad_ref = R"({
    "entities": [{"size": 2}, {"size": 3}],
    "views": [{"row": 1, "col": 3}]
  })";
  CHECK_THROWS((void)io::parse_schema_json(nlohmann::json::parse(bad_ref)));

  const char* dup_names = R"({
    "entities": [{"name": "a", "size": 2}, {"name": "a", "size": 3}],
    "views": [{"row": 1, "col": 2}]
  })";
  CHECK_THROWS((void)io::parse_schema_json(nlohmann::json::parse(dup_names)));

  const char* bad_view_id = R"({
    "entities": [{"size": 2}, {"size": 3}],
    "views": [{"id": 2, "row": 1, "col": 2}]
  })";
  CHECK_THROWS((void)io::parse_schema_json(nlohmann::json::parse(bad_view_id)));
}

TEST_CASE("matrix csv round trip") {
  auto s = four_entity_chain(3);
  auto inst = generate_synthetic<double>(s, 2, 77);
  const std::string csv = io::matrix_to_csv(inst.truth);
  CHECK(csv.rfind("view,row,col,value\n", 0) == 0);
  auto back = io::matrix_from_csv(s, csv);
  CHECK(frobenius_norm((back - inst.truth)) == 0.0);

  // Unlisted cells default to zero.
  const std::string sparse = "view,row,col,value\n1,1,1,2.5\n";
  auto sp = io::matrix_from_csv(s, sparse);
  CHECK(sp.views[0](0, 0) == 2.5);
  CHECK(sp.views[0](0, 1) == 0.0);

  const std::string out_of_range = "view,row,col,value\n1,4,1,2.5\n";
  CHECK_THROWS((void)io::matrix_from_csv(s, out_of_range));
  const std::string bad_header = "vue,row,col,value\n1,1,1,2.5\n";
  CHECK_THROWS((void)io::matrix_from_csv(s, bad_header));
}

TEST_CASE("factor csv round trip") {
  auto s = four_entity_chain(2);
  auto fs = random_factor_set<double>(s, 3, 11);
  const std::string csv = io::factors_to_csv(fs);
  CHECK(csv.rfind("entity,row,dim,value\n", 0) == 0);
  auto back = io::factors_from_csv(s, csv);
  CHECK(back.rank == 3);
  REQUIRE(back.factors.size() == fs.factors.size());
  for (std::size_t k = 0; k < fs.factors.size(); ++k)
    CHECK((back.factors[k] - fs.factors[k]).norm() == 0.0);
}

TEST_CASE("observation csv round trip keeps duplicates") {
  auto s = four_entity_chain(2);
  ObservationSet<double> obs;
  obs.schema = s;
  obs.indices = {{0, 0, 0}, {0, 0, 0}, {2, 1, 1}};
  obs.values = {1.25, -0.5, 3.0};
  const std::string csv = io::observations_to_csv(obs);
  auto back = io::observations_from_csv(s, csv);
  REQUIRE(back.indices.size() == 3);
  CHECK(back.indices[0].view == 0);
  CHECK(back.indices[1].view == 0);
  CHECK(back.indices[2].view == 2);
  CHECK(back.indices[2].i == 1);
  CHECK(back.values[0] == 1.25);
  CHECK(back.values[1] == -0.5);
  CHECK(back.values[2] == 3.0);

  ObservationSet<double> bare;
  bare.schema = s;
  bare.indices = {{0, 0, 0}};
  CHECK_THROWS((void)io::observations_to_csv(bare));
}

TEST_CASE("plan json round trip") {
  auto s = four_entity_chain(2);
  auto plan = make_plan<double>(s, 12, QuotaPreset::Proportional, 9);
  const auto j = io::plan_to_json(plan);
  auto back = io::plan_from_json<double>(s, j);
  CHECK(back.total == 12);
  CHECK(back.seed == 9);
  REQUIRE(back.quotas.size() == 4);
  for (std::size_t k = 0; k < 4; ++k) CHECK(back.quotas[k] == plan.quotas[k]);

  auto bad = j;
  bad["quotas"] = {1.0, 1.0};
  CHECK_THROWS((void)io::plan_from_json<double>(s, bad));
}

TEST_CASE("solver config json") {
  const char* text = R"({"eta": "auto", "T": 250, "epsilon": 1e-5, "seed": 3,
                         "baseline": true, "gamma": 0.5, "svt_iters": 99})";
  auto c = io::solver_config_from_json<double>(nlohmann::json::parse(text));
  CHECK_FALSE(c.eta.has_value());
  CHECK(c.max_iters == 250);
  CHECK(c.target_gap == 1e-5);
  CHECK(c.seed == 3);
  CHECK(c.baseline);
  CHECK(c.gamma == 0.5);
  CHECK(c.svt_iters == 99);

  auto c2 = io::solver_config_from_json<double>(nlohmann::json::parse(R"({"eta": 2.5})"));
  REQUIRE(c2.eta.has_value());
  CHECK(*c2.eta == 2.5);

  CHECK_THROWS((void)io::solver_config_from_json<double>(nlohmann::json::parse(R"({"eta": "big"})")));

  // Round trip through the serializer.
  auto j = io::solver_config_to_json(c);
  auto c3 = io::solver_config_from_json<double>(j);
  CHECK_FALSE(c3.eta.has_value());
  CHECK(c3.max_iters == 250);
  CHECK(c3.baseline);
}

TEST_CASE("report csv layout") {
  SolverReport<double> rep;
  rep.trace.push_back({1, 4.0, 2.0, 0.5});
  rep.trace.push_back({2, 1.0, 0.5, 0.75});
  const std::string csv = io::report_to_csv(rep);
  CHECK(csv.rfind("iter,objective,gap,elapsed_ms\n", 0) == 0);
  CHECK(csv.find("\n1,4,2,0.5\n") != std::string::npos);
}

TEST_CASE("number formatting survives the round trip") {
  const double v = 0.1234567890123456789;
  const std::string s = io::format_g17(v);
  CHECK(io::detail::parse_double(s, "test") == v);
}

TEST_CASE("seed override from the environment") {
  unsetenv("XMC_SEED");
  CHECK_FALSE(io::env_seed_override().has_value());
  setenv("XMC_SEED", "712", 1);
  auto v = io::env_seed_override();
  REQUIRE(v.has_value());
  CHECK(*v == 712);
  setenv("XMC_SEED", "bogus", 1);
  CHECK_THROWS((void)io::env_seed_override());
  unsetenv("XMC_SEED");
}

TEST_CASE("file round trips") {
  const std::string dir = "io_test_tmp";
  std::filesystem::create_directories(dir);
  auto s = four_entity_chain(2);
  io::save_schema(*s, dir + "/schema.json");
  auto back = io::load_schema(dir + "/schema.json");
  CHECK(schema_equal(*s, *back));

  auto inst = generate_synthetic<double>(s, 2, 3);
  io::save_matrix(inst.truth, dir + "/m.csv");
  auto m = io::load_matrix(s, dir + "/m.csv");
  CHECK(frobenius_norm((m - inst.truth)) == 0.0);

  auto plan = make_plan<double>(s, 10, QuotaPreset::Balanced, 2);
  io::save_plan(plan, dir + "/plan.json");
  auto p = io::load_plan<double>(s, dir + "/plan.json");
  CHECK(p.total == 10);

  CHECK_THROWS((void)io::load_schema(dir + "/missing.json"));
  std::filesystem::remove_all(dir);
}
