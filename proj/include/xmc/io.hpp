#pragma once

#include <cerrno>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "xmc/collective.hpp"
#include "xmc/observation.hpp"
#include "xmc/factors.hpp"
#include "xmc/schema.hpp"
#include "xmc/solver.hpp"

// File formats. All on-disk indices are 1-based; in-memory indices are
// 0-based, and the conversion happens only here.
namespace xmc::io {

inline std::string format_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  for (std::string& s : out) {
    std::size_t a = s.find_first_not_of(" \t");
    std::size_t b = s.find_last_not_of(" \t");
    s = a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
  }
  return out;
}

inline double parse_double(const std::string& s, const std::string& ctx) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0' || errno == ERANGE)
    throw std::runtime_error(ctx + ": bad number '" + s + "'");
  return v;
}

inline long long parse_int(const std::string& s, const std::string& ctx) {
  errno = 0;
  char* end = nullptr;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0' || errno == ERANGE)
    throw std::runtime_error(ctx + ": bad integer '" + s + "'");
  return v;
}

// Yields trimmed body rows of a CSV after checking the header.
inline std::vector<std::vector<std::string>> read_csv(const std::string& text,
                                                      const std::string& expected_header,
                                                      const std::string& ctx) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(ctx + ": empty file");
  while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
  {
    std::string squashed;
    for (char c : line)
      if (c != ' ' && c != '\t') squashed += c;
    if (squashed != expected_header)
      throw std::runtime_error(ctx + ": expected header '" + expected_header + "', got '" + line + "'");
  }
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    bool blank = true;
    for (char c : line)
      if (c != ' ' && c != '\t' && c != '\r') blank = false;
    if (blank) continue;
    rows.push_back(split_csv_line(line));
  }
  return rows;
}

}  // namespace detail

// ---- schema ----------------------------------------------------------

inline nlohmann::json schema_to_json(const CollectiveSchema& schema) {
  nlohmann::json j;
  j["entities"] = nlohmann::json::array();
  for (int k = 0; k < schema.entity_count(); ++k)
    j["entities"].push_back({{"name", entity_label(schema, k)}, {"size", schema.entity_size(k)}});
  j["views"] = nlohmann::json::array();
  for (int v = 0; v < schema.view_count(); ++v)
    j["views"].push_back({{"id", v + 1},
                          {"row", schema.view(v).row_entity + 1},
                          {"col", schema.view(v).col_entity + 1}});
  return j;
}

inline SchemaPtr parse_schema_json(const nlohmann::json& j) {
  if (!j.contains("entities") || !j["entities"].is_array())
    throw std::runtime_error("schema: missing 'entities' array");
  if (!j.contains("views") || !j["views"].is_array())
    throw std::runtime_error("schema: missing 'views' array");
  std::vector<Index> sizes;
  std::vector<std::string> names;
  std::unordered_map<std::string, int> by_name;
  for (const auto& e : j["entities"]) {
    const std::string name = e.value("name", "entity" + std::to_string(sizes.size() + 1));
    if (!e.contains("size")) throw std::runtime_error("schema: entity '" + name + "' has no size");
    if (by_name.count(name)) throw std::runtime_error("schema: duplicate entity name '" + name + "'");
    by_name[name] = static_cast<int>(sizes.size());
    sizes.push_back(e["size"].get<Index>());
    names.push_back(name);
  }
  auto resolve = [&](const nlohmann::json& field, const char* which) -> int {
    if (field.is_string()) {
      auto it = by_name.find(field.get<std::string>());
      if (it == by_name.end())
        throw std::runtime_error(std::string("schema: unknown entity '") + field.get<std::string>() + "'");
      return it->second;
    }
    const long long id = field.get<long long>();
    if (id < 1 || id > static_cast<long long>(sizes.size()))
      throw std::runtime_error(std::string("schema: ") + which + " id out of range");
    return static_cast<int>(id - 1);
  };
  std::vector<ViewDecl> views;
  for (const auto& v : j["views"]) {
    if (v.contains("id")) {
      const long long id = v["id"].get<long long>();
      if (id != static_cast<long long>(views.size()) + 1)
        throw std::runtime_error("schema: view ids must run 1..V in order");
    }
    views.push_back({resolve(v.at("row"), "row"), resolve(v.at("col"), "col")});
  }
  return std::make_shared<CollectiveSchema>(sizes, views, names);
}

inline SchemaPtr load_schema(const std::string& path) {
  try {
    return parse_schema_json(nlohmann::json::parse(read_text_file(path)));
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

inline void save_schema(const CollectiveSchema& schema, const std::string& path) {
  write_text_file(path, schema_to_json(schema).dump(2) + "\n");
}

// ---- collective matrix CSV -------------------------------------------

template <class Scalar = double>
std::string matrix_to_csv(const CollectiveMatrix<Scalar>& x) {
  std::string out = "view,row,col,value\n";
  for (std::size_t v = 0; v < x.views.size(); ++v)
    for (Index i = 0; i < x.views[v].rows(); ++i)
      for (Index j = 0; j < x.views[v].cols(); ++j)
        out += std::to_string(v + 1) + "," + std::to_string(i + 1) + "," + std::to_string(j + 1) +
               "," + format_g17(static_cast<double>(x.views[v](i, j))) + "\n";
  return out;
}

// Readers accept sparse subsets; anything not listed stays zero.
template <class Scalar = double>
CollectiveMatrix<Scalar> matrix_from_csv(SchemaPtr schema, const std::string& text,
                                         const std::string& ctx = "matrix") {
  CollectiveMatrix<Scalar> x = zeros_like<Scalar>(schema);
  for (const auto& row : detail::read_csv(text, "view,row,col,value", ctx)) {
    if (row.size() != 4) throw std::runtime_error(ctx + ": expected 4 fields per row");
    const BasisIndex idx{static_cast<int>(detail::parse_int(row[0], ctx)) - 1,
                         static_cast<Index>(detail::parse_int(row[1], ctx)) - 1,
                         static_cast<Index>(detail::parse_int(row[2], ctx)) - 1};
    if (!schema->contains(idx)) throw std::runtime_error(ctx + ": cell out of range");
    x.views[idx.view](idx.i, idx.j) = static_cast<Scalar>(detail::parse_double(row[3], ctx));
  }
  return x;
}

template <class Scalar = double>
void save_matrix(const CollectiveMatrix<Scalar>& x, const std::string& path) {
  write_text_file(path, matrix_to_csv(x));
}

template <class Scalar = double>
CollectiveMatrix<Scalar> load_matrix(SchemaPtr schema, const std::string& path) {
  return matrix_from_csv<Scalar>(schema, read_text_file(path), path);
}

// ---- factor set CSV ---------------------------------------------------

template <class Scalar = double>
std::string factors_to_csv(const FactorSet<Scalar>& f) {
  std::string out = "entity,row,dim,value\n";
  for (std::size_t k = 0; k < f.factors.size(); ++k)
    for (Index i = 0; i < f.factors[k].rows(); ++i)
      for (Index r = 0; r < f.factors[k].cols(); ++r)
        out += std::to_string(k + 1) + "," + std::to_string(i + 1) + "," + std::to_string(r + 1) +
               "," + format_g17(static_cast<double>(f.factors[k](i, r))) + "\n";
  return out;
}

template <class Scalar = double>
FactorSet<Scalar> factors_from_csv(SchemaPtr schema, const std::string& text,
                                   const std::string& ctx = "factors") {
  const auto rows = detail::read_csv(text, "entity,row,dim,value", ctx);
  Index rank = 0;
  for (const auto& row : rows) {
    if (row.size() != 4) throw std::runtime_error(ctx + ": expected 4 fields per row");
    rank = std::max<Index>(rank, detail::parse_int(row[2], ctx));
  }
  if (rank < 1) throw std::runtime_error(ctx + ": no factor entries");
  std::vector<DenseMatrix<Scalar>> mats;
  for (int k = 0; k < schema->entity_count(); ++k)
    mats.push_back(DenseMatrix<Scalar>::Zero(schema->entity_size(k), rank));
  for (const auto& row : rows) {
    const long long k = detail::parse_int(row[0], ctx) - 1;
    const long long i = detail::parse_int(row[1], ctx) - 1;
    const long long r = detail::parse_int(row[2], ctx) - 1;
    if (k < 0 || k >= schema->entity_count() || i < 0 || i >= schema->entity_size(static_cast<int>(k)))
      throw std::runtime_error(ctx + ": factor entry out of range");
    mats[static_cast<std::size_t>(k)](i, r) = static_cast<Scalar>(detail::parse_double(row[3], ctx));
  }
  return make_factor_set<Scalar>(schema, std::move(mats));
}

template <class Scalar = double>
void save_factors(const FactorSet<Scalar>& f, const std::string& path) {
  write_text_file(path, factors_to_csv(f));
}

template <class Scalar = double>
FactorSet<Scalar> load_factors(SchemaPtr schema, const std::string& path) {
  return factors_from_csv<Scalar>(schema, read_text_file(path), path);
}

// ---- observations CSV --------------------------------------------------

// One line per draw; repeated cells stay repeated so multiplicities
// round-trip.
template <class Scalar = double>
std::string observations_to_csv(const ObservationSet<Scalar>& obs) {
  if (obs.values.size() != obs.indices.size())
    throw std::invalid_argument("observations_to_csv: values missing");
  std::string out = "view,row,col,value\n";
  for (std::size_t s = 0; s < obs.indices.size(); ++s)
    out += std::to_string(obs.indices[s].view + 1) + "," + std::to_string(obs.indices[s].i + 1) +
           "," + std::to_string(obs.indices[s].j + 1) + "," +
           format_g17(static_cast<double>(obs.values[s])) + "\n";
  return out;
}

template <class Scalar = double>
ObservationSet<Scalar> observations_from_csv(SchemaPtr schema, const std::string& text,
                                             const std::string& ctx = "observations") {
  ObservationSet<Scalar> obs;
  obs.schema = schema;
  for (const auto& row : detail::read_csv(text, "view,row,col,value", ctx)) {
    if (row.size() != 4) throw std::runtime_error(ctx + ": expected 4 fields per row");
    const BasisIndex idx{static_cast<int>(detail::parse_int(row[0], ctx)) - 1,
                         static_cast<Index>(detail::parse_int(row[1], ctx)) - 1,
                         static_cast<Index>(detail::parse_int(row[2], ctx)) - 1};
    if (!schema->contains(idx)) throw std::runtime_error(ctx + ": cell out of range");
    obs.indices.push_back(idx);
    obs.values.push_back(static_cast<Scalar>(detail::parse_double(row[3], ctx)));
  }
  return obs;
}

template <class Scalar = double>
void save_observations(const ObservationSet<Scalar>& obs, const std::string& path) {
  write_text_file(path, observations_to_csv(obs));
}

template <class Scalar = double>
ObservationSet<Scalar> load_observations(SchemaPtr schema, const std::string& path) {
  return observations_from_csv<Scalar>(schema, read_text_file(path), path);
}

// ---- sampling plan JSON ------------------------------------------------

template <class Scalar = double>
nlohmann::json plan_to_json(const SamplingPlan<Scalar>& plan) {
  nlohmann::json j;
  j["quotas"] = plan.quotas;
  j["total"] = plan.total;
  j["seed"] = plan.seed;
  return j;
}

template <class Scalar = double>
SamplingPlan<Scalar> plan_from_json(SchemaPtr schema, const nlohmann::json& j) {
  SamplingPlan<Scalar> plan;
  plan.schema = schema;
  if (!j.contains("quotas") || !j["quotas"].is_array())
    throw std::runtime_error("plan: missing 'quotas' array");
  for (const auto& q : j["quotas"]) plan.quotas.push_back(q.get<Scalar>());
  plan.total = j.at("total").get<Index>();
  plan.seed = j.value("seed", std::uint64_t{0});
  validate_plan(plan);
  return plan;
}

template <class Scalar = double>
void save_plan(const SamplingPlan<Scalar>& plan, const std::string& path) {
  write_text_file(path, plan_to_json(plan).dump(2) + "\n");
}

template <class Scalar = double>
SamplingPlan<Scalar> load_plan(SchemaPtr schema, const std::string& path) {
  try {
    return plan_from_json<Scalar>(schema, nlohmann::json::parse(read_text_file(path)));
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

// ---- solver config JSON -------------------------------------------------

// Keys: eta (number or "auto"), T, epsilon, seed, baseline, gamma,
// svt_iters, objective_floor. Missing keys keep defaults.
template <class Scalar = double>
SolverConfig<Scalar> solver_config_from_json(const nlohmann::json& j) {
  SolverConfig<Scalar> c;
  if (j.contains("eta")) {
    if (j["eta"].is_string()) {
      if (j["eta"].get<std::string>() != "auto")
        throw std::runtime_error("solver config: eta must be a number or \"auto\"");
    } else {
      c.eta = j["eta"].get<Scalar>();
    }
  }
  if (j.contains("T")) c.max_iters = j["T"].get<int>();
  if (j.contains("max_iters")) c.max_iters = j["max_iters"].get<int>();
  if (j.contains("epsilon")) c.target_gap = j["epsilon"].get<Scalar>();
  if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("baseline")) c.baseline = j["baseline"].get<bool>();
  if (j.contains("gamma")) c.gamma = j["gamma"].get<Scalar>();
  if (j.contains("svt_iters")) c.svt_iters = j["svt_iters"].get<int>();
  if (j.contains("objective_floor")) c.objective_floor = j["objective_floor"].get<Scalar>();
  return c;
}

template <class Scalar = double>
nlohmann::json solver_config_to_json(const SolverConfig<Scalar>& c) {
  nlohmann::json j;
  if (c.eta)
    j["eta"] = *c.eta;
  else
    j["eta"] = "auto";
  j["T"] = c.max_iters;
  j["epsilon"] = c.target_gap;
  j["seed"] = c.seed;
  j["baseline"] = c.baseline;
  j["gamma"] = c.gamma;
  j["svt_iters"] = c.svt_iters;
  j["objective_floor"] = c.objective_floor;
  return j;
}

template <class Scalar = double>
SolverConfig<Scalar> load_solver_config(const std::string& path) {
  try {
    return solver_config_from_json<Scalar>(nlohmann::json::parse(read_text_file(path)));
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

// ---- solver report CSV ---------------------------------------------------

template <class Scalar = double>
std::string report_to_csv(const SolverReport<Scalar>& rep) {
  std::string out = "iter,objective,gap,elapsed_ms\n";
  for (const auto& row : rep.trace)
    out += std::to_string(row.iter) + "," + format_g17(static_cast<double>(row.objective)) + "," +
           format_g17(static_cast<double>(row.gap)) + "," + format_g17(row.elapsed_ms) + "\n";
  return out;
}

// ---- environment -----------------------------------------------------------

// CI determinism hook: when XMC_SEED is set it overrides config seeds.
inline std::optional<std::uint64_t> env_seed_override() {
  const char* s = std::getenv("XMC_SEED");
  if (!s || !*s) return std::nullopt;
  errno = 0;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s, &end, 10);
  if (end == s || *end != '\0' || errno == ERANGE)
    throw std::runtime_error("XMC_SEED: not a valid unsigned integer");
  return static_cast<std::uint64_t>(v);
}

}  // namespace xmc::io
