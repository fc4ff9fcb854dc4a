#pragma once

#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "xmc/types.hpp"

namespace xmc {

// One rectangular view: rows indexed by one entity type, columns by another.
struct ViewDecl {
  int row_entity = -1;
  int col_entity = -1;
};

// Cell address inside a specific view. All indices are 0-based in memory;
// file formats use 1-based ids.
struct BasisIndex {
  int view = -1;
  Index i = 0;
  Index j = 0;
};

inline bool operator==(const BasisIndex& x, const BasisIndex& y) {
  return x.view == y.view && x.i == y.i && x.j == y.j;
}

// Position of a view cell inside the stacked symmetric layout.
struct GlobalPair {
  Index a = 0;
  Index b = 0;
};

// Column of an entity's concatenated matrix mapped back to its view.
// `index` is a column of the view when not transposed, a row otherwise.
struct EntityColumn {
  int view = -1;
  Index index = 0;
  bool transposed = false;
};

enum class SchemaIssueCode { SelfView, DuplicateView, Disconnected, OddCycle, EmptyEntity };

struct SchemaIssue {
  SchemaIssueCode code;
  std::string message;
};

struct ValidationReport {
  bool ok = false;
  std::vector<int> coloring;  // entity -> {0,1}; empty when not two-colorable
  std::vector<SchemaIssue> issues;
};

// Immutable description of the entity types and views. Derived layout
// (offsets, concatenated widths, per-entity block tables) is computed once at
// construction; validity beyond basic shape checks is reported by validate().
class CollectiveSchema {
 public:
  struct EntityBlock {
    int view = -1;
    Index width = 0;
    Index col_offset = 0;
    bool transposed = false;
  };

  CollectiveSchema(std::vector<Index> sizes, std::vector<ViewDecl> views,
                   std::vector<std::string> names = {})
      : sizes_(std::move(sizes)), views_(std::move(views)), names_(std::move(names)) {
    if (sizes_.empty()) throw std::invalid_argument("schema: needs at least one entity type");
    if (!names_.empty() && names_.size() != sizes_.size())
      throw std::invalid_argument("schema: name count does not match entity count");
    const int K = static_cast<int>(sizes_.size());
    for (Index n : sizes_)
      if (n < 0) throw std::invalid_argument("schema: negative entity size");
    for (const ViewDecl& v : views_)
      if (v.row_entity < 0 || v.row_entity >= K || v.col_entity < 0 || v.col_entity >= K)
        throw std::invalid_argument("schema: view references an entity out of range");

    offsets_.resize(sizes_.size());
    total_ = 0;
    for (std::size_t k = 0; k < sizes_.size(); ++k) {
      offsets_[k] = total_;
      total_ += sizes_[k];
    }

    blocks_.resize(sizes_.size());
    widths_.assign(sizes_.size(), 0);
    for (int v = 0; v < static_cast<int>(views_.size()); ++v) {
      const ViewDecl& d = views_[v];
      if (d.row_entity != d.col_entity) {
        blocks_[d.row_entity].push_back({v, sizes_[d.col_entity], widths_[d.row_entity], false});
        widths_[d.row_entity] += sizes_[d.col_entity];
        blocks_[d.col_entity].push_back({v, sizes_[d.row_entity], widths_[d.col_entity], true});
        widths_[d.col_entity] += sizes_[d.row_entity];
      } else {
        // Self view is invalid; still give it one block so widths stay defined.
        blocks_[d.row_entity].push_back({v, sizes_[d.col_entity], widths_[d.row_entity], false});
        widths_[d.row_entity] += sizes_[d.col_entity];
      }
    }
  }

  int entity_count() const { return static_cast<int>(sizes_.size()); }
  int view_count() const { return static_cast<int>(views_.size()); }
  Index entity_size(int k) const { return sizes_[check_entity(k)]; }
  Index entity_offset(int k) const { return offsets_[check_entity(k)]; }
  Index entity_width(int k) const { return widths_[check_entity(k)]; }
  Index total_size() const { return total_; }
  const std::vector<std::string>& entity_names() const { return names_; }
  const std::vector<Index>& entity_sizes() const { return sizes_; }
  const std::vector<ViewDecl>& views() const { return views_; }

  const ViewDecl& view(int v) const { return views_[check_view(v)]; }
  Index view_rows(int v) const { return sizes_[view(v).row_entity]; }
  Index view_cols(int v) const { return sizes_[view(v).col_entity]; }
  Index view_cells(int v) const { return view_rows(v) * view_cols(v); }

  Index cell_count() const {
    Index c = 0;
    for (int v = 0; v < view_count(); ++v) c += view_cells(v);
    return c;
  }

  bool contains(const BasisIndex& idx) const {
    return idx.view >= 0 && idx.view < view_count() && idx.i >= 0 && idx.i < view_rows(idx.view) &&
           idx.j >= 0 && idx.j < view_cols(idx.view);
  }

  GlobalPair global_index(const BasisIndex& idx) const {
    require_cell(idx);
    const ViewDecl& d = views_[idx.view];
    return {offsets_[d.row_entity] + idx.i, offsets_[d.col_entity] + idx.j};
  }

  const std::vector<EntityBlock>& entity_blocks(int k) const { return blocks_[check_entity(k)]; }

  EntityColumn entity_column(int k, Index col) const {
    check_entity(k);
    if (col < 0 || col >= widths_[k])
      throw std::out_of_range("schema: entity column out of range");
    // V is small; linear scan over the block table.
    for (const EntityBlock& b : blocks_[k])
      if (col < b.col_offset + b.width) return {b.view, col - b.col_offset, b.transposed};
    throw std::logic_error("schema: block table inconsistent");
  }

  Index entity_column_inverse(int k, const EntityColumn& ec) const {
    check_entity(k);
    for (const EntityBlock& b : blocks_[k]) {
      if (b.view != ec.view || b.transposed != ec.transposed) continue;
      if (ec.index < 0 || ec.index >= b.width)
        throw std::out_of_range("schema: entity column index out of range");
      return b.col_offset + ec.index;
    }
    throw std::invalid_argument("schema: view does not contribute such a block to this entity");
  }

  // Cell (row, col) of the concatenated matrix of entity k as a view cell.
  BasisIndex entity_cell(int k, Index row, Index col) const {
    if (row < 0 || row >= entity_size(k))
      throw std::out_of_range("schema: entity row out of range");
    const EntityColumn ec = entity_column(k, col);
    if (!ec.transposed) return {ec.view, row, ec.index};
    return {ec.view, ec.index, row};
  }

 private:
  int check_entity(int k) const {
    if (k < 0 || k >= entity_count()) throw std::out_of_range("schema: entity id out of range");
    return k;
  }
  int check_view(int v) const {
    if (v < 0 || v >= view_count()) throw std::out_of_range("schema: view id out of range");
    return v;
  }
  void require_cell(const BasisIndex& idx) const {
    if (!contains(idx)) throw std::out_of_range("schema: cell index out of range");
  }

  std::vector<Index> sizes_;
  std::vector<ViewDecl> views_;
  std::vector<std::string> names_;
  std::vector<Index> offsets_;
  std::vector<Index> widths_;
  std::vector<std::vector<EntityBlock>> blocks_;
  Index total_ = 0;
};

using SchemaPtr = std::shared_ptr<const CollectiveSchema>;

inline std::string entity_label(const CollectiveSchema& s, int k) {
  if (!s.entity_names().empty()) return s.entity_names()[k];
  return "entity" + std::to_string(k + 1);
}

inline ValidationReport validate(const CollectiveSchema& s) {
  ValidationReport rep;
  const int K = s.entity_count();

  for (int k = 0; k < K; ++k)
    if (s.entity_size(k) == 0)
      rep.issues.push_back({SchemaIssueCode::EmptyEntity,
                            "entity " + entity_label(s, k) + " has size 0"});

  std::set<std::pair<int, int>> seen;
  for (int v = 0; v < s.view_count(); ++v) {
    const ViewDecl& d = s.view(v);
    if (d.row_entity == d.col_entity) {
      rep.issues.push_back({SchemaIssueCode::SelfView,
                            "view " + std::to_string(v + 1) + " relates an entity to itself"});
      continue;
    }
    auto key = std::minmax(d.row_entity, d.col_entity);
    if (!seen.insert(key).second)
      rep.issues.push_back({SchemaIssueCode::DuplicateView,
                            "views share the unordered pair (" + entity_label(s, key.first) +
                                ", " + entity_label(s, key.second) + ")"});
  }

  // Connectivity and two-colorability over the entity graph, per component.
  std::vector<std::vector<int>> adj(K);
  for (int v = 0; v < s.view_count(); ++v) {
    const ViewDecl& d = s.view(v);
    if (d.row_entity == d.col_entity) continue;
    adj[d.row_entity].push_back(d.col_entity);
    adj[d.col_entity].push_back(d.row_entity);
  }
  std::vector<int> color(K, -1);
  bool two_colorable = true;
  int components = 0;
  for (int start = 0; start < K; ++start) {
    if (color[start] != -1) continue;
    ++components;
    color[start] = 0;
    std::vector<int> queue = {start};
    while (!queue.empty()) {
      const int u = queue.back();
      queue.pop_back();
      for (int w : adj[u]) {
        if (color[w] == -1) {
          color[w] = 1 - color[u];
          queue.push_back(w);
        } else if (color[w] == color[u]) {
          two_colorable = false;
        }
      }
    }
  }
  if (components > 1)
    rep.issues.push_back({SchemaIssueCode::Disconnected,
                          "entity graph has " + std::to_string(components) + " components"});
  if (!two_colorable)
    rep.issues.push_back({SchemaIssueCode::OddCycle, "entity graph contains an odd cycle"});
  else
    rep.coloring = color;

  rep.ok = rep.issues.empty();
  return rep;
}

// Precondition gate used by every path that needs the symmetric layout to be
// well-posed (norms, solver, diagnostics).
inline void require_bipartite(const CollectiveSchema& s) {
  const ValidationReport rep = validate(s);
  if (rep.ok) return;
  std::string msg = "schema invalid:";
  for (const SchemaIssue& issue : rep.issues) msg += " [" + issue.message + "]";
  throw std::invalid_argument(msg);
}

}  // namespace xmc
