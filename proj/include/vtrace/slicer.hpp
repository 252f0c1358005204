#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "vtrace/patch.hpp"
#include "vtrace/syntax_tree.hpp"

namespace vtrace {

enum class StatementKind { Assignment, Conditional, Call, Return, LoopHeader, Other };

std::string_view to_string(StatementKind kind);

// One node of the dependence graph: a statement keyed by its first line.
// Control statements only carry their header (condition, loop control).
struct PdgStatement {
  int line = 0;
  int end_line = 0;  // last line of the whole statement, bodies included
  StatementKind kind = StatementKind::Other;
  std::set<std::string> defs;       // strong definitions (kill earlier ones)
  std::set<std::string> weak_defs;  // writes through p->f, *p, p[i], &x
  std::set<std::string> uses;
  bool is_guard = false;  // if without else whose branch always jumps away
  int structural_parent = 0;  // enclosing control statement line, 0 at top
  int guard_parent = 0;       // nearest earlier guard in the same block
  std::vector<std::pair<int, int>> block;  // (container line, branch) path

  bool defines(const std::string& v) const { return defs.count(v) || weak_defs.count(v); }
  int control_parent() const { return guard_parent ? guard_parent : structural_parent; }
};

struct DataEdge {
  int from = 0;
  int to = 0;
  std::string variable;

  bool operator==(const DataEdge&) const = default;
  bool operator<(const DataEdge& o) const {
    return std::tie(from, to, variable) < std::tie(o.from, o.to, o.variable);
  }
};

enum class ControlKind { Structural, Guard };

struct ControlEdge {
  int from = 0;
  int to = 0;
  ControlKind kind = ControlKind::Structural;
};

class DependenceGraph {
 public:
  std::map<int, PdgStatement> statements;
  std::vector<DataEdge> data_edges;
  std::vector<ControlEdge> control_edges;  // one incoming edge per node at most

  bool has(int line) const { return statements.count(line) > 0; }

  // Definitions of `var` (strong or weak) that reach the statement at `line`.
  std::set<int> reaching_defs(const std::string& var, int line) const;

  // Statement (start line) innermost-containing a source line, or 0.
  int statement_at(int source_line) const;

  // Every statement nested inside the control statement at `line`.
  std::set<int> structural_descendants(int line) const;

  std::vector<int> control_ancestors(int line) const;
};

struct SliceCriterion {
  std::set<int> seed_lines;
  std::set<std::string> seed_variables;
};

DependenceGraph build_pdg(const cfront::SyntaxTree& tree);

std::set<int> backward_slice(const DependenceGraph& g, const SliceCriterion& c);

struct ForwardSlice {
  std::set<int> data;
  std::set<int> control;

  std::set<int> all() const;
};

ForwardSlice forward_slice_detail(const DependenceGraph& g, const SliceCriterion& c);
std::set<int> forward_slice(const DependenceGraph& g, const SliceCriterion& c);

// ---- dangerous flow over the merged pre/post view ----------------------

enum class RowKind { Context, Deleted, Added };

std::string_view to_string(RowKind kind);

// One line of the merged function view: pre-image lines in order with
// added lines interleaved after the deletions they replace. Row numbers
// start at the pre-image function's first file line.
struct FlowRow {
  int row = 0;
  RowKind kind = RowKind::Context;
  std::optional<int> old_line;
  std::optional<int> new_line;
  std::string text;
};

std::vector<FlowRow> merge_rows(const PatchedFunction& fn);

enum class FlowOrigin { Seed, Backward, ForwardData, ForwardControl };

std::string_view to_string(FlowOrigin origin);

struct FlowStatement {
  int row = 0;
  RowKind kind = RowKind::Context;
  std::string text;
  FlowOrigin origin = FlowOrigin::Seed;
};

enum class SliceDirection { Both, BackwardOnly, ForwardOnly };

struct DangerousFlow {
  std::string function_name;
  std::string file_path;
  std::string commit;
  bool sliced_post_image = false;
  std::vector<FlowRow> rows;              // the whole merged function
  std::vector<FlowStatement> statements;  // ordered by row

  std::set<int> row_numbers() const;
  std::set<int> rows_with(FlowOrigin origin) const;
  const FlowRow* row(int number) const;
};

// Throws EmptyFlow when nothing but added lines would remain.
DangerousFlow extract_dangerous_flow(const PatchedFunction& fn, SliceDirection direction = SliceDirection::Both);

// `direction_both = false` slices backward only.
DangerousFlow extract_dangerous_flow(const PatchedFunction& fn, bool direction_both);

}  // namespace vtrace
