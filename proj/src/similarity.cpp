#include "vtrace/similarity.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_map>

#include "vtrace/errors.hpp"
#include "vtrace/text_util.hpp"

namespace vtrace {

using cfront::Node;
using cfront::NodeKind;

void Thresholds::validate() const {
  std::string problems;
  auto check = [&](const char* name, double v) {
    if (!(v >= 0.0 && v <= 1.0)) problems += std::string(problems.empty() ? "" : "; ") + name + " must be in [0, 1], got " + std::to_string(v);
  };
  check("theta1", line);
  check("theta2", ast);
  check("theta3", score);
  if (!problems.empty()) throw ConfigError(problems);
}

namespace {

template <typename Seq>
std::size_t edit_distance(const Seq& a, const Seq& b) {
  if (a.size() < b.size()) return edit_distance(b, a);
  std::vector<std::size_t> row(b.size() + 1);
  std::iota(row.begin(), row.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      std::size_t up = row[j];
      row[j] = std::min({up + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

double ratio(std::size_t distance, std::size_t longest) {
  if (longest == 0) return 1.0;
  return 1.0 - static_cast<double>(distance) / static_cast<double>(longest);
}

}  // namespace

std::size_t levenshtein(std::string_view a, std::string_view b) { return edit_distance(a, b); }

std::size_t sequence_edit_distance(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  // Interning turns label comparisons into integer comparisons.
  std::unordered_map<std::string_view, int> ids;
  auto intern = [&](const std::vector<std::string>& seq) {
    std::vector<int> out;
    out.reserve(seq.size());
    for (const auto& s : seq) out.push_back(ids.try_emplace(s, static_cast<int>(ids.size())).first->second);
    return out;
  };
  auto ia = intern(a);
  auto ib = intern(b);
  return edit_distance(ia, ib);
}

double line_similarity(std::string_view a, std::string_view b) {
  auto sa = squeeze_whitespace(a);
  auto sb = squeeze_whitespace(b);
  return ratio(levenshtein(sa, sb), std::max(sa.size(), sb.size()));
}

double sequence_similarity(const cfront::AstSequence& a, const cfront::AstSequence& b) {
  return ratio(sequence_edit_distance(a.labels, b.labels), std::max(a.labels.size(), b.labels.size()));
}

cfront::AstSequence statement_sequence(const Node& stmt, const cfront::DefinitionSet& defs,
                                       const cfront::InlineConfig& cfg) {
  cfront::SyntaxTree tree{stmt};
  auto expanded = cfront::inline_expand(tree, defs, cfg);
  return cfront::ast_to_sequence(cfront::normalize_ast(expanded.tree));
}

namespace {

std::optional<Node> parse_fragment(std::string_view text) {
  if (trim(text).empty()) return std::nullopt;
  Node block = cfront::parse_statements(text);
  std::vector<Node> kept;
  for (auto& c : block.children)
    if (c.kind != NodeKind::Empty) kept.push_back(std::move(c));
  if (kept.empty()) return std::nullopt;
  if (std::all_of(kept.begin(), kept.end(), [](const Node& n) { return n.kind == NodeKind::Unknown; }))
    return std::nullopt;
  if (kept.size() == 1) return std::move(kept.front());
  block.children = std::move(kept);
  return block;
}

}  // namespace

cfront::AstSequence statement_sequence(std::string_view text, const cfront::DefinitionSet& defs,
                                       const cfront::InlineConfig& cfg) {
  auto node = parse_fragment(text);
  if (!node) throw ParseFailure("cannot parse statement: " + std::string(trim(text)));
  return statement_sequence(*node, defs, cfg);
}

double ast_similarity(std::string_view a, std::string_view b, const cfront::DefinitionSet& defs_a,
                      const cfront::DefinitionSet& defs_b, const cfront::InlineConfig& cfg) {
  return sequence_similarity(statement_sequence(a, defs_a, cfg), statement_sequence(b, defs_b, cfg));
}

// ---- statement units ----------------------------------------------------

namespace {

int header_end_line(const Node& s) {
  switch (s.kind) {
    case NodeKind::If:
    case NodeKind::While:
    case NodeKind::Switch:
      return s.children.empty() ? s.span.begin_line : s.children[0].span.end_line;
    case NodeKind::For:
      return s.children.size() > 2 ? std::max(s.span.begin_line, s.children[2].span.end_line) : s.span.begin_line;
    case NodeKind::DoWhile:
    case NodeKind::Compound:
    case NodeKind::Label:
    case NodeKind::Case:
    case NodeKind::Default:
      return s.span.begin_line;
    default:
      return s.span.end_line;
  }
}

}  // namespace

std::vector<StatementUnit> statement_units(const FunctionSnapshot& fn) {
  std::vector<StatementUnit> units;
  if (fn.lines.empty()) return units;
  cfront::SyntaxTree tree;
  try {
    tree = cfront::parse_function(fn);
  } catch (const Unparseable&) {
    return units;
  }
  if (!tree.root) return units;
  const Node& root = *tree.root;
  const Node* body = root.kind == NodeKind::FunctionDef && root.children.size() > 2 ? &root.children[2] : &root;
  for (const Node* s : cfront::collect_statements(*body)) {
    if (s == body || s->kind == NodeKind::Compound || s->kind == NodeKind::Empty) continue;
    StatementUnit u;
    u.line = s->span.begin_line;
    u.end_line = s->span.end_line;
    int last = std::max(u.line, header_end_line(*s));
    std::string text;
    for (int l = u.line; l <= last; ++l) {
      if (!fn.contains_line(l)) break;
      if (!text.empty()) text += ' ';
      text += fn.line(l);
    }
    u.text = squeeze_whitespace(text);
    u.header = cfront::statement_header(*s);
    u.full = *s;
    units.push_back(std::move(u));
  }
  std::stable_sort(units.begin(), units.end(),
                   [](const StatementUnit& a, const StatementUnit& b) { return a.line < b.line; });
  return units;
}

const StatementUnit* unit_at(const std::vector<StatementUnit>& units, int line) {
  for (const auto& u : units)
    if (u.line == line) return &u;
  const StatementUnit* best = nullptr;
  for (const auto& u : units)
    if (u.line <= line && u.end_line >= line) best = &u;
  return best;
}

std::string_view to_string(MatchChannel channel) {
  switch (channel) {
    case MatchChannel::Line: return "line";
    case MatchChannel::Ast: return "ast";
    case MatchChannel::None: return "none";
  }
  return "none";
}

double compute_similarity_score(const std::vector<StatementMatch>& matches) {
  double total = 0.0, hit = 0.0;
  for (const auto& m : matches) {
    total += m.weight;
    if (m.matched) hit += m.weight;
  }
  if (matches.empty() || total <= 0.0) throw EmptySet("similarity score over an empty statement set");
  return hit / total;
}

double compute_similarity_score(int sensitive_total, int sensitive_matched, int default_total, int default_matched,
                                double weight_v, double weight_d) {
  if (sensitive_total + default_total < 1) throw EmptySet("similarity score needs at least one statement");
  double denom = sensitive_total * weight_v + default_total * weight_d;
  if (denom <= 0.0) throw EmptySet("similarity score weights sum to zero");
  return (sensitive_matched * weight_v + default_matched * weight_d) / denom;
}

namespace {

struct Forms {
  std::vector<cfront::AstSequence> seqs;
};

Forms sequences_of(const StatementUnit& u, const cfront::DefinitionSet& defs, const cfront::InlineConfig& cfg) {
  Forms f;
  auto add = [&](const Node& n) {
    try {
      f.seqs.push_back(statement_sequence(n, defs, cfg));
    } catch (const Error&) {
    }
  };
  if (u.full.kind == NodeKind::Unknown) return f;
  add(u.header);
  if (!(u.full == u.header)) add(u.full);
  return f;
}

}  // namespace

StatementMatch match_statement(const StatementUnit& sv, const std::vector<StatementUnit>& candidates,
                               const Thresholds& th, const ComparisonContext& ctx) {
  static const cfront::DefinitionSet kNoDefs;
  const auto& sv_defs = ctx.sv_defs ? *ctx.sv_defs : kNoDefs;
  const auto& cand_defs = ctx.candidate_defs ? *ctx.candidate_defs : kNoDefs;

  StatementMatch m;
  m.sv_line = sv.line;
  m.sv_text = sv.text;

  const StatementUnit* best_line = nullptr;
  for (const auto& c : candidates) {
    double s = line_similarity(sv.text, c.text);
    if (!best_line || s > m.line_score) {
      m.line_score = s;
      best_line = &c;
    }
  }
  if (best_line && m.line_score >= th.line) {
    m.matched = true;
    m.channel = MatchChannel::Line;
    m.score = m.line_score;
    m.matched_line = best_line->line;
    m.matched_text = best_line->text;
    return m;
  }

  auto sv_forms = sequences_of(sv, sv_defs, ctx.inline_config);
  const StatementUnit* best_ast = nullptr;
  if (!sv_forms.seqs.empty()) {
    double best = -1.0;
    for (const auto& c : candidates) {
      auto forms = sequences_of(c, cand_defs, ctx.inline_config);
      for (const auto& a : sv_forms.seqs)
        for (const auto& b : forms.seqs) {
          double s = sequence_similarity(a, b);
          if (s > best) {
            best = s;
            best_ast = &c;
          }
        }
    }
    if (best_ast) m.ast_score = best;
  }

  if (m.ast_score && *m.ast_score >= th.ast) {
    m.matched = true;
    m.channel = MatchChannel::Ast;
    m.score = *m.ast_score;
    m.matched_line = best_ast->line;
    m.matched_text = best_ast->text;
    return m;
  }
  m.score = std::max(m.line_score, m.ast_score.value_or(0.0));
  const StatementUnit* nearest = m.ast_score && *m.ast_score > m.line_score ? best_ast : best_line;
  if (nearest) {
    m.matched_line = nearest->line;
    m.matched_text = nearest->text;
  }
  return m;
}

}  // namespace vtrace
