#include "vtrace/cfront.hpp"

namespace vtrace::cfront {

AstSequence node_sequence(const Node& node) {
  AstSequence seq;
  seq.labels.reserve(node_count(node));
  // Iterative in-order: first child, the node, remaining children.
  struct Frame {
    const Node* node;
    std::size_t next;
  };
  std::vector<Frame> stack{{&node, 0}};
  while (!stack.empty()) {
    Frame& f = stack.back();
    const Node* n = f.node;
    if (n->children.empty()) {
      seq.labels.push_back(n->label());
      stack.pop_back();
      continue;
    }
    if (f.next == 1) seq.labels.push_back(n->label());
    if (f.next < n->children.size()) {
      const Node* child = &n->children[f.next++];
      stack.push_back({child, 0});
      continue;
    }
    stack.pop_back();
  }
  return seq;
}

AstSequence ast_to_sequence(const NormalizedAst& ast) {
  if (!ast.tree.root) return {};
  return node_sequence(*ast.tree.root);
}

}  // namespace vtrace::cfront
