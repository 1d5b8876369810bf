#pragma once

#include <algorithm>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace hierclass {

class HierarchyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Syntax error in hierarchy text. `position()` is the byte offset of the
/// offending character.
class HierarchyParseError : public HierarchyError {
 public:
  HierarchyParseError(const std::string& what, std::size_t pos)
      : HierarchyError(what + " at position " + std::to_string(pos)), pos_(pos) {}
  std::size_t position() const noexcept { return pos_; }

 private:
  std::size_t pos_;
};

/// One edge of the hierarchy. Branch parameters live on edges; the root has
/// none of its own.
struct Branch {
  int parent = 0;       // internal node the edge leaves
  int slot = 0;         // child position under `parent`
  int child_node = -1;  // internal node the edge enters, or -1 for a leaf
  int leaf = -1;        // class index when the edge enters a leaf
};

/// Ordered list of branch indices from the root down to a leaf.
using LeafPath = std::vector<int>;

/// Rooted, ordered class tree.
///
/// Internal nodes are numbered breadth-first with the root at 0. Branches are
/// grouped by parent node in node order, so the children of node m occupy the
/// contiguous range [first_branch(m), first_branch(m) + num_children(m)).
/// Classes are numbered by left-to-right leaf order in the source text.
class ClassHierarchy {
 public:
  std::size_t num_nodes() const noexcept { return first_branch_.size(); }
  std::size_t num_branches() const noexcept { return branches_.size(); }
  std::size_t num_classes() const noexcept { return labels_.size(); }

  int first_branch(int node) const { return first_branch_.at(node); }
  int num_children(int node) const { return num_children_.at(node); }
  /// Depth of an internal node; the root has level 0.
  int node_level(int node) const { return node_level_.at(node); }
  const Branch& branch(int b) const { return branches_.at(b); }
  std::span<const Branch> branches() const noexcept { return branches_; }

  const std::string& label(int cls) const { return labels_.at(cls); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }

  std::optional<int> class_index(std::string_view label) const {
    auto it = std::find(labels_.begin(), labels_.end(), label);
    if (it == labels_.end()) return std::nullopt;
    return static_cast<int>(it - labels_.begin());
  }

  const LeafPath& leaf_path(int cls) const { return paths_.at(cls); }

  const LeafPath& leaf_path(std::string_view label) const {
    auto idx = class_index(label);
    if (!idx) throw HierarchyError("unknown class label '" + std::string(label) + "'");
    return paths_[*idx];
  }

  int leaf_depth(int cls) const { return static_cast<int>(paths_.at(cls).size()); }

  /// True iff every leaf hangs directly off the root.
  bool is_flat() const noexcept { return num_nodes() == 1; }

  /// Classes whose leaf path passes through branch b, in class order.
  const std::vector<int>& classes_below(int b) const { return below_.at(b); }

  int max_level() const noexcept {
    return node_level_.empty() ? 0 : *std::max_element(node_level_.begin(), node_level_.end());
  }

  /// Canonical text form; parse_hierarchy(to_string()) reproduces *this.
  std::string to_string() const {
    std::string out;
    write_node(0, out);
    return out;
  }

  friend bool operator==(const ClassHierarchy& a, const ClassHierarchy& b) {
    return a.labels_ == b.labels_ && a.num_children_ == b.num_children_ &&
           a.paths_ == b.paths_;
  }

  friend ClassHierarchy parse_hierarchy(std::string_view text);

 private:
  struct RawNode {
    std::string label;
    std::vector<std::unique_ptr<RawNode>> children;
    bool is_leaf() const { return children.empty(); }
  };

  static bool needs_quotes(const std::string& s) {
    if (s.empty()) return true;
    return std::any_of(s.begin(), s.end(), [](char ch) {
      return ch == '(' || ch == ')' || ch == ',' || ch == ';' || ch == '"' ||
             ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r';
    });
  }

  void write_node(int node, std::string& out) const {
    out += '(';
    for (int k = 0; k < num_children_[node]; ++k) {
      if (k) out += ',';
      const Branch& br = branches_[first_branch_[node] + k];
      if (br.child_node >= 0) {
        write_node(br.child_node, out);
      } else {
        const std::string& lab = labels_[br.leaf];
        if (needs_quotes(lab))
          out += '"' + lab + '"';
        else
          out += lab;
      }
    }
    out += ')';
  }

  void build(const RawNode& root);

  std::vector<int> first_branch_;
  std::vector<int> num_children_;
  std::vector<int> node_level_;
  std::vector<Branch> branches_;
  std::vector<std::string> labels_;
  std::vector<LeafPath> paths_;
  std::vector<std::vector<int>> below_;

  friend class HierarchyParser;
};

class HierarchyParser {
 public:
  explicit HierarchyParser(std::string_view text) : text_(text) {}

  std::unique_ptr<ClassHierarchy::RawNode> parse() {
    skip_ws();
    if (pos_ == text_.size()) throw HierarchyParseError("empty hierarchy", pos_);
    auto root = parse_node();
    skip_ws();
    // A single trailing ';' is tolerated for Newick-style files.
    if (pos_ < text_.size() && text_[pos_] == ';') {
      ++pos_;
      skip_ws();
    }
    if (pos_ != text_.size()) throw HierarchyParseError("unexpected trailing input", pos_);
    if (root->is_leaf())
      throw HierarchyParseError("root must be an internal node with at least 2 children", 0);
    return root;
  }

 private:
  using RawNode = ClassHierarchy::RawNode;

  static bool is_ws(char ch) { return ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r'; }
  static bool is_delim(char ch) {
    return ch == '(' || ch == ')' || ch == ',' || ch == ';' || ch == '"' || is_ws(ch);
  }

  void skip_ws() {
    while (pos_ < text_.size() && is_ws(text_[pos_])) ++pos_;
  }

  std::unique_ptr<RawNode> parse_node() {
    skip_ws();
    if (pos_ >= text_.size()) throw HierarchyParseError("unexpected end of input", pos_);
    auto node = std::make_unique<RawNode>();
    char ch = text_[pos_];
    if (ch == '(') {
      std::size_t open = pos_++;
      node->children.push_back(parse_node());
      skip_ws();
      while (pos_ < text_.size() && text_[pos_] == ',') {
        ++pos_;
        node->children.push_back(parse_node());
        skip_ws();
      }
      if (pos_ >= text_.size()) throw HierarchyParseError("unterminated '('", open);
      if (text_[pos_] != ')') throw HierarchyParseError("expected ',' or ')'", pos_);
      ++pos_;
      if (node->children.size() < 2)
        throw HierarchyParseError("internal node needs at least 2 children", open);
    } else if (ch == '"') {
      std::size_t open = pos_++;
      std::size_t close = text_.find('"', pos_);
      if (close == std::string_view::npos) throw HierarchyParseError("unterminated quoted label", open);
      node->label = std::string(text_.substr(pos_, close - pos_));
      pos_ = close + 1;
    } else if (!is_delim(ch)) {
      std::size_t start = pos_;
      while (pos_ < text_.size() && !is_delim(text_[pos_])) ++pos_;
      node->label = std::string(text_.substr(start, pos_ - start));
    } else {
      throw HierarchyParseError(std::string("unexpected character '") + ch + "'", pos_);
    }
    return node;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

inline void ClassHierarchy::build(const RawNode& root) {
  // Breadth-first numbering of internal nodes.
  std::vector<const RawNode*> nodes{&root};
  std::vector<int> level{0};
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (const auto& ch : nodes[i]->children) {
      if (!ch->is_leaf()) {
        nodes.push_back(ch.get());
        level.push_back(level[i] + 1);
      }
    }
  }
  node_level_ = level;

  // Left-to-right leaf numbering (depth-first textual order).
  std::vector<const RawNode*> leaf_nodes;
  auto collect = [&](auto&& self, const RawNode* n) -> void {
    if (n->is_leaf()) {
      leaf_nodes.push_back(n);
      return;
    }
    for (const auto& ch : n->children) self(self, ch.get());
  };
  collect(collect, &root);

  std::unordered_set<std::string> seen;
  for (const RawNode* lf : leaf_nodes) {
    if (!seen.insert(lf->label).second)
      throw HierarchyError("duplicate leaf label '" + lf->label + "'");
    labels_.push_back(lf->label);
  }

  auto node_id = [&](const RawNode* n) {
    return static_cast<int>(std::find(nodes.begin(), nodes.end(), n) - nodes.begin());
  };
  auto leaf_id = [&](const RawNode* n) {
    return static_cast<int>(std::find(leaf_nodes.begin(), leaf_nodes.end(), n) - leaf_nodes.begin());
  };

  std::vector<int> parent_branch(nodes.size(), -1);
  for (std::size_t m = 0; m < nodes.size(); ++m) {
    first_branch_.push_back(static_cast<int>(branches_.size()));
    num_children_.push_back(static_cast<int>(nodes[m]->children.size()));
    int slot = 0;
    for (const auto& ch : nodes[m]->children) {
      Branch br;
      br.parent = static_cast<int>(m);
      br.slot = slot++;
      if (ch->is_leaf()) {
        br.leaf = leaf_id(ch.get());
      } else {
        br.child_node = node_id(ch.get());
        parent_branch[br.child_node] = static_cast<int>(branches_.size());
      }
      branches_.push_back(br);
    }
  }

  paths_.assign(labels_.size(), {});
  for (std::size_t b = 0; b < branches_.size(); ++b) {
    if (branches_[b].leaf < 0) continue;
    LeafPath path{static_cast<int>(b)};
    int node = branches_[b].parent;
    while (node != 0) {
      path.push_back(parent_branch[node]);
      node = branches_[parent_branch[node]].parent;
    }
    std::reverse(path.begin(), path.end());
    paths_[branches_[b].leaf] = std::move(path);
  }

  below_.assign(branches_.size(), {});
  for (std::size_t c = 0; c < paths_.size(); ++c)
    for (int b : paths_[c]) below_[b].push_back(static_cast<int>(c));
}

/// Parses the nested-parentheses hierarchy format:
///
///   tree := node
///   node := leaf | '(' node (',' node)+ ')'
///   leaf := token | '"' chars '"'
///
/// Whitespace outside quotes is ignored.
inline ClassHierarchy parse_hierarchy(std::string_view text) {
  HierarchyParser parser(text);
  auto root = parser.parse();
  ClassHierarchy h;
  h.build(*root);
  return h;
}

namespace hierarchies {

/// Four classes split into {1,2} and {3,4}.
inline ClassHierarchy four_class() { return parse_hierarchy("((1,2),(3,4))"); }

/// Eight classes over three levels.
inline ClassHierarchy eight_class() { return parse_hierarchy("(((1,2),(3,4,5)),6,(7,8))"); }

/// 24 document-region classes.
inline ClassHierarchy document_regions() {
  return parse_hierarchy(
      R"(((Text,Ref.,("Foot Note",("Fig. Cap.","Table Cap."),"Bullet Item")),)"
      R"(Abstract,("Auth. List","Ed. List"),Header,("Sec. Head.","Subsec. Head."),)"
      R"(Footer,("Fig. Label","Table Label"),Eq.,"Eq. #","Page #","Main Title",)"
      R"(Decoration,(Table,(Graph,Fig.),Code)))");
}

/// Single-level tree over c classes labelled 1..c.
inline ClassHierarchy flat(int c) {
  if (c < 2) throw HierarchyError("flat hierarchy needs at least 2 classes");
  std::string s = "(";
  for (int j = 1; j <= c; ++j) {
    if (j > 1) s += ',';
    s += std::to_string(j);
  }
  return parse_hierarchy(s + ")");
}

}  // namespace hierarchies

}  // namespace hierclass
