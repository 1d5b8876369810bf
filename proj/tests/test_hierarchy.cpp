#include <gtest/gtest.h>

#include <random>
#include <set>

#include "hierclass/hierarchy.hpp"

using namespace hierclass;

TEST(Hierarchy, FourClassTreeHasSixBranches) {
  auto h = parse_hierarchy("((1,2),(3,4))");
  EXPECT_EQ(h.num_classes(), 4u);
  EXPECT_EQ(h.num_nodes(), 3u);  // root plus two internal children
  EXPECT_EQ(h.num_branches(), 6u);
  EXPECT_FALSE(h.is_flat());
  EXPECT_EQ(h.labels(), (std::vector<std::string>{"1", "2", "3", "4"}));
}

TEST(Hierarchy, FlatTree) {
  auto h = parse_hierarchy("(a,b,c)");
  EXPECT_EQ(h.num_branches(), 3u);
  EXPECT_TRUE(h.is_flat());
  EXPECT_EQ(h.leaf_path("b").size(), 1u);
  for (int j = 0; j < 3; ++j) EXPECT_EQ(h.leaf_depth(j), 1);
}

TEST(Hierarchy, MixedDepths) {
  auto h = parse_hierarchy("((1,2),(3,(4,5)),6)");
  EXPECT_EQ(h.num_branches(), 9u);
  std::vector<int> depths;
  for (std::size_t j = 0; j < h.num_classes(); ++j) depths.push_back(h.leaf_depth(static_cast<int>(j)));
  EXPECT_EQ(depths, (std::vector<int>{2, 2, 2, 3, 3, 1}));
  EXPECT_EQ(h.leaf_path("5").size(), 3u);
}

TEST(Hierarchy, LeafPathFollowsBranchSums) {
  // Class 1 sums the root-level branch to {1,2} and the branch to leaf 1.
  auto h = hierarchies::four_class();
  const auto& path = h.leaf_path("1");
  ASSERT_EQ(path.size(), 2u);
  EXPECT_EQ(h.branch(path[0]).parent, 0);
  EXPECT_EQ(h.branch(path[0]).slot, 0);
  EXPECT_EQ(h.branch(path[1]).parent, h.branch(path[0]).child_node);
  EXPECT_EQ(h.branch(path[1]).leaf, 0);
  // classes 1 and 2 share their first branch; 3 takes the other root branch
  EXPECT_EQ(h.leaf_path("2")[0], path[0]);
  EXPECT_NE(h.leaf_path("3")[0], path[0]);
}

TEST(Hierarchy, BranchesGroupedByParent) {
  auto h = hierarchies::eight_class();
  int expected = 0;
  for (std::size_t m = 0; m < h.num_nodes(); ++m) {
    EXPECT_EQ(h.first_branch(static_cast<int>(m)), expected);
    for (int k = 0; k < h.num_children(static_cast<int>(m)); ++k) {
      const Branch& br = h.branch(expected + k);
      EXPECT_EQ(br.parent, static_cast<int>(m));
      EXPECT_EQ(br.slot, k);
    }
    expected += h.num_children(static_cast<int>(m));
  }
  EXPECT_EQ(expected, static_cast<int>(h.num_branches()));
  EXPECT_EQ(h.node_level(0), 0);
  EXPECT_EQ(h.max_level(), 2);
}

TEST(Hierarchy, BuiltinTrees) {
  EXPECT_EQ(hierarchies::eight_class().num_classes(), 8u);
  auto doc = hierarchies::document_regions();
  EXPECT_EQ(doc.num_classes(), 24u);
  EXPECT_EQ(doc.num_children(0), 13);
  EXPECT_TRUE(doc.class_index("Eq. #").has_value());
  EXPECT_EQ(doc.leaf_depth(*doc.class_index("Fig. Cap.")), 4);
}

TEST(Hierarchy, QuotedLabelsAndWhitespace) {
  auto h = parse_hierarchy("  ( \"a b\" ,\n (c , \"d,e\") )  ");
  EXPECT_EQ(h.labels(), (std::vector<std::string>{"a b", "c", "d,e"}));
  EXPECT_EQ(h.to_string(), "(\"a b\",(c,\"d,e\"))");
}

TEST(Hierarchy, Errors) {
  EXPECT_THROW(parse_hierarchy(""), HierarchyParseError);
  EXPECT_THROW(parse_hierarchy("   "), HierarchyParseError);
  EXPECT_THROW(parse_hierarchy("(a)"), HierarchyParseError);
  EXPECT_THROW(parse_hierarchy("a"), HierarchyParseError);
  EXPECT_THROW(parse_hierarchy("((a),b)"), HierarchyParseError);
  EXPECT_THROW(parse_hierarchy("(a,a)"), HierarchyError);
  EXPECT_THROW(parse_hierarchy("(a,(b,a))"), HierarchyError);
  EXPECT_THROW(parse_hierarchy("(a,b"), HierarchyParseError);
  EXPECT_THROW(parse_hierarchy("(a,b))"), HierarchyParseError);
  EXPECT_THROW(parse_hierarchy("(a,\"b)"), HierarchyParseError);
  EXPECT_THROW(parse_hierarchy("(a,,b)"), HierarchyParseError);
  EXPECT_THROW(hierarchies::four_class().leaf_path("9"), HierarchyError);
  try {
    parse_hierarchy("(a,b c)");
    FAIL();
  } catch (const HierarchyParseError& e) {
    EXPECT_EQ(e.position(), 5u);
  }
}

TEST(Hierarchy, TrailingSemicolonTolerated) {
  EXPECT_EQ(parse_hierarchy("((1,2),(3,4));"), hierarchies::four_class());
}

namespace {

std::string random_tree(std::mt19937& gen, int depth, int& next_label) {
  std::uniform_int_distribution<int> kids(2, 4);
  std::bernoulli_distribution leaf(depth >= 3 ? 1.0 : 0.5);
  int c = kids(gen);
  std::string s = "(";
  for (int k = 0; k < c; ++k) {
    if (k) s += ",";
    if (leaf(gen)) {
      const int id = next_label++;
      s += id % 3 == 0 ? "\"L " + std::to_string(id) + "\"" : "L" + std::to_string(id);
    } else {
      s += random_tree(gen, depth + 1, next_label);
    }
  }
  return s + ")";
}

}  // namespace

TEST(HierarchyProperty, RoundTripAndBranchAccounting) {
  std::mt19937 gen(12345);
  for (int trial = 0; trial < 200; ++trial) {
    int next = 0;
    std::string text = random_tree(gen, 0, next);
    ClassHierarchy h = parse_hierarchy(text);
    EXPECT_EQ(parse_hierarchy(h.to_string()), h) << text;
    EXPECT_EQ(parse_hierarchy(h.to_string()).to_string(), h.to_string());

    // sum of c_m over internal nodes = B = node count - 1
    int sum_children = 0;
    for (std::size_t m = 0; m < h.num_nodes(); ++m) sum_children += h.num_children(static_cast<int>(m));
    EXPECT_EQ(sum_children, static_cast<int>(h.num_branches()));
    EXPECT_EQ(h.num_branches(), h.num_nodes() + h.num_classes() - 1);

    // every branch is on some leaf path; paths are parent-child linked
    std::set<int> covered;
    for (std::size_t j = 0; j < h.num_classes(); ++j) {
      const auto& path = h.leaf_path(static_cast<int>(j));
      EXPECT_EQ(h.branch(path.front()).parent, 0);
      EXPECT_EQ(h.branch(path.back()).leaf, static_cast<int>(j));
      for (std::size_t k = 1; k < path.size(); ++k)
        EXPECT_EQ(h.branch(path[k]).parent, h.branch(path[k - 1]).child_node);
      covered.insert(path.begin(), path.end());
    }
    EXPECT_EQ(covered.size(), h.num_branches());
  }
}
