// Text format for tree ensembles (whitespace separated, doubles printed with
// 17 significant digits, nodes listed in storage order):
//
//   stockhybrid-gbt 1
//   base_score <value>
//   learning_rate <value>
//   schema <schema_id>
//   features <count>
//   <feature name>                                       (count lines)
//   trees <count>
//   tree <node count>
//   leaf <value> <count>
//   split <feature index> <threshold> <missing_goes_left 0|1> <left> <right> <count>
//   end

#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <type_traits>

#include "stockhybrid/gbt.hpp"

namespace stockhybrid::gbt {
namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class Reader {
 public:
  explicit Reader(const std::string& text) : in_(text) {}

  std::istringstream line(const std::string& key) {
    std::string l;
    while (std::getline(in_, l)) {
      ++line_no_;
      if (!l.empty()) break;
    }
    std::istringstream s(l);
    std::string found;
    s >> found;
    if (found != key) {
      fail(ErrorCode::parse, "ensemble text line " + std::to_string(line_no_) + ": expected '" +
                                 key + "', found '" + found + "'");
    }
    return s;
  }

  std::string raw() {
    std::string l;
    std::getline(in_, l);
    ++line_no_;
    return l;
  }

  template <typename T>
  T get(std::istringstream& s, const char* what) {
    std::string tok;
    if (!(s >> tok)) bad(what);
    if constexpr (std::is_same_v<T, double>) {
      char* end = nullptr;
      const double v = std::strtod(tok.c_str(), &end);
      if (*end != '\0') bad(what);
      return v;
    } else {
      std::istringstream t(tok);
      T v{};
      if (!(t >> v)) bad(what);
      return v;
    }
  }

 private:
  [[noreturn]] void bad(const char* what) const {
    fail(ErrorCode::parse,
         "ensemble text line " + std::to_string(line_no_) + ": bad " + std::string(what));
  }

  std::istringstream in_;
  int line_no_ = 0;
};

}  // namespace

std::string to_text(const TreeEnsemble& e) {
  std::ostringstream out;
  out << "stockhybrid-gbt 1\n";
  out << "base_score " << num(e.base_score) << '\n';
  out << "learning_rate " << num(e.learning_rate) << '\n';
  out << "schema " << e.schema_id << '\n';
  out << "features " << e.feature_names.size() << '\n';
  for (const auto& f : e.feature_names) out << f << '\n';
  out << "trees " << e.trees.size() << '\n';
  for (const auto& t : e.trees) {
    out << "tree " << t.nodes.size() << '\n';
    for (const auto& n : t.nodes) {
      if (n.leaf()) {
        out << "leaf " << num(n.value) << ' ' << n.count << '\n';
      } else {
        out << "split " << n.feature << ' ' << num(n.threshold) << ' '
            << (n.missing_goes_left ? 1 : 0) << ' ' << n.left << ' ' << n.right << ' ' << n.count
            << '\n';
      }
    }
  }
  out << "end\n";
  return out.str();
}

TreeEnsemble ensemble_from_text(const std::string& text) {
  Reader r(text);
  TreeEnsemble e;
  {
    auto s = r.line("stockhybrid-gbt");
    if (r.get<int>(s, "version") != 1) fail(ErrorCode::parse, "unsupported ensemble version");
  }
  {
    auto s = r.line("base_score");
    e.base_score = r.get<double>(s, "base score");
  }
  {
    auto s = r.line("learning_rate");
    e.learning_rate = r.get<double>(s, "learning rate");
  }
  {
    auto s = r.line("schema");
    e.schema_id = r.get<std::string>(s, "schema id");
  }
  int features = 0;
  {
    auto s = r.line("features");
    features = r.get<int>(s, "feature count");
  }
  for (int i = 0; i < features; ++i) e.feature_names.push_back(r.raw());
  if (schema_id_for(e.feature_names) != e.schema_id) {
    fail(ErrorCode::schema, "ensemble feature names do not match its schema id");
  }
  int trees = 0;
  {
    auto s = r.line("trees");
    trees = r.get<int>(s, "tree count");
  }
  for (int t = 0; t < trees; ++t) {
    auto s = r.line("tree");
    const int count = r.get<int>(s, "node count");
    if (count < 1) fail(ErrorCode::parse, "ensemble text: a tree needs at least one node");
    Tree tree;
    for (int i = 0; i < count; ++i) {
      std::istringstream l(r.raw());
      std::string kind;
      l >> kind;
      TreeNode n;
      if (kind == "leaf") {
        n.value = r.get<double>(l, "leaf value");
        n.count = r.get<int>(l, "leaf count");
      } else if (kind == "split") {
        n.feature = r.get<int>(l, "split feature");
        n.threshold = r.get<double>(l, "split threshold");
        n.missing_goes_left = r.get<int>(l, "missing direction") != 0;
        n.left = r.get<int>(l, "left child");
        n.right = r.get<int>(l, "right child");
        n.count = r.get<int>(l, "node count");
        if (n.feature < 0 || n.feature >= features || n.left <= i || n.right <= i ||
            n.left >= count || n.right >= count) {
          fail(ErrorCode::parse, "ensemble text: split node references are out of range");
        }
      } else {
        fail(ErrorCode::parse, "ensemble text: unknown node kind '" + kind + "'");
      }
      tree.nodes.push_back(n);
    }
    e.trees.push_back(std::move(tree));
  }
  r.line("end");
  return e;
}

}  // namespace stockhybrid::gbt
