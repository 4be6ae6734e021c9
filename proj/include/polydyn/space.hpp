#pragma once

#include <compare>
#include <cstddef>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace polydyn {

class Space;

/// An element of a Space: the unit value, a finite label, a real vector or a
/// tuple of points.
class Point {
 public:
  struct Unit {};
  using Label = std::string;
  using Vec = std::vector<double>;
  using Tuple = std::vector<Point>;

  Point() = default;
  static Point unit() { return Point(); }
  static Point label(std::string l);
  static Point vec(Vec v);
  static Point tuple(Tuple items);
  static Point pair(Point a, Point b);

  bool is_unit() const { return std::holds_alternative<Unit>(value_); }
  bool is_label() const { return std::holds_alternative<Label>(value_); }
  bool is_vec() const { return std::holds_alternative<Vec>(value_); }
  bool is_tuple() const { return std::holds_alternative<Tuple>(value_); }

  const Label& as_label() const;
  const Vec& as_vec() const;
  const Tuple& as_tuple() const;
  const Point& at(std::size_t i) const;

  // Canonical text form, also used as table keys in JSON specs.
  std::string str() const;

  friend int compare(const Point& a, const Point& b);
  friend bool operator==(const Point& a, const Point& b) { return compare(a, b) == 0; }
  friend bool operator<(const Point& a, const Point& b) { return compare(a, b) < 0; }

 private:
  std::variant<Unit, Label, Vec, Tuple> value_;
};

/// Objects of the base category: finite label sets, Euclidean spaces, finite
/// products and the terminal object.
class Space {
 public:
  enum class Kind { Unit, Finite, Euclid, Prod };

  Space() = default;
  static Space unit() { return Space(); }
  static Space finite(std::vector<std::string> labels);
  // Finite space with labels "0", "1", ..., "n-1".
  static Space range(std::size_t n);
  static Space euclid(std::size_t dim);
  // Prod of no factors is Unit.
  static Space prod(std::vector<Space> factors);
  static Space pair(Space a, Space b) { return prod({std::move(a), std::move(b)}); }

  Kind kind() const { return kind_; }
  const std::vector<std::string>& labels() const { return labels_; }
  std::size_t dim() const { return dim_; }
  const std::vector<Space>& factors() const { return factors_; }
  const Space& factor(std::size_t i) const;

  std::optional<std::size_t> cardinality() const;
  bool is_finite() const { return cardinality().has_value(); }
  bool contains(const Point& p) const;
  // All points, in lexicographic order of factors. Throws for non-finite spaces.
  std::vector<Point> enumerate() const;
  // Label point by position in the label list.
  Point at(std::size_t i) const;

  std::string str() const;

  friend bool operator==(const Space& a, const Space& b);

 private:
  Kind kind_ = Kind::Unit;
  std::vector<std::string> labels_;
  std::size_t dim_ = 0;
  std::vector<Space> factors_;
};

// Flattens nested products, drops Unit factors and unwraps singletons. Only
// applied where callers ask for it.
Space normalize(const Space& s);
// Image of p under the same flattening, so that normalize(s).contains(result).
Point normalize_point(const Space& s, const Point& p);

}  // namespace polydyn
