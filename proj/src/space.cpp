#include "polydyn/space.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "polydyn/error.hpp"

namespace polydyn {

Point Point::label(std::string l) {
  Point p;
  p.value_ = std::move(l);
  return p;
}

Point Point::vec(Vec v) {
  Point p;
  p.value_ = std::move(v);
  return p;
}

Point Point::tuple(Tuple items) {
  Point p;
  p.value_ = std::move(items);
  return p;
}

Point Point::pair(Point a, Point b) { return tuple({std::move(a), std::move(b)}); }

const Point::Label& Point::as_label() const {
  if (!is_label()) throw ShapeError("point " + str() + " is not a label");
  return std::get<Label>(value_);
}

const Point::Vec& Point::as_vec() const {
  if (!is_vec()) throw ShapeError("point " + str() + " is not a vector");
  return std::get<Vec>(value_);
}

const Point::Tuple& Point::as_tuple() const {
  if (!is_tuple()) throw ShapeError("point " + str() + " is not a tuple");
  return std::get<Tuple>(value_);
}

const Point& Point::at(std::size_t i) const {
  const auto& t = as_tuple();
  if (i >= t.size()) throw ShapeError("tuple index out of range in " + str());
  return t[i];
}

std::string Point::str() const {
  std::ostringstream os;
  os.precision(17);
  if (is_unit()) {
    os << "*";
  } else if (is_label()) {
    os << std::get<Label>(value_);
  } else if (is_vec()) {
    os << "[";
    const auto& v = std::get<Vec>(value_);
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
    os << "]";
  } else {
    os << "(";
    const auto& t = std::get<Tuple>(value_);
    for (std::size_t i = 0; i < t.size(); ++i) os << (i ? "," : "") << t[i].str();
    os << ")";
  }
  return os.str();
}

int compare(const Point& a, const Point& b) {
  if (a.value_.index() != b.value_.index()) return a.value_.index() < b.value_.index() ? -1 : 1;
  if (a.is_unit()) return 0;
  if (a.is_label()) {
    int c = std::get<Point::Label>(a.value_).compare(std::get<Point::Label>(b.value_));
    return c < 0 ? -1 : (c > 0 ? 1 : 0);
  }
  if (a.is_vec()) {
    const auto& x = std::get<Point::Vec>(a.value_);
    const auto& y = std::get<Point::Vec>(b.value_);
    if (x.size() != y.size()) return x.size() < y.size() ? -1 : 1;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i] < y[i]) return -1;
      if (y[i] < x[i]) return 1;
    }
    return 0;
  }
  const auto& x = std::get<Point::Tuple>(a.value_);
  const auto& y = std::get<Point::Tuple>(b.value_);
  if (x.size() != y.size()) return x.size() < y.size() ? -1 : 1;
  for (std::size_t i = 0; i < x.size(); ++i) {
    int c = compare(x[i], y[i]);
    if (c != 0) return c;
  }
  return 0;
}

Space Space::finite(std::vector<std::string> labels) {
  std::set<std::string> seen(labels.begin(), labels.end());
  if (seen.size() != labels.size()) throw ShapeError("finite space labels must be distinct");
  Space s;
  s.kind_ = Kind::Finite;
  s.labels_ = std::move(labels);
  return s;
}

Space Space::range(std::size_t n) {
  std::vector<std::string> labels;
  labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) labels.push_back(std::to_string(i));
  return finite(std::move(labels));
}

Space Space::euclid(std::size_t dim) {
  Space s;
  s.kind_ = Kind::Euclid;
  s.dim_ = dim;
  return s;
}

Space Space::prod(std::vector<Space> factors) {
  if (factors.empty()) return unit();
  Space s;
  s.kind_ = Kind::Prod;
  s.factors_ = std::move(factors);
  return s;
}

const Space& Space::factor(std::size_t i) const {
  if (kind_ != Kind::Prod || i >= factors_.size())
    throw ShapeError("space " + str() + " has no factor " + std::to_string(i));
  return factors_[i];
}

std::optional<std::size_t> Space::cardinality() const {
  switch (kind_) {
    case Kind::Unit:
      return 1;
    case Kind::Finite:
      return labels_.size();
    case Kind::Euclid:
      return std::nullopt;
    case Kind::Prod: {
      std::size_t n = 1;
      for (const auto& f : factors_) {
        auto c = f.cardinality();
        if (!c) return std::nullopt;
        n *= *c;
      }
      return n;
    }
  }
  return std::nullopt;
}

bool Space::contains(const Point& p) const {
  switch (kind_) {
    case Kind::Unit:
      return p.is_unit();
    case Kind::Finite:
      return p.is_label() &&
             std::find(labels_.begin(), labels_.end(), p.as_label()) != labels_.end();
    case Kind::Euclid:
      return p.is_vec() && p.as_vec().size() == dim_;
    case Kind::Prod: {
      if (!p.is_tuple() || p.as_tuple().size() != factors_.size()) return false;
      for (std::size_t i = 0; i < factors_.size(); ++i)
        if (!factors_[i].contains(p.as_tuple()[i])) return false;
      return true;
    }
  }
  return false;
}

std::vector<Point> Space::enumerate() const {
  switch (kind_) {
    case Kind::Unit:
      return {Point::unit()};
    case Kind::Finite: {
      std::vector<Point> out;
      out.reserve(labels_.size());
      for (const auto& l : labels_) out.push_back(Point::label(l));
      return out;
    }
    case Kind::Euclid:
      throw ShapeError("cannot enumerate Euclidean space " + str());
    case Kind::Prod: {
      std::vector<std::vector<Point>> parts;
      for (const auto& f : factors_) parts.push_back(f.enumerate());
      std::vector<Point> out;
      std::vector<std::size_t> idx(parts.size(), 0);
      for (const auto& part : parts)
        if (part.empty()) return out;
      while (true) {
        Point::Tuple t;
        t.reserve(parts.size());
        for (std::size_t i = 0; i < parts.size(); ++i) t.push_back(parts[i][idx[i]]);
        out.push_back(Point::tuple(std::move(t)));
        std::size_t k = parts.size();
        while (k > 0) {
          --k;
          if (++idx[k] < parts[k].size()) break;
          idx[k] = 0;
          if (k == 0) return out;
        }
      }
    }
  }
  return {};
}

Point Space::at(std::size_t i) const {
  if (kind_ != Kind::Finite || i >= labels_.size())
    throw ShapeError("no label " + std::to_string(i) + " in " + str());
  return Point::label(labels_[i]);
}

std::string Space::str() const {
  switch (kind_) {
    case Kind::Unit:
      return "1";
    case Kind::Finite: {
      std::string s = "{";
      for (std::size_t i = 0; i < labels_.size(); ++i) s += (i ? "," : "") + labels_[i];
      return s + "}";
    }
    case Kind::Euclid:
      return "R^" + std::to_string(dim_);
    case Kind::Prod: {
      std::string s = "(";
      for (std::size_t i = 0; i < factors_.size(); ++i) s += (i ? " x " : "") + factors_[i].str();
      return s + ")";
    }
  }
  return "?";
}

bool operator==(const Space& a, const Space& b) {
  return a.kind_ == b.kind_ && a.labels_ == b.labels_ && a.dim_ == b.dim_ &&
         a.factors_ == b.factors_;
}

Space normalize(const Space& s) {
  if (s.kind() != Space::Kind::Prod) return s;
  std::vector<Space> flat;
  for (const auto& f : s.factors()) {
    Space n = normalize(f);
    if (n.kind() == Space::Kind::Unit) continue;
    if (n.kind() == Space::Kind::Prod) {
      flat.insert(flat.end(), n.factors().begin(), n.factors().end());
    } else {
      flat.push_back(std::move(n));
    }
  }
  if (flat.size() == 1) return flat.front();
  return Space::prod(std::move(flat));
}

Point normalize_point(const Space& s, const Point& p) {
  if (s.kind() != Space::Kind::Prod) return p;
  std::vector<Point> flat;
  for (std::size_t k = 0; k < s.factors().size(); ++k) {
    const Space n = normalize(s.factors()[k]);
    Point q = normalize_point(s.factors()[k], p.at(k));
    if (n.kind() == Space::Kind::Unit) continue;
    if (n.kind() == Space::Kind::Prod) {
      flat.insert(flat.end(), q.as_tuple().begin(), q.as_tuple().end());
    } else {
      flat.push_back(std::move(q));
    }
  }
  if (flat.empty()) return Point::unit();
  if (flat.size() == 1) return flat.front();
  return Point::tuple(std::move(flat));
}

}  // namespace polydyn
