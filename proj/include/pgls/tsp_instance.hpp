#pragma once

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace pgls {

using City = std::uint32_t;
using Cost = std::int64_t;

enum class EdgeWeightKind { euc_2d, ceil_2d, att };

inline std::string_view to_string(EdgeWeightKind kind) {
  switch (kind) {
    case EdgeWeightKind::euc_2d: return "EUC_2D";
    case EdgeWeightKind::ceil_2d: return "CEIL_2D";
    case EdgeWeightKind::att: return "ATT";
  }
  return "?";
}

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Thrown by the TSPLIB readers; `line()` is 1-based, 0 when the error is not
/// tied to a particular line (e.g. a missing section at end of file).
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

namespace detail {

inline Cost nint(double v) { return static_cast<Cost>(v + 0.5); }

inline Cost rounded_distance(EdgeWeightKind kind, const Point& a, const Point& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  switch (kind) {
    case EdgeWeightKind::euc_2d:
      return nint(std::sqrt(dx * dx + dy * dy));
    case EdgeWeightKind::ceil_2d:
      return static_cast<Cost>(std::ceil(std::sqrt(dx * dx + dy * dy)));
    case EdgeWeightKind::att: {
      const double r = std::sqrt((dx * dx + dy * dy) / 10.0);
      const Cost t = nint(r);
      return static_cast<double>(t) < r ? t + 1 : t;
    }
  }
  return 0;
}

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

// Splits "KEY : VALUE" / "KEY: VALUE" / "KEY" into trimmed key and value.
inline std::pair<std::string_view, std::string_view> split_keyword(std::string_view line) {
  const auto colon = line.find(':');
  if (colon == std::string_view::npos) return {trim(line), {}};
  return {trim(line.substr(0, colon)), trim(line.substr(colon + 1))};
}

template <typename T>
bool parse_number(std::string_view token, T& out) {
  const auto* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, out);
  return ec == std::errc{} && ptr == end;
}

inline std::vector<std::string_view> tokens(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

}  // namespace detail

/// A symmetric TSP instance with integer edge costs under the TSPLIB rounding
/// conventions. Immutable once built; share it read-only between workers.
class TspInstance {
 public:
  /// Instances up to this size keep every edge cost in a triangular table.
  static constexpr std::size_t kMemoLimit = 5000;

  TspInstance(std::string name, EdgeWeightKind kind, std::vector<Point> coords,
              std::optional<Cost> known_optimum = std::nullopt)
      : name_(std::move(name)), kind_(kind), coords_(std::move(coords)), known_optimum_(known_optimum) {
    if (coords_.size() < 3) throw std::invalid_argument("TSP instance needs at least 3 cities");
    if (coords_.size() > std::numeric_limits<City>::max()) throw std::invalid_argument("too many cities");
    if (known_optimum_ && *known_optimum_ < 0) throw std::invalid_argument("negative optimum");
    if (coords_.size() <= kMemoLimit) build_memo();
  }

  const std::string& name() const noexcept { return name_; }
  std::size_t size() const noexcept { return coords_.size(); }
  EdgeWeightKind edge_weight_kind() const noexcept { return kind_; }
  const std::vector<Point>& coords() const noexcept { return coords_; }
  const std::optional<Cost>& known_optimum() const noexcept { return known_optimum_; }
  void set_known_optimum(std::optional<Cost> opt) { known_optimum_ = opt; }

  /// Unchecked cost lookup for the hot paths; a == b yields 0.
  Cost cost(City a, City b) const noexcept {
    if (a == b) return 0;
    if (!memo_.empty()) {
      if (a < b) std::swap(a, b);
      return memo_[static_cast<std::size_t>(a) * (a - 1) / 2 + b];
    }
    return detail::rounded_distance(kind_, coords_[a], coords_[b]);
  }

  /// Checked edge cost: a and b must be distinct cities in range.
  Cost edge_cost(City a, City b) const {
    if (a >= size() || b >= size()) throw std::out_of_range("edge_cost: city index out of range");
    if (a == b) throw std::invalid_argument("edge_cost: a == b is not an edge");
    return cost(a, b);
  }

 private:
  void build_memo() {
    const std::size_t n = coords_.size();
    memo_.resize(n * (n - 1) / 2);
    for (std::size_t a = 1; a < n; ++a) {
      for (std::size_t b = 0; b < a; ++b) {
        memo_[a * (a - 1) / 2 + b] =
            static_cast<std::int32_t>(detail::rounded_distance(kind_, coords_[a], coords_[b]));
      }
    }
  }

  std::string name_;
  EdgeWeightKind kind_;
  std::vector<Point> coords_;
  std::optional<Cost> known_optimum_;
  std::vector<std::int32_t> memo_;
};

/// Reads a TSPLIB .tsp file with a NODE_COORD_SECTION. City ids are converted
/// to 0-based order of appearance.
inline TspInstance parse_tsplib(std::istream& in) {
  std::string name;
  std::optional<std::size_t> dimension;
  std::optional<EdgeWeightKind> kind;
  std::vector<Point> coords;
  bool in_coords = false;
  std::string raw;
  std::size_t lineno = 0;
  std::size_t section_line = 0;

  while (std::getline(in, raw)) {
    ++lineno;
    const std::string_view line = detail::trim(raw);
    if (line.empty()) continue;
    if (line == "EOF") break;

    if (in_coords) {
      const auto tok = detail::tokens(line);
      std::size_t id = 0;
      Point p;
      if (tok.size() == 3 && detail::parse_number(tok[0], id) && detail::parse_number(tok[1], p.x) &&
          detail::parse_number(tok[2], p.y)) {
        if (id != coords.size() + 1) throw ParseError(lineno, "node ids must be consecutive starting at 1");
        coords.push_back(p);
        continue;
      }
      // A keyword after the section ends it (e.g. DISPLAY_DATA_SECTION).
      if (!tok.empty() && std::isalpha(static_cast<unsigned char>(tok[0][0]))) {
        in_coords = false;
      } else {
        throw ParseError(lineno, "malformed coordinate line");
      }
    }

    const auto [key, value] = detail::split_keyword(line);
    if (key == "NAME") {
      name = std::string(value);
    } else if (key == "TYPE") {
      if (value != "TSP") throw ParseError(lineno, "unsupported TYPE '" + std::string(value) + "'");
    } else if (key == "DIMENSION") {
      std::size_t d = 0;
      if (!detail::parse_number(value, d)) throw ParseError(lineno, "malformed DIMENSION");
      dimension = d;
    } else if (key == "EDGE_WEIGHT_TYPE") {
      if (value == "EUC_2D") {
        kind = EdgeWeightKind::euc_2d;
      } else if (value == "CEIL_2D") {
        kind = EdgeWeightKind::ceil_2d;
      } else if (value == "ATT") {
        kind = EdgeWeightKind::att;
      } else {
        throw ParseError(lineno, "unsupported EDGE_WEIGHT_TYPE '" + std::string(value) + "'");
      }
    } else if (key == "NODE_COORD_SECTION") {
      if (!dimension) throw ParseError(lineno, "NODE_COORD_SECTION before DIMENSION");
      if (!kind) throw ParseError(lineno, "NODE_COORD_SECTION before EDGE_WEIGHT_TYPE");
      in_coords = true;
      section_line = lineno;
      coords.reserve(*dimension);
    } else if (key == "COMMENT" || key == "NODE_COORD_TYPE" || key == "DISPLAY_DATA_TYPE" ||
               key == "DISPLAY_DATA_SECTION") {
      // informational
    } else if (key.empty() || value.empty()) {
      throw ParseError(lineno, "malformed header line '" + std::string(line) + "'");
    }
  }

  if (!dimension) throw ParseError(0, "missing DIMENSION");
  if (!kind) throw ParseError(0, "missing EDGE_WEIGHT_TYPE");
  if (!section_line) throw ParseError(0, "missing NODE_COORD_SECTION");
  if (coords.size() != *dimension) {
    throw ParseError(section_line, "DIMENSION " + std::to_string(*dimension) + " but " +
                                       std::to_string(coords.size()) + " coordinates");
  }
  return TspInstance(std::move(name), *kind, std::move(coords));
}

inline TspInstance parse_tsplib(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_tsplib(in);
}

inline TspInstance load_tsplib(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open instance file '" + path + "'");
  return parse_tsplib(in);
}

/// Writes `inst` back in TSPLIB form. Coordinates use the shortest
/// representation that parses back to the same double.
inline void write_tsplib(std::ostream& out, const TspInstance& inst) {
  out << "NAME : " << inst.name() << "\nTYPE : TSP\nDIMENSION : " << inst.size()
      << "\nEDGE_WEIGHT_TYPE : " << to_string(inst.edge_weight_kind()) << "\nNODE_COORD_SECTION\n";
  char buf[64];
  for (std::size_t i = 0; i < inst.size(); ++i) {
    const auto& p = inst.coords()[i];
    out << i + 1;
    for (double v : {p.x, p.y}) {
      auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
      out << ' ' << std::string_view(buf, static_cast<std::size_t>(end - buf));
    }
    out << '\n';
  }
  out << "EOF\n";
}

/// Reads a TSPLIB .tour file: TOUR_SECTION of 1-based ids terminated by -1.
/// Returns 0-based cities. Permutation validity is checked by `Tour`.
inline std::vector<City> parse_tour_file(std::istream& in) {
  std::vector<City> order;
  std::optional<std::size_t> dimension;
  bool in_tour = false;
  bool terminated = false;
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string_view line = detail::trim(raw);
    if (line.empty()) continue;
    if (line == "EOF") break;
    if (in_tour) {
      for (auto tok : detail::tokens(line)) {
        long long id = 0;
        if (!detail::parse_number(tok, id)) throw ParseError(lineno, "malformed tour entry");
        if (id == -1) {
          terminated = true;
          break;
        }
        if (id < 1) throw ParseError(lineno, "tour ids are 1-based");
        order.push_back(static_cast<City>(id - 1));
      }
      if (terminated) break;
      continue;
    }
    const auto [key, value] = detail::split_keyword(line);
    if (key == "TOUR_SECTION") {
      in_tour = true;
    } else if (key == "DIMENSION") {
      std::size_t d = 0;
      if (!detail::parse_number(value, d)) throw ParseError(lineno, "malformed DIMENSION");
      dimension = d;
    } else if (key == "TYPE") {
      if (value != "TOUR") throw ParseError(lineno, "not a TOUR file");
    }
  }
  if (!in_tour) throw ParseError(0, "missing TOUR_SECTION");
  if (!terminated) throw ParseError(lineno, "TOUR_SECTION not terminated by -1");
  if (dimension && *dimension != order.size()) throw ParseError(0, "DIMENSION does not match tour length");
  return order;
}

inline std::vector<City> load_tour_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open tour file '" + path + "'");
  return parse_tour_file(in);
}

inline void write_tour_file(std::ostream& out, std::string_view name, const std::vector<City>& order,
                            Cost cost) {
  out << "NAME : " << name << "\nCOMMENT : Length " << cost << "\nTYPE : TOUR\nDIMENSION : " << order.size()
      << "\nTOUR_SECTION\n";
  for (City c : order) out << c + 1 << '\n';
  out << "-1\nEOF\n";
}

/// Registry of known optimal tour lengths, one `name optimum` pair per line;
/// `#` starts a comment.
class OptimaRegistry {
 public:
  static OptimaRegistry parse(std::istream& in) {
    OptimaRegistry reg;
    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
      ++lineno;
      std::string_view line = raw;
      if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
      const auto tok = detail::tokens(line);
      if (tok.empty()) continue;
      Cost value = 0;
      if (tok.size() != 2 || !detail::parse_number(tok[1], value) || value < 0) {
        throw ParseError(lineno, "expected 'name optimum'");
      }
      reg.optima_[std::string(tok[0])] = value;
    }
    return reg;
  }

  static OptimaRegistry load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open optima registry '" + path + "'");
    return parse(in);
  }

  /// Published TSPLIB optima for the instances this project is exercised on.
  static const OptimaRegistry& bundled() {
    static const OptimaRegistry reg = [] {
      std::istringstream in(kBundledOptima);
      return parse(in);
    }();
    return reg;
  }

  std::optional<Cost> find(std::string_view name) const {
    auto it = optima_.find(std::string(name));
    if (it == optima_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t size() const noexcept { return optima_.size(); }

 private:
  static constexpr const char* kBundledOptima =
      "# TSPLIB symmetric instances\n"
      "att48 10628\n"
      "eil51 426\n"
      "berlin52 7542\n"
      "kroA100 21282\n"
      "pcb442 50778\n"
      "att532 27686\n"
      "u724 41910\n"
      "pr1002 259045\n"
      "d1655 62128\n"
      "pr2392 378032\n"
      "pcb3038 137694\n"
      "fnl4461 182566\n"
      "rl5915 565530\n"
      "pla7397 23260728\n"
      "rl11849 923288\n"
      "usa13509 19982859\n"
      "brd14051 469385\n"
      "d15112 1573084\n"
      "d18512 645238\n";

  std::map<std::string, Cost, std::less<>> optima_;
};

inline std::optional<Cost> known_optimum(std::string_view name) { return OptimaRegistry::bundled().find(name); }

}  // namespace pgls
