#pragma once

// Flat key/value experiment configs with TOML-style [sections].
//
//   name = "paper-fig1-3"     # strings are double-quoted
//   T = 4000                  # numbers
//   [mip]
//   b = [1, 2]                # one-line arrays
//   [hybrid]
//   g = [[0.15]]              # one-line nested arrays for matrices
//
// Keys are addressed as "section.key" ("key" at top level).

#include <cctype>
#include <cstddef>
#include <cstdlib>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "hqa/error.hpp"

namespace hqa {

using ConfigValue =
    std::variant<double, bool, std::string, std::vector<double>, std::vector<std::vector<double>>>;

class ConfigDocument {
 public:
  struct Entry {
    ConfigValue value;
    std::size_t line = 0;
  };

  static ConfigDocument parse(std::string_view text) {
    ConfigDocument doc;
    std::string section;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      const std::size_t end = std::min(text.find('\n', pos), text.size());
      std::string line(text.substr(pos, end - pos));
      pos = end + 1;
      ++line_no;

      line = trim(strip_comment(line));
      if (line.empty()) {
        if (end == text.size()) break;
        continue;
      }
      if (line.front() == '[' && line.find('=') == std::string::npos) {
        if (line.back() != ']') throw config_error("unterminated section header", line_no, line);
        section = trim(line.substr(1, line.size() - 2));
        if (!valid_key(section)) throw config_error("invalid section name", line_no, section);
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw config_error("expected 'key = value'", line_no, line);
      const std::string key = trim(line.substr(0, eq));
      if (!valid_key(key)) throw config_error("invalid key", line_no, key);
      const std::string full = section.empty() ? key : section + "." + key;
      if (doc.entries_.count(full)) throw config_error("duplicate key", line_no, full);
      doc.entries_[full] = Entry{parse_value(trim(line.substr(eq + 1)), line_no, full), line_no};
      if (end == text.size()) break;
    }
    return doc;
  }

  bool has(const std::string& key) const { return entries_.count(key) != 0; }

  double number(const std::string& key) const { return as<double>(key, "a number"); }
  bool boolean(const std::string& key) const { return as<bool>(key, "true or false"); }
  std::string string(const std::string& key) const { return as<std::string>(key, "a quoted string"); }

  std::vector<double> vector(const std::string& key) const {
    const Entry& e = lookup(key);
    if (const auto* v = std::get_if<std::vector<double>>(&e.value)) return *v;
    if (const auto* m = std::get_if<std::vector<std::vector<double>>>(&e.value); m && m->empty())
      return {};
    throw config_error("expected an array of numbers", e.line, key);
  }

  std::vector<std::vector<double>> matrix(const std::string& key) const {
    const Entry& e = lookup(key);
    if (const auto* m = std::get_if<std::vector<std::vector<double>>>(&e.value)) return *m;
    if (const auto* v = std::get_if<std::vector<double>>(&e.value); v && v->empty()) return {};
    throw config_error("expected a nested array of numbers", e.line, key);
  }

  std::size_t count(const std::string& key) const {
    const double v = number(key);
    if (v < 0.0 || v != static_cast<double>(static_cast<std::size_t>(v)))
      throw config_error("expected a non-negative integer", lookup(key).line, key);
    return static_cast<std::size_t>(v);
  }

  std::size_t line_of(const std::string& key) const { return has(key) ? lookup(key).line : 0; }

  /// Throws on the first key not listed in `known`.
  void reject_unknown(const std::set<std::string>& known) const {
    for (const auto& [key, entry] : entries_)
      if (!known.count(key)) throw config_error("unknown key", entry.line, key);
  }

  const std::map<std::string, Entry>& entries() const noexcept { return entries_; }

 private:
  const Entry& lookup(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) throw config_error("missing required key", 0, key);
    return it->second;
  }

  template <class T>
  T as(const std::string& key, const char* what) const {
    const Entry& e = lookup(key);
    if (const auto* v = std::get_if<T>(&e.value)) return *v;
    throw config_error(std::string("expected ") + what, e.line, key);
  }

  static std::string strip_comment(const std::string& s) {
    bool quoted = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] == '"') quoted = !quoted;
      if (s[i] == '#' && !quoted) return s.substr(0, i);
    }
    return s;
  }

  static std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
  }

  static bool valid_key(const std::string& k) {
    if (k.empty()) return false;
    for (char ch : k)
      if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '_' && ch != '-') return false;
    return true;
  }

  static double parse_number(const std::string& s, std::size_t line, const std::string& key) {
    const std::string t = trim(s);
    if (t.empty()) throw config_error("expected a number", line, key);
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size()) throw config_error("malformed number '" + t + "'", line, key);
    return v;
  }

  // Split "a, b, [c, d]" at top-level commas.
  static std::vector<std::string> split_items(const std::string& body, std::size_t line,
                                              const std::string& key) {
    std::vector<std::string> items;
    int depth = 0;
    std::string cur;
    for (char ch : body) {
      if (ch == '[') ++depth;
      if (ch == ']') --depth;
      if (depth < 0) throw config_error("unbalanced brackets", line, key);
      if (ch == ',' && depth == 0) {
        items.push_back(trim(cur));
        cur.clear();
      } else {
        cur += ch;
      }
    }
    if (depth != 0) throw config_error("unbalanced brackets", line, key);
    if (!trim(cur).empty()) items.push_back(trim(cur));
    for (const auto& it : items)
      if (it.empty()) throw config_error("empty array element", line, key);
    return items;
  }

  static ConfigValue parse_value(const std::string& v, std::size_t line, const std::string& key) {
    if (v.empty()) throw config_error("missing value", line, key);
    if (v.front() == '"') {
      if (v.size() < 2 || v.back() != '"') throw config_error("unterminated string", line, key);
      return v.substr(1, v.size() - 2);
    }
    if (v == "true") return true;
    if (v == "false") return false;
    if (v.front() == '[') {
      if (v.back() != ']') throw config_error("unterminated array (arrays must fit on one line)", line, key);
      const auto items = split_items(v.substr(1, v.size() - 2), line, key);
      const bool nested = !items.empty() && items.front().front() == '[';
      if (!nested) {
        std::vector<double> out;
        for (const auto& it : items) out.push_back(parse_number(it, line, key));
        return out;
      }
      std::vector<std::vector<double>> rows;
      for (const auto& it : items) {
        if (it.front() != '[' || it.back() != ']')
          throw config_error("mixed scalars and rows in nested array", line, key);
        std::vector<double> row;
        for (const auto& x : split_items(it.substr(1, it.size() - 2), line, key))
          row.push_back(parse_number(x, line, key));
        rows.push_back(std::move(row));
      }
      return rows;
    }
    return parse_number(v, line, key);
  }

  std::map<std::string, Entry> entries_;
};

}  // namespace hqa
