#include "toml_lite.hpp"

#include <cctype>
#include <sstream>
#include <vector>

#include "errors.hpp"

namespace tvlab {

namespace {

using nlohmann::json;

[[noreturn]] void fail(int line, const std::string& what) {
  throw ConfigError("toml line " + std::to_string(line) + ": " + what);
}

struct Cursor {
  const std::string& s;
  std::size_t i = 0;
  int line;

  bool done() const { return i >= s.size(); }
  char peek() const { return s[i]; }
  void skip_ws() {
    while (!done() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\n' || s[i] == '\r')) ++i;
  }
};

json parse_value(Cursor& c);

json parse_string(Cursor& c) {
  ++c.i;  // opening quote
  std::string out;
  while (!c.done() && c.peek() != '"') {
    char ch = c.s[c.i++];
    if (ch == '\\') {
      if (c.done()) fail(c.line, "unterminated escape");
      char esc = c.s[c.i++];
      switch (esc) {
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        case 'r': out += '\r'; break;
        default: fail(c.line, std::string("unsupported escape \\") + esc);
      }
    } else {
      out += ch;
    }
  }
  if (c.done()) fail(c.line, "unterminated string");
  ++c.i;  // closing quote
  return json(out);
}

json parse_array(Cursor& c) {
  ++c.i;  // '['
  json arr = json::array();
  c.skip_ws();
  if (!c.done() && c.peek() == ']') {
    ++c.i;
    return arr;
  }
  for (;;) {
    c.skip_ws();
    arr.push_back(parse_value(c));
    c.skip_ws();
    if (c.done()) fail(c.line, "unterminated array");
    char ch = c.s[c.i++];
    if (ch == ']') return arr;
    if (ch != ',') fail(c.line, "expected ',' or ']' in array");
    c.skip_ws();
    if (!c.done() && c.peek() == ']') {  // trailing comma
      ++c.i;
      return arr;
    }
  }
}

json parse_scalar(Cursor& c) {
  std::size_t start = c.i;
  while (!c.done() && c.s[c.i] != ',' && c.s[c.i] != ']' && c.s[c.i] != '\n' &&
         c.s[c.i] != '#')
    ++c.i;
  std::string tok = c.s.substr(start, c.i - start);
  while (!tok.empty() && (tok.back() == ' ' || tok.back() == '\t' || tok.back() == '\r'))
    tok.pop_back();
  if (tok.empty()) fail(c.line, "empty value");
  if (tok == "true") return json(true);
  if (tok == "false") return json(false);

  bool looks_float = tok.find('.') != std::string::npos ||
                     tok.find('e') != std::string::npos || tok.find('E') != std::string::npos;
  try {
    std::size_t used = 0;
    if (looks_float) {
      double v = std::stod(tok, &used);
      if (used != tok.size()) fail(c.line, "bad number: " + tok);
      return json(v);
    }
    long long v = std::stoll(tok, &used);
    if (used != tok.size()) fail(c.line, "bad number: " + tok);
    return json(v);
  } catch (const std::exception&) {
    fail(c.line, "unrecognized value: " + tok);
  }
}

json parse_value(Cursor& c) {
  c.skip_ws();
  if (c.done()) fail(c.line, "missing value");
  char ch = c.peek();
  if (ch == '"') return parse_string(c);
  if (ch == '[') return parse_array(c);
  return parse_scalar(c);
}

// strip a comment that is not inside a string
std::string strip_comment(const std::string& line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char ch = line[i];
    if (ch == '"' && (i == 0 || line[i - 1] != '\\')) in_string = !in_string;
    if (ch == '#' && !in_string) return line.substr(0, i);
  }
  return line;
}

bool blank(const std::string& s) {
  for (char ch : s)
    if (!std::isspace(static_cast<unsigned char>(ch))) return false;
  return true;
}

json* descend(json& root, const std::string& dotted, int line) {
  json* node = &root;
  std::stringstream ss(dotted);
  std::string part;
  while (std::getline(ss, part, '.')) {
    if (part.empty()) fail(line, "empty table name component");
    node = &(*node)[part];
    if (!node->is_object() && !node->is_null()) fail(line, "table collides with a value");
    if (node->is_null()) *node = json::object();
  }
  return node;
}

}  // namespace

json parse_toml_lite(const std::string& text) {
  json root = json::object();
  json* table = &root;

  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = strip_comment(raw);
    if (blank(line)) continue;

    std::size_t first = line.find_first_not_of(" \t\r");
    if (line[first] == '[') {
      std::size_t close = line.find(']', first);
      if (close == std::string::npos) fail(line_no, "unterminated table header");
      std::string name = line.substr(first + 1, close - first - 1);
      if (!blank(line.substr(close + 1))) fail(line_no, "trailing text after table header");
      table = descend(root, name, line_no);
      continue;
    }

    std::size_t eq = line.find('=');
    if (eq == std::string::npos) fail(line_no, "expected key = value");
    std::string key = line.substr(first, eq - first);
    while (!key.empty() && (key.back() == ' ' || key.back() == '\t')) key.pop_back();
    if (key.empty()) fail(line_no, "empty key");

    std::string value_text = line.substr(eq + 1);
    // arrays may continue over following lines until brackets balance
    auto bracket_depth = [](const std::string& s) {
      int depth = 0;
      bool in_string = false;
      for (std::size_t i = 0; i < s.size(); ++i) {
        char ch = s[i];
        if (ch == '"' && (i == 0 || s[i - 1] != '\\')) in_string = !in_string;
        if (in_string) continue;
        if (ch == '[') ++depth;
        if (ch == ']') --depth;
      }
      return depth;
    };
    int depth = bracket_depth(value_text);
    while (depth > 0 && std::getline(in, raw)) {
      ++line_no;
      std::string more = strip_comment(raw);
      value_text += "\n" + more;
      depth += bracket_depth(more);
    }
    if (depth > 0) fail(line_no, "unterminated array");

    Cursor cursor{value_text, 0, line_no};
    json value = parse_value(cursor);
    cursor.skip_ws();
    if (!cursor.done()) fail(line_no, "trailing text after value");
    (*table)[key] = std::move(value);
  }
  return root;
}

}  // namespace tvlab
