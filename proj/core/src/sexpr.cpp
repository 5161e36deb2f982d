#include "nilrec/sexpr.hpp"

#include <cctype>

#include "nilrec/error.hpp"

namespace nilrec {

Provenance& Provenance::set(const std::string& key, const std::string& value) {
  for (auto& kv : params)
    if (kv.first == key) {
      kv.second = value;
      return *this;
    }
  params.emplace_back(key, value);
  return *this;
}

Provenance& Provenance::add(Provenance child) {
  children.push_back(std::move(child));
  return *this;
}

bool Provenance::has(const std::string& key) const {
  for (const auto& kv : params)
    if (kv.first == key) return true;
  return false;
}

const std::string& Provenance::get(const std::string& key) const {
  for (const auto& kv : params)
    if (kv.first == key) return kv.second;
  throw PreconditionError("'" + name + "' is missing parameter :" + key);
}

namespace {

bool bare_atom(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s)
    if (std::isspace(static_cast<unsigned char>(c)) || c == '(' || c == ')' || c == '"' || c == ';' ||
        c == ':')
      return false;
  return true;
}

std::string quote(const std::string& s) {
  if (bare_atom(s)) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') q += '\\';
    q += c;
  }
  return q + "\"";
}

}  // namespace

std::string Provenance::to_sexpr() const {
  std::string s = "(" + name;
  for (const auto& [k, v] : params) s += " :" + k + " " + quote(v);
  for (const auto& c : children) s += " " + c.to_sexpr();
  return s + ")";
}

bool Provenance::operator==(const Provenance& o) const {
  return name == o.name && params == o.params && children == o.children;
}

namespace {

class Reader {
 public:
  Reader(const std::string& t, const std::string& src, int line) : t_(t), src_(src), line_(line) {}

  Provenance read_tree() {
    skip();
    Provenance p = list();
    skip();
    if (pos_ != t_.size()) fail("trailing text after the tree");
    return p;
  }

 private:
  [[noreturn]] void fail(const std::string& why) { throw ParseError(src_, line_, why); }

  void skip() {
    while (pos_ < t_.size()) {
      char c = t_[pos_];
      if (c == '\n') {
        ++line_;
        ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else if (c == ';' || c == '#') {
        while (pos_ < t_.size() && t_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::string atom() {
    skip();
    if (pos_ >= t_.size()) fail("unexpected end of input");
    if (t_[pos_] == '"') {
      ++pos_;
      std::string s;
      while (pos_ < t_.size() && t_[pos_] != '"') {
        if (t_[pos_] == '\\' && pos_ + 1 < t_.size()) ++pos_;
        if (t_[pos_] == '\n') ++line_;
        s += t_[pos_++];
      }
      if (pos_ >= t_.size()) fail("unterminated string");
      ++pos_;
      return s;
    }
    std::size_t start = pos_;
    while (pos_ < t_.size() && !std::isspace(static_cast<unsigned char>(t_[pos_])) && t_[pos_] != '(' &&
           t_[pos_] != ')' && t_[pos_] != '"')
      ++pos_;
    if (start == pos_) fail("expected a value");
    return t_.substr(start, pos_ - start);
  }

  Provenance list() {
    skip();
    if (pos_ >= t_.size() || t_[pos_] != '(') fail("expected '('");
    ++pos_;
    Provenance p;
    p.line = line_;
    p.name = atom();
    if (p.name.empty() || p.name[0] == ':') fail("node name expected after '('");
    for (;;) {
      skip();
      if (pos_ >= t_.size()) fail("missing ')'");
      char c = t_[pos_];
      if (c == ')') {
        ++pos_;
        return p;
      }
      if (c == '(') {
        p.children.push_back(list());
        continue;
      }
      std::string key = atom();
      if (key.size() < 2 || key[0] != ':') fail("expected :key or child node, got '" + key + "'");
      skip();
      if (pos_ < t_.size() && (t_[pos_] == ')' || t_[pos_] == '(')) fail("missing value for " + key);
      p.params.emplace_back(key.substr(1), atom());
    }
  }

  const std::string& t_;
  const std::string& src_;
  int line_;
  std::size_t pos_ = 0;
};

}  // namespace

Provenance parse_sexpr(const std::string& text, const std::string& source, int first_line) {
  return Reader(text, source, first_line).read_tree();
}

}  // namespace nilrec
