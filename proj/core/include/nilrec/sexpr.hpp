#pragma once

#include <string>
#include <utility>
#include <vector>

namespace nilrec {

// Construction tree: `(name :key value ... child ...)`.
struct Provenance {
  std::string name;
  std::vector<std::pair<std::string, std::string>> params;
  std::vector<Provenance> children;
  int line = 0;

  Provenance() = default;
  explicit Provenance(std::string n) : name(std::move(n)) {}

  Provenance& set(const std::string& key, const std::string& value);
  Provenance& add(Provenance child);
  bool has(const std::string& key) const;
  // Throws PreconditionError naming the missing key.
  const std::string& get(const std::string& key) const;

  std::string to_sexpr() const;
  bool operator==(const Provenance& o) const;
};

// Parses one tree; `first_line` offsets diagnostics.
Provenance parse_sexpr(const std::string& text, const std::string& source, int first_line = 1);

}  // namespace nilrec
