#pragma once

// Strict JSON config reading: every lookup is recorded so that leftover keys
// can be rejected, and type errors name the offending field.

#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "relent/error.hpp"
#include "relent/linalg.hpp"

namespace relent::config {

using nlohmann::json;

inline constexpr const char* kSchema = "relent/v1";

class Reader {
 public:
  Reader(const json& node, std::string path);

  bool has(const std::string& key) const;
  const std::string& path() const { return path_; }
  std::string field(const std::string& key) const;

  template <class T>
  T get(const std::string& key) {
    if (!has(key)) throw ConfigError(field(key), "missing required field");
    return convert<T>(key);
  }

  template <class T>
  T get_or(const std::string& key, T fallback) {
    if (!has(key)) {
      seen_.insert(key);
      return fallback;
    }
    return convert<T>(key);
  }

  double positive(const std::string& key, double fallback);
  std::vector<double> values(const std::string& key);
  Reader child(const std::string& key);
  std::vector<Reader> children(const std::string& key);
  const json& raw(const std::string& key);
  linalg::CMatrix matrix(const std::string& key);

  /// Throws ConfigError naming the first key that was never read.
  void finish() const;

 private:
  template <class T>
  T convert(const std::string& key) {
    seen_.insert(key);
    try {
      return node_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(field(key), "wrong type");
    }
  }

  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

/// Parses a file, checks the schema field and returns the document.
json load(const std::string& file);

/// {"re": [[...]], "im": [[...]]} or a plain real [[...]].
linalg::CMatrix parse_matrix(const json& node, const std::string& field);

}  // namespace relent::config
