#include "config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace relent::config {

Reader::Reader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
  if (!node_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
}

bool Reader::has(const std::string& key) const { return node_.contains(key) && !node_.at(key).is_null(); }

std::string Reader::field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

double Reader::positive(const std::string& key, double fallback) {
  const double v = get_or<double>(key, fallback);
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(field(key), "must be a positive number");
  return v;
}

std::vector<double> Reader::values(const std::string& key) {
  if (!has(key)) throw ConfigError(field(key), "missing required field");
  seen_.insert(key);
  const json& v = node_.at(key);
  std::vector<double> out;
  if (v.is_array()) {
    for (const auto& x : v) {
      if (!x.is_number()) throw ConfigError(field(key), "expected numbers");
      out.push_back(x.get<double>());
    }
  } else if (v.is_object()) {
    Reader r(v, field(key));
    const double start = r.get<double>("start");
    const double stop = r.get<double>("stop");
    const int count = r.get<int>("count");
    r.finish();
    if (count < 1) throw ConfigError(field(key) + ".count", "must be >= 1");
    for (int i = 0; i < count; ++i) out.push_back(count == 1 ? start : start + (stop - start) * i / (count - 1));
  } else {
    throw ConfigError(field(key), "expected a list or {start, stop, count}");
  }
  if (out.empty()) throw ConfigError(field(key), "empty value list");
  return out;
}

Reader Reader::child(const std::string& key) {
  if (!has(key)) throw ConfigError(field(key), "missing required field");
  seen_.insert(key);
  return Reader(node_.at(key), field(key));
}

std::vector<Reader> Reader::children(const std::string& key) {
  seen_.insert(key);
  std::vector<Reader> out;
  if (!has(key)) return out;
  const json& v = node_.at(key);
  if (!v.is_array()) throw ConfigError(field(key), "expected a list");
  for (std::size_t i = 0; i < v.size(); ++i) out.emplace_back(v[i], field(key) + "[" + std::to_string(i) + "]");
  return out;
}

const json& Reader::raw(const std::string& key) {
  if (!has(key)) throw ConfigError(field(key), "missing required field");
  seen_.insert(key);
  return node_.at(key);
}

linalg::CMatrix Reader::matrix(const std::string& key) { return parse_matrix(raw(key), field(key)); }

void Reader::finish() const {
  for (const auto& item : node_.items()) {
    if (!seen_.count(item.key())) throw ConfigError(field(item.key()), "unknown field");
  }
}

json load(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("config", "cannot open " + file);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config", std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("<root>", "expected an object");
  if (!doc.contains("schema")) throw ConfigError("schema", "missing required field");
  if (!doc["schema"].is_string() || doc["schema"].get<std::string>() != kSchema) {
    throw ConfigError("schema", std::string("unsupported schema, expected \"") + kSchema + "\"");
  }
  return doc;
}

namespace {

linalg::RMatrix parse_real(const json& node, const std::string& field) {
  if (!node.is_array() || node.empty()) throw ConfigError(field, "expected a non-empty list of rows");
  const auto rows = static_cast<Eigen::Index>(node.size());
  Eigen::Index cols = -1;
  linalg::RMatrix m;
  for (Eigen::Index i = 0; i < rows; ++i) {
    const json& row = node[i];
    if (!row.is_array()) throw ConfigError(field, "rows must be lists");
    if (cols < 0) {
      cols = static_cast<Eigen::Index>(row.size());
      m.resize(rows, cols);
    }
    if (static_cast<Eigen::Index>(row.size()) != cols) throw ConfigError(field, "ragged rows");
    for (Eigen::Index j = 0; j < cols; ++j) {
      if (!row[j].is_number()) throw ConfigError(field, "entries must be numbers");
      m(i, j) = row[j].get<double>();
    }
  }
  return m;
}

}  // namespace

linalg::CMatrix parse_matrix(const json& node, const std::string& field) {
  if (node.is_array()) return parse_real(node, field).cast<linalg::Complex>();
  Reader r(node, field);
  const linalg::RMatrix re = parse_real(r.raw("re"), field + ".re");
  linalg::RMatrix im = linalg::RMatrix::Zero(re.rows(), re.cols());
  if (r.has("im")) im = parse_real(r.raw("im"), field + ".im");
  r.finish();
  if (im.rows() != re.rows() || im.cols() != re.cols()) throw ConfigError(field, "re and im shapes differ");
  linalg::CMatrix m(re.rows(), re.cols());
  m.real() = re;
  m.imag() = im;
  return m;
}

}  // namespace relent::config
