#pragma once

#include <nlohmann/json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <string_view>

#include "softlfd/errors.hpp"
#include "softlfd/geometry.hpp"

namespace softlfd::json_io {

using nlohmann::json;

inline json read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError("'" + path.string() + "': " + e.what());
  }
}

inline void write_file(const std::filesystem::path& path, const json& doc, int indent = -1) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << doc.dump(indent) << '\n';
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

inline const json& require_object(const json& j, std::string_view what) {
  if (!j.is_object()) throw ParseError(std::string(what) + " must be a JSON object");
  return j;
}

/// Rejects any key of `j` not in `allowed`.
inline void reject_unknown_keys(const json& j, std::initializer_list<std::string_view> allowed,
                                std::string_view what) {
  for (const auto& item : j.items()) {
    bool known = false;
    for (auto key : allowed) known = known || item.key() == key;
    if (!known) {
      throw ParseError("unknown field '" + item.key() + "' in " + std::string(what));
    }
  }
}

inline const json& require_key(const json& j, const std::string& key, std::string_view what) {
  auto it = j.find(key);
  if (it == j.end()) throw ParseError("missing field '" + key + "' in " + std::string(what));
  return *it;
}

inline double as_number(const json& j, std::string_view what) {
  if (!j.is_number()) throw ParseError(std::string(what) + " must be a number");
  return j.get<double>();
}

template <int N>
Eigen::Matrix<double, N, 1> as_vector(const json& j, std::string_view what) {
  if (!j.is_array() || j.size() != static_cast<std::size_t>(N)) {
    std::ostringstream os;
    os << what << " must be an array of " << N << " numbers";
    throw ParseError(os.str());
  }
  Eigen::Matrix<double, N, 1> v;
  for (int i = 0; i < N; ++i) v[i] = as_number(j[static_cast<std::size_t>(i)], what);
  return v;
}

template <typename Derived>
json to_json(const Eigen::MatrixBase<Derived>& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

}  // namespace softlfd::json_io
