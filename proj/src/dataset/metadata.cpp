#include "gns/dataset/metadata.hpp"

#include <array>
#include <fstream>
#include <sstream>
#include <string>

#include "gns/errors.hpp"

namespace gns {

namespace {

constexpr std::array kKnownKeys{"bounds", "sequence_length", "default_connectivity_radius",
                                "dim",    "dt",              "vel_mean",
                                "vel_std", "acc_mean",       "acc_std"};

const nlohmann::json& required(const nlohmann::json& doc, const char* key) {
  auto it = doc.find(key);
  if (it == doc.end()) throw ParseError(std::string("metadata: missing required key \"") + key + "\"");
  return *it;
}

std::vector<double> number_list(const nlohmann::json& doc, const char* key) {
  const nlohmann::json& v = required(doc, key);
  if (!v.is_array()) throw ParseError(std::string("metadata: \"") + key + "\" must be an array");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) {
      throw ParseError(std::string("metadata: \"") + key + "\" must contain only numbers");
    }
    out.push_back(x.get<double>());
  }
  return out;
}

double number(const nlohmann::json& doc, const char* key) {
  const nlohmann::json& v = required(doc, key);
  if (!v.is_number()) throw ParseError(std::string("metadata: \"") + key + "\" must be a number");
  return v.get<double>();
}

std::size_t count(const nlohmann::json& doc, const char* key) {
  const nlohmann::json& v = required(doc, key);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw ParseError(std::string("metadata: \"") + key + "\" must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

void check_length(const std::vector<double>& v, std::size_t dim, const char* key) {
  if (v.size() != dim) {
    throw ParseError(std::string("metadata: \"") + key + "\" has " + std::to_string(v.size()) +
                     " entries, expected dim = " + std::to_string(dim));
  }
}

void check_positive(const std::vector<double>& v, const char* key) {
  for (double x : v) {
    if (!(x > 0.0)) throw ParseError(std::string("metadata: \"") + key + "\" must be positive");
  }
}

}  // namespace

void Metadata::validate() const {
  if (dim != 2 && dim != 3) {
    throw ParseError("metadata: \"dim\" must be 2 or 3, got " + std::to_string(dim));
  }
  if (bounds.size() != dim) {
    throw ParseError("metadata: \"bounds\" has " + std::to_string(bounds.size()) +
                     " entries, expected dim = " + std::to_string(dim));
  }
  for (const auto& [low, high] : bounds) {
    if (!(low < high)) throw ParseError("metadata: \"bounds\" needs low < high in every dimension");
  }
  if (!(default_connectivity_radius > 0.0)) {
    throw ParseError("metadata: \"default_connectivity_radius\" must be positive");
  }
  if (!(dt > 0.0)) throw ParseError("metadata: \"dt\" must be positive");
  check_length(stats.vel_mean, dim, "vel_mean");
  check_length(stats.vel_std, dim, "vel_std");
  check_length(stats.acc_mean, dim, "acc_mean");
  check_length(stats.acc_std, dim, "acc_std");
  check_positive(stats.vel_std, "vel_std");
  check_positive(stats.acc_std, "acc_std");
}

Metadata parse_metadata(std::string_view json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("metadata: malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("metadata: top level must be a JSON object");

  Metadata m;
  const nlohmann::json& bounds = required(doc, "bounds");
  if (!bounds.is_array()) throw ParseError("metadata: \"bounds\" must be an array");
  for (const auto& pair : bounds) {
    if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number() || !pair[1].is_number()) {
      throw ParseError("metadata: \"bounds\" entries must be [low, high] number pairs");
    }
    m.bounds.emplace_back(pair[0].get<double>(), pair[1].get<double>());
  }
  m.sequence_length = count(doc, "sequence_length");
  m.default_connectivity_radius = number(doc, "default_connectivity_radius");
  m.dim = count(doc, "dim");
  m.dt = number(doc, "dt");
  m.stats.vel_mean = number_list(doc, "vel_mean");
  m.stats.vel_std = number_list(doc, "vel_std");
  m.stats.acc_mean = number_list(doc, "acc_mean");
  m.stats.acc_std = number_list(doc, "acc_std");
  for (const auto& [key, value] : doc.items()) {
    bool known = false;
    for (const char* k : kKnownKeys) known = known || key == k;
    if (!known) m.extra[key] = value;
  }
  m.validate();
  return m;
}

Metadata read_metadata(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("metadata: cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_metadata(buffer.str());
}

nlohmann::json to_json(const Metadata& meta) {
  nlohmann::json doc = meta.extra.is_object() ? meta.extra : nlohmann::json::object();
  nlohmann::json bounds = nlohmann::json::array();
  for (const auto& [low, high] : meta.bounds) bounds.push_back({low, high});
  doc["bounds"] = bounds;
  doc["sequence_length"] = meta.sequence_length;
  doc["default_connectivity_radius"] = meta.default_connectivity_radius;
  doc["dim"] = meta.dim;
  doc["dt"] = meta.dt;
  doc["vel_mean"] = meta.stats.vel_mean;
  doc["vel_std"] = meta.stats.vel_std;
  doc["acc_mean"] = meta.stats.acc_mean;
  doc["acc_std"] = meta.stats.acc_std;
  return doc;
}

void write_metadata(const std::filesystem::path& path, const Metadata& meta) {
  std::ofstream out(path);
  if (!out) throw IoError("metadata: cannot write " + path.string());
  out << to_json(meta).dump(2) << '\n';
  if (!out) throw IoError("metadata: write failed for " + path.string());
}

}  // namespace gns
