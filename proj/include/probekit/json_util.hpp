#pragma once

#include <stdexcept>
#include <string>

#include "probekit/canonical_json.hpp"
#include "probekit/error.hpp"
#include "probekit/math.hpp"

namespace probekit {

/// Shape error inside a document; parsers translate it into the Error code
/// that fits the document kind.
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace json_util {

inline const Json& field(const Json& obj, const char* key) {
  if (!obj.is_object()) throw FormatError(std::string("expected an object holding '") + key + "'");
  auto it = obj.find(key);
  if (it == obj.end()) throw FormatError(std::string("missing field '") + key + "'");
  return *it;
}

inline double number(const Json& j, const char* what) {
  if (!j.is_number()) throw FormatError(std::string(what) + " must be a number");
  return j.get<double>();
}

inline double number_field(const Json& obj, const char* key) { return number(field(obj, key), key); }

inline double number_or(const Json& obj, const char* key, double fallback) {
  auto it = obj.find(key);
  return it == obj.end() ? fallback : number(*it, key);
}

inline std::uint64_t unsigned_field(const Json& obj, const char* key) {
  const Json& j = field(obj, key);
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<std::int64_t>() >= 0))
    throw FormatError(std::string(key) + " must be a non-negative integer");
  return j.get<std::uint64_t>();
}

inline std::string string_field(const Json& obj, const char* key) {
  const Json& j = field(obj, key);
  if (!j.is_string()) throw FormatError(std::string(key) + " must be a string");
  return j.get<std::string>();
}

inline bool bool_field(const Json& obj, const char* key) {
  const Json& j = field(obj, key);
  if (!j.is_boolean()) throw FormatError(std::string(key) + " must be a boolean");
  return j.get<bool>();
}

inline Vec3 vec3(const Json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) throw FormatError(std::string(what) + " must be an array of 3 numbers");
  return {number(j[0], what), number(j[1], what), number(j[2], what)};
}

inline Vec3 vec3_field(const Json& obj, const char* key) { return vec3(field(obj, key), key); }

/// Quaternions travel as [w, x, y, z].
inline Quat quat(const Json& j, const char* what) {
  if (!j.is_array() || j.size() != 4) throw FormatError(std::string(what) + " must be an array [w,x,y,z]");
  return {number(j[0], what), number(j[1], what), number(j[2], what), number(j[3], what)};
}

inline Json to_json(const Vec3& v) { return Json::array({v.x, v.y, v.z}); }
inline Json to_json(const Quat& q) { return Json::array({q.w, q.x, q.y, q.z}); }

}  // namespace json_util
}  // namespace probekit
