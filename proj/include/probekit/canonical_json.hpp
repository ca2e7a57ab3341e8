#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace probekit {

using Json = nlohmann::json;

namespace detail {

inline void append_double(std::string& out, double v) {
  char buf[40];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string_view text(buf, static_cast<std::size_t>(n));
  out += text;
  // keep doubles distinguishable from integers so "-0.0" and "540.0" parse
  // back as doubles
  if (text.find_first_of(".eEn") == std::string_view::npos) out += ".0";
}

inline void write_canonical(std::string& out, const Json& j) {
  switch (j.type()) {
    case Json::value_t::object: {
      out += '{';
      bool first = true;
      for (const auto& [key, value] : j.items()) {  // nlohmann objects iterate in key order
        if (!first) out += ',';
        first = false;
        out += Json(key).dump();
        out += ':';
        write_canonical(out, value);
      }
      out += '}';
      break;
    }
    case Json::value_t::array: {
      out += '[';
      bool first = true;
      for (const auto& value : j) {
        if (!first) out += ',';
        first = false;
        write_canonical(out, value);
      }
      out += ']';
      break;
    }
    case Json::value_t::number_float:
      append_double(out, j.get<double>());
      break;
    default:
      out += j.dump();
  }
}

}  // namespace detail

/// Canonical text: sorted keys, no whitespace, doubles as %.17g.
inline std::string canonical_dump(const Json& j) {
  std::string out;
  detail::write_canonical(out, j);
  return out;
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace probekit
