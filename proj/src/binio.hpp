#pragma once

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <type_traits>

#include "cimsim/errors.hpp"

namespace cimsim::binio {

template <typename T>
void put(std::ostream& os, T v) {
  static_assert(std::is_integral_v<T>);
  using U = std::make_unsigned_t<T>;
  auto u = static_cast<U>(v);
  for (std::size_t i = 0; i < sizeof(T); ++i) os.put(static_cast<char>((u >> (8 * i)) & 0xff));
}

inline void put_f32(std::ostream& os, float f) {
  std::uint32_t u;
  static_assert(sizeof u == sizeof f);
  std::memcpy(&u, &f, sizeof u);
  put(os, u);
}

template <typename T>
T get(std::istream& is, const std::string& what) {
  static_assert(std::is_integral_v<T>);
  using U = std::make_unsigned_t<T>;
  U u = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    const int c = is.get();
    if (c == std::char_traits<char>::eof()) throw LoadError("truncated " + what);
    u |= static_cast<U>(static_cast<U>(c & 0xff) << (8 * i));
  }
  return static_cast<T>(u);
}

inline float get_f32(std::istream& is, const std::string& what) {
  const auto u = get<std::uint32_t>(is, what);
  float f;
  std::memcpy(&f, &u, sizeof f);
  return f;
}

}  // namespace cimsim::binio
