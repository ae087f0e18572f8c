#pragma once

#include <filesystem>
#include <fstream>

#include "mofo/common.hpp"
#include "mofo/flow.hpp"

namespace mofo {

// Middlebury .flo: float 202021.25 magic, i32 width, i32 height, then
// row-major interleaved (u, v) float32 pairs. Little-endian throughout.
inline constexpr float kFloMagic = 202021.25f;

inline void write_flo(const FlowField& field, std::ostream& os) {
  detail::put_f32le(os, kFloMagic);
  detail::put_u32le(os, static_cast<std::uint32_t>(field.width));
  detail::put_u32le(os, static_cast<std::uint32_t>(field.height));
  for (std::size_t i = 0; i < field.size(); ++i) {
    detail::put_f32le(os, field.u[i]);
    detail::put_f32le(os, field.v[i]);
  }
}

inline void write_flo(const FlowField& field, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_flo(field, os);
}

inline FlowField read_flo(std::istream& is, const std::string& name = "<stream>") {
  float magic = 0.0f;
  if (!detail::get_f32le(is, magic)) throw FormatError(name + ": truncated .flo magic", 0);
  if (magic != kFloMagic) throw FormatError(name + ": bad .flo magic", 0);
  std::uint32_t w = 0, h = 0;
  if (!detail::get_u32le(is, w)) throw FormatError(name + ": truncated .flo width", 4);
  if (!detail::get_u32le(is, h)) throw FormatError(name + ": truncated .flo height", 8);
  if (w == 0 || h == 0 || w > (1u << 20) || h > (1u << 20))
    throw FormatError(name + ": implausible .flo dimensions", 4);
  FlowField f(static_cast<int>(w), static_cast<int>(h));
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (!detail::get_f32le(is, f.u[i]) || !detail::get_f32le(is, f.v[i]))
      throw FormatError(name + ": truncated .flo payload", 12 + 8 * i);
  }
  return f;
}

inline FlowField read_flo(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  return read_flo(is, path.filename().string());
}

}  // namespace mofo
