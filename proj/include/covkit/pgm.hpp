#pragma once

// Netpbm graymap (PGM) reading and writing, plain (P2) and raw (P5).

#include <cctype>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "covkit/error.hpp"

namespace covkit {

struct GrayImage {
  int width = 0;
  int height = 0;
  int maxval = 255;
  std::vector<std::uint16_t> pixels;  // row major, row 0 = top

  std::uint16_t at(int col, int row) const {
    return pixels[static_cast<std::size_t>(row) * static_cast<std::size_t>(width) + static_cast<std::size_t>(col)];
  }
};

namespace detail {

inline void skip_pgm_space(std::istream& in) {
  for (;;) {
    const int c = in.peek();
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else if (c != EOF && std::isspace(c)) {
      in.get();
    } else {
      return;
    }
  }
}

inline int read_pgm_int(std::istream& in, const std::string& path) {
  skip_pgm_space(in);
  int v = -1;
  if (!(in >> v) || v < 0) fail(ErrorCode::Io, "malformed PGM header in " + path);
  return v;
}

}  // namespace detail

inline GrayImage read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open " + path);
  std::string magic(2, '\0');
  in.read(magic.data(), 2);
  if (magic != "P2" && magic != "P5") fail(ErrorCode::Io, path + " is not a P2/P5 PGM file");

  GrayImage img;
  img.width = detail::read_pgm_int(in, path);
  img.height = detail::read_pgm_int(in, path);
  img.maxval = detail::read_pgm_int(in, path);
  if (img.width <= 0 || img.height <= 0 || img.maxval <= 0 || img.maxval > 65535)
    fail(ErrorCode::Io, "invalid PGM dimensions in " + path);
  const std::size_t count = static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height);
  img.pixels.resize(count);

  if (magic == "P2") {
    for (auto& p : img.pixels) {
      const int v = detail::read_pgm_int(in, path);
      if (v > img.maxval) fail(ErrorCode::Io, "PGM sample exceeds maxval in " + path);
      p = static_cast<std::uint16_t>(v);
    }
  } else {
    in.get();  // single whitespace byte before the raster
    const bool wide = img.maxval > 255;
    std::vector<unsigned char> raw(count * (wide ? 2 : 1));
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size()) fail(ErrorCode::Io, "truncated PGM raster in " + path);
    for (std::size_t i = 0; i < count; ++i)
      img.pixels[i] = wide ? static_cast<std::uint16_t>((raw[2 * i] << 8) | raw[2 * i + 1]) : raw[i];
  }
  return img;
}

inline void write_pgm(const std::string& path, const GrayImage& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write " + path);
  out << "P5\n" << img.width << ' ' << img.height << '\n' << img.maxval << '\n';
  for (std::uint16_t p : img.pixels) {
    if (img.maxval > 255) out.put(static_cast<char>(p >> 8));
    out.put(static_cast<char>(p & 0xff));
  }
}

}  // namespace covkit
