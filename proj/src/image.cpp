#include "linesfm/image.hpp"

#include <bit>
#include <cctype>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

namespace linesfm {
namespace {

// Reads the next whitespace-delimited header token, skipping '#' comments.
std::string NextToken(std::istream& in) {
  std::string token;
  while (in) {
    const int c = in.peek();
    if (c == '#') {
      std::string comment;
      std::getline(in, comment);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      break;
    }
  }
  in >> token;
  return token;
}

}  // namespace

GrayImage ReadPgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Throw(ErrorCode::kIoError, "cannot open " + path.string());
  if (NextToken(in) != "P5") Throw(ErrorCode::kIoError, path.string() + " is not a binary PGM");
  const int width = std::stoi(NextToken(in));
  const int height = std::stoi(NextToken(in));
  const int maxval = std::stoi(NextToken(in));
  if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 255) {
    Throw(ErrorCode::kIoError, path.string() + ": unsupported PGM header");
  }
  in.get();
  GrayImage image(width, height);
  in.read(reinterpret_cast<char*>(image.data.data()), static_cast<std::streamsize>(image.data.size()));
  if (!in) Throw(ErrorCode::kIoError, path.string() + ": truncated PGM data");
  return image;
}

void WritePgm(const std::filesystem::path& path, const GrayImage& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) Throw(ErrorCode::kIoError, "cannot write " + path.string());
  out << "P5\n" << image.width << " " << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.data.data()), static_cast<std::streamsize>(image.data.size()));
}

FloatImage ReadPfm(const std::filesystem::path& path) {
  static_assert(std::endian::native == std::endian::little, "PFM I/O assumes a little-endian host");
  std::ifstream in(path, std::ios::binary);
  if (!in) Throw(ErrorCode::kIoError, "cannot open " + path.string());
  if (NextToken(in) != "Pf") Throw(ErrorCode::kIoError, path.string() + " is not a grayscale PFM");
  const int width = std::stoi(NextToken(in));
  const int height = std::stoi(NextToken(in));
  const double scale = std::stod(NextToken(in));
  if (scale >= 0) Throw(ErrorCode::kIoError, path.string() + ": big-endian PFM not supported");
  in.get();
  FloatImage image(width, height);
  for (int y = height - 1; y >= 0; --y) {
    in.read(reinterpret_cast<char*>(&image.at(0, y)), static_cast<std::streamsize>(sizeof(float) * width));
  }
  if (!in) Throw(ErrorCode::kIoError, path.string() + ": truncated PFM data");
  return image;
}

void WritePfm(const std::filesystem::path& path, const FloatImage& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) Throw(ErrorCode::kIoError, "cannot write " + path.string());
  out << "Pf\n" << image.width << " " << image.height << "\n-1.0\n";
  for (int y = image.height - 1; y >= 0; --y) {
    out.write(reinterpret_cast<const char*>(&image.at(0, y)), static_cast<std::streamsize>(sizeof(float) * image.width));
  }
}

}  // namespace linesfm
