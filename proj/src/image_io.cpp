#include "dtn/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>

namespace dtn {

namespace {

// Reads the next whitespace-delimited header integer, skipping # comments.
std::size_t header_int(std::istream& in, const std::string& where) {
  int c = in.peek();
  while (c != EOF) {
    if (std::isspace(c)) {
      in.get();
    } else if (c == '#') {
      std::string skip;
      std::getline(in, skip);
    } else {
      break;
    }
    c = in.peek();
  }
  std::size_t v = 0;
  if (!(in >> v)) throw std::runtime_error(where + ": malformed netpbm header");
  return v;
}

}  // namespace

GrayImage read_netpbm(const std::filesystem::path& path) {
  const std::string where = path.string();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(where + ": cannot open image");
  char magic[2] = {0, 0};
  in.read(magic, 2);
  if (!in || magic[0] != 'P' || std::string("2356").find(magic[1]) == std::string::npos) {
    throw std::runtime_error(where + ": not a PGM/PPM image");
  }
  const bool rgb = magic[1] == '3' || magic[1] == '6';
  const bool binary = magic[1] == '5' || magic[1] == '6';
  GrayImage img;
  img.width = header_int(in, where);
  img.height = header_int(in, where);
  const std::size_t maxval = header_int(in, where);
  if (img.width == 0 || img.height == 0 || maxval == 0 || maxval > 65535) {
    throw std::runtime_error(where + ": invalid image dimensions or maxval");
  }
  in.get();  // single whitespace before raster
  const std::size_t channels = rgb ? 3 : 1;
  const std::size_t count = img.width * img.height * channels;
  std::vector<double> raw(count);
  if (binary) {
    const std::size_t bytes = maxval < 256 ? 1 : 2;
    std::vector<unsigned char> buf(count * bytes);
    if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()))) {
      throw std::runtime_error(where + ": truncated raster");
    }
    for (std::size_t i = 0; i < count; ++i) {
      raw[i] = bytes == 1 ? buf[i] : static_cast<double>((buf[2 * i] << 8) | buf[2 * i + 1]);
    }
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      std::size_t v = 0;
      if (!(in >> v)) throw std::runtime_error(where + ": truncated raster");
      raw[i] = static_cast<double>(v);
    }
  }
  const double scale = 1.0 / static_cast<double>(maxval);
  img.pixels.resize(img.width * img.height);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    double v = rgb ? 0.299 * raw[3 * i] + 0.587 * raw[3 * i + 1] + 0.114 * raw[3 * i + 2] : raw[i];
    img.pixels[i] = std::clamp(v * scale, 0.0, 1.0);
  }
  return img;
}

void write_pgm(const std::filesystem::path& path, std::size_t width, std::size_t height,
               std::span<const std::uint8_t> pixels) {
  if (pixels.size() != width * height) throw std::invalid_argument("pixel count does not match size");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
  out << "P5\n" << width << ' ' << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
  if (!out) throw std::runtime_error(path.string() + ": write failed");
}

std::vector<double> center_crop_resize(const GrayImage& image, std::size_t side) {
  if (side == 0) throw std::invalid_argument("target side must be positive");
  const std::size_t crop = std::min(image.width, image.height);
  const std::size_t x0 = (image.width - crop) / 2;
  const std::size_t y0 = (image.height - crop) / 2;
  const double scale = static_cast<double>(crop) / static_cast<double>(side);
  auto at = [&](std::size_t x, std::size_t y) { return image.pixels[(y0 + y) * image.width + x0 + x]; };
  auto source_coord = [&](std::size_t d, std::size_t& lo, std::size_t& hi, double& frac) {
    double s = (static_cast<double>(d) + 0.5) * scale - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(crop - 1));
    lo = static_cast<std::size_t>(std::floor(s));
    hi = std::min(lo + 1, crop - 1);
    frac = s - static_cast<double>(lo);
  };
  std::vector<double> out(side * side);
  for (std::size_t y = 0; y < side; ++y) {
    std::size_t ylo, yhi;
    double fy;
    source_coord(y, ylo, yhi, fy);
    for (std::size_t x = 0; x < side; ++x) {
      std::size_t xlo, xhi;
      double fx;
      source_coord(x, xlo, xhi, fx);
      const double top = at(xlo, ylo) * (1.0 - fx) + at(xhi, ylo) * fx;
      const double bottom = at(xlo, yhi) * (1.0 - fx) + at(xhi, yhi) * fx;
      out[y * side + x] = top * (1.0 - fy) + bottom * fy;
    }
  }
  return out;
}

}  // namespace dtn
