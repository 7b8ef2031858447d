#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace dtn {

/// Grayscale image with intensities in [0, 1], row-major.
struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> pixels;
};

/// Decodes binary or ASCII netpbm (P2/P5 grayscale, P3/P6 RGB). RGB is
/// converted with Rec. 601 luma weights. Throws std::runtime_error.
GrayImage read_netpbm(const std::filesystem::path& path);

/// Writes an 8-bit binary PGM (P5).
void write_pgm(const std::filesystem::path& path, std::size_t width, std::size_t height,
               std::span<const std::uint8_t> pixels);

/// Center-crops to a square and resamples bilinearly (pixel-center
/// alignment) to side x side.
std::vector<double> center_crop_resize(const GrayImage& image, std::size_t side);

}  // namespace dtn
