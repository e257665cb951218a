#pragma once

#include "lungprep/image.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace lungprep {

// Binary PGM ("P5"). maxval <= 255 decodes to bit depth 8, otherwise 16;
// 16-bit samples are big-endian. Also sniffs PPM and PNG headers so that
// colour inputs are reported as "multi-channel input".
GrayImage decode_image(std::span<const std::uint8_t> bytes);

// "P5\n<w> <h>\n<maxval>\n" + samples, maxval 255 or 65535 by bit depth.
std::vector<std::uint8_t> encode_pgm(const GrayImage& img);

GrayImage load_image(const std::filesystem::path& path);
void save_pgm(const GrayImage& img, const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_file_text(const std::filesystem::path& path, const std::string& text);

}  // namespace lungprep
