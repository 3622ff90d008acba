#pragma once

#include "chilasso/audio.hpp"
#include "chilasso/texture.hpp"

#include <filesystem>

namespace chl {

// RIFF/WAVE, PCM 16-bit (plain or extensible header). Multi-channel audio is
// averaged to mono.
AudioSignal read_wav(const std::filesystem::path& path);

// Mono PCM 16-bit; samples are clamped to [-1, 1].
void write_wav(const AudioSignal& sig, const std::filesystem::path& path);

// Binary PGM (P5), maxval <= 255.
GrayImage read_pgm(const std::filesystem::path& path);

// Pixels are rounded and clamped to [0, 255] on export only.
void write_pgm(const GrayImage& img, const std::filesystem::path& path);

// 8-bit grayscale PNG (colour input is converted to gray by libpng).
GrayImage read_png(const std::filesystem::path& path);

// Dispatches on extension: .pgm or .png.
GrayImage read_image(const std::filesystem::path& path);

}  // namespace chl
