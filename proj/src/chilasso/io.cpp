#include "chilasso/io.hpp"

#include "chilasso/error.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

namespace chl {
namespace {

std::vector<std::uint8_t> slurp(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw_io("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

std::uint32_t le32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

std::uint16_t le16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | p[1] << 8);
}

void put32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

}  // namespace

AudioSignal read_wav(const std::filesystem::path& path) {
  const auto bytes = slurp(path);
  const std::string name = path.string();
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw_format(name + ": not a RIFF/WAVE file");

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const std::uint8_t* data = nullptr;
  std::size_t data_len = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t* chunk = bytes.data() + pos;
    const std::uint32_t len = le32(chunk + 4);
    const std::size_t body = pos + 8;
    const std::size_t avail = std::min<std::size_t>(len, bytes.size() - body);
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (avail < 16) throw_format(name + ": short fmt chunk");
      format = le16(chunk + 8);
      channels = le16(chunk + 10);
      rate = le32(chunk + 12);
      bits = le16(chunk + 22);
      if (format == 0xFFFE && avail >= 26) format = le16(chunk + 8 + 24);
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = chunk + 8;
      data_len = avail;
    }
    pos = body + len + (len & 1u);
  }
  if (format != 1 || bits != 16) throw_format(name + ": only 16-bit PCM is supported");
  if (channels == 0 || rate == 0) throw_format(name + ": invalid fmt chunk");
  if (data == nullptr) throw_format(name + ": missing data chunk");

  const std::size_t frames = data_len / (2u * channels);
  AudioSignal sig;
  sig.sample_rate = rate;
  sig.samples.resize(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    double acc = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      const auto v = static_cast<std::int16_t>(le16(data + 2 * (i * channels + c)));
      acc += static_cast<double>(v) / 32768.0;
    }
    sig.samples[i] = acc / channels;
  }
  return sig;
}

void write_wav(const AudioSignal& sig, const std::filesystem::path& path) {
  sig.validate();
  const auto rate = static_cast<std::uint32_t>(std::lround(sig.sample_rate));
  const auto data_len = static_cast<std::uint32_t>(sig.samples.size() * 2);
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_len);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put32(out, 36 + data_len);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put32(out, 16);
  put16(out, 1);
  put16(out, 1);
  put32(out, rate);
  put32(out, rate * 2);
  put16(out, 2);
  put16(out, 16);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put32(out, data_len);
  for (double s : sig.samples) {
    const double c = std::clamp(s, -1.0, 1.0);
    const auto v = static_cast<std::int16_t>(std::lround(std::clamp(c * 32768.0, -32768.0, 32767.0)));
    put16(out, static_cast<std::uint16_t>(v));
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw_io("cannot open " + path.string() + " for writing");
  f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!f) throw_io("write failed: " + path.string());
}

GrayImage read_pgm(const std::filesystem::path& path) {
  const auto bytes = slurp(path);
  const std::string name = path.string();
  std::size_t pos = 0;
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto number = [&] {
    skip_space();
    long v = 0;
    bool any = false;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      v = v * 10 + (bytes[pos++] - '0');
      any = true;
      if (v > 1'000'000) throw_format(name + ": header value too large");
    }
    if (!any) throw_format(name + ": malformed PGM header");
    return v;
  };
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') throw_format(name + ": not a binary PGM (P5)");
  pos = 2;
  const long w = number();
  const long h = number();
  const long maxval = number();
  if (maxval < 1 || maxval > 255) throw_format(name + ": only 8-bit PGM is supported");
  ++pos;  // single whitespace before raster
  if (bytes.size() - std::min(pos, bytes.size()) < static_cast<std::size_t>(w * h))
    throw_format(name + ": truncated raster");
  GrayImage img;
  img.pixels.resize(h, w);
  for (long r = 0; r < h; ++r)
    for (long c = 0; c < w; ++c)
      img.pixels(r, c) = bytes[pos + static_cast<std::size_t>(r * w + c)] * (255.0 / maxval);
  img.provenance = name;
  return img;
}

void write_pgm(const GrayImage& img, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw_io("cannot open " + path.string() + " for writing");
  f << "P5\n" << img.pixels.cols() << ' ' << img.pixels.rows() << "\n255\n";
  std::vector<char> raster(static_cast<std::size_t>(img.pixels.size()));
  std::size_t i = 0;
  for (Index r = 0; r < img.pixels.rows(); ++r)
    for (Index c = 0; c < img.pixels.cols(); ++c)
      raster[i++] = static_cast<char>(static_cast<unsigned char>(
          std::lround(std::clamp(img.pixels(r, c), 0.0, 255.0))));
  f.write(raster.data(), static_cast<std::streamsize>(raster.size()));
  if (!f) throw_io("write failed: " + path.string());
}

GrayImage read_png(const std::filesystem::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  const std::string name = path.string();
  if (png_image_begin_read_from_file(&image, name.c_str()) == 0)
    throw_format(name + ": " + image.message);
  image.format = PNG_FORMAT_GRAY;
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
  if (png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr) == 0) {
    png_image_free(&image);
    throw_format(name + ": " + image.message);
  }
  GrayImage img;
  img.pixels.resize(image.height, image.width);
  for (png_uint_32 r = 0; r < image.height; ++r)
    for (png_uint_32 c = 0; c < image.width; ++c)
      img.pixels(r, c) = buffer[r * image.width + c];
  img.provenance = name;
  return img;
}

GrayImage read_image(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  if (ext == ".png") return read_png(path);
  return read_pgm(path);
}

}  // namespace chl
