#include "bregflow/io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <vector>

#ifdef BREGFLOW_HAS_PNG
#include <png.h>
#endif

namespace bregflow {

static_assert(std::endian::native == std::endian::little,
              "flo/image IO assumes a little-endian host");

namespace {

constexpr float kFloMagic = 202021.25f;
constexpr int kMaxDim = 99999;

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileError("cannot open file: " + path);
  return in;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FileError("cannot open file for writing: " + path);
  return out;
}

bool has_suffix(const std::string& s, const std::string& suffix) {
  if (s.size() < suffix.size()) return false;
  std::string tail = s.substr(s.size() - suffix.size());
  std::transform(tail.begin(), tail.end(), tail.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return tail == suffix;
}

}  // namespace

FlowField read_flo(const std::string& path) {
  std::ifstream in = open_input(path);

  float magic = 0.0f;
  std::int32_t w = 0, h = 0;
  in.read(reinterpret_cast<char*>(&magic), sizeof(magic));
  if (!in) throw FormatError(FormatError::Kind::Truncated, path + ": truncated flo header");
  if (magic != kFloMagic)
    throw FormatError(FormatError::Kind::Magic, path + ": bad flo magic value");
  in.read(reinterpret_cast<char*>(&w), sizeof(w));
  in.read(reinterpret_cast<char*>(&h), sizeof(h));
  if (!in) throw FormatError(FormatError::Kind::Truncated, path + ": truncated flo header");
  if (w <= 0 || h <= 0 || w > kMaxDim || h > kMaxDim)
    throw FormatError(FormatError::Kind::Dimensions, path + ": implausible flo dimensions");

  FlowField flow(w, h);
  std::vector<float> row(static_cast<std::size_t>(w) * 2);
  for (int y = 0; y < h; ++y) {
    in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size() * 4));
    if (!in) throw FormatError(FormatError::Kind::Truncated, path + ": truncated flo data");
    for (int x = 0; x < w; ++x) {
      flow.u.at(x, y) = row[2 * x];
      flow.v.at(x, y) = row[2 * x + 1];
    }
  }
  return flow;
}

void write_flo(const FlowField& flow, const std::string& path) {
  if (flow.width() <= 0 || flow.height() <= 0)
    throw std::invalid_argument("write_flo: empty flow field");
  std::ofstream out = open_output(path);

  const float magic = kFloMagic;
  const std::int32_t w = flow.width(), h = flow.height();
  out.write(reinterpret_cast<const char*>(&magic), sizeof(magic));
  out.write(reinterpret_cast<const char*>(&w), sizeof(w));
  out.write(reinterpret_cast<const char*>(&h), sizeof(h));
  std::vector<float> row(static_cast<std::size_t>(w) * 2);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      row[2 * x] = static_cast<float>(flow.u.at(x, y));
      row[2 * x + 1] = static_cast<float>(flow.v.at(x, y));
    }
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size() * 4));
  }
  if (!out) throw FileError("write failed: " + path);
}

namespace {

int pnm_next_int(std::istream& in, const std::string& path) {
  // Skips whitespace and '#' comments between header tokens.
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (!std::isspace(c)) {
      break;
    }
    c = in.get();
  }
  if (c == EOF || !std::isdigit(c))
    throw FormatError(FormatError::Kind::Truncated, path + ": malformed pnm header");
  int value = 0;
  while (c != EOF && std::isdigit(c)) {
    value = value * 10 + (c - '0');
    if (value > 100000000)
      throw FormatError(FormatError::Kind::Dimensions, path + ": implausible pnm header value");
    c = in.get();
  }
  if (c != EOF) in.unget();
  return value;
}

Image read_pnm(const std::string& path) {
  std::ifstream in = open_input(path);
  char m0 = 0, m1 = 0;
  in.get(m0);
  in.get(m1);
  if (!in || m0 != 'P' || (m1 != '5' && m1 != '6'))
    throw FormatError(FormatError::Kind::Magic, path + ": not a binary PGM/PPM file");
  const bool color = (m1 == '6');

  const int w = pnm_next_int(in, path);
  const int h = pnm_next_int(in, path);
  const int maxval = pnm_next_int(in, path);
  if (w <= 0 || h <= 0 || w > kMaxDim || h > kMaxDim)
    throw FormatError(FormatError::Kind::Dimensions, path + ": implausible pnm dimensions");
  if (maxval <= 0 || maxval > 255)
    throw FormatError(FormatError::Kind::Unsupported, path + ": only 8-bit pnm supported");
  in.get();  // single whitespace after maxval

  const std::size_t samples = static_cast<std::size_t>(w) * h * (color ? 3 : 1);
  std::vector<std::uint8_t> raw(samples);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(samples));
  if (static_cast<std::size_t>(in.gcount()) != samples)
    throw FormatError(FormatError::Kind::Truncated, path + ": truncated pnm data");

  const double scale = 255.0 / maxval;
  Image img(w, h);
  for (std::size_t i = 0; i < img.size(); ++i) {
    if (color) {
      img.data[i] = scale * (0.299 * raw[3 * i] + 0.587 * raw[3 * i + 1] + 0.114 * raw[3 * i + 2]);
    } else {
      img.data[i] = scale * raw[i];
    }
  }
  return img;
}

#ifdef BREGFLOW_HAS_PNG

Image read_png_file(const std::string& path) {
  std::FILE* fp = std::fopen(path.c_str(), "rb");
  if (!fp) throw FileError("cannot open file: " + path);

  png_byte header[8];
  if (std::fread(header, 1, 8, fp) != 8 || png_sig_cmp(header, 0, 8)) {
    std::fclose(fp);
    throw FormatError(FormatError::Kind::Magic, path + ": not a PNG file");
  }

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw FormatError(FormatError::Kind::Truncated, path + ": PNG decode failed");
  }
  png_init_io(png, fp);
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_palette_to_rgb(png);
  png_set_expand_gray_1_2_4_to_8(png);
  png_read_update_info(png, info);

  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  const int channels = png_get_channels(png, info);

  std::vector<std::uint8_t> raw(static_cast<std::size_t>(w) * h * channels);
  std::vector<png_bytep> rows(h);
  for (int y = 0; y < h; ++y) rows[y] = raw.data() + static_cast<std::size_t>(y) * w * channels;
  png_read_image(png, rows.data());
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(fp);

  Image img(w, h);
  for (std::size_t i = 0; i < img.size(); ++i) {
    if (channels >= 3) {
      img.data[i] =
          0.299 * raw[channels * i] + 0.587 * raw[channels * i + 1] + 0.114 * raw[channels * i + 2];
    } else {
      img.data[i] = raw[channels * i];
    }
  }
  return img;
}

void write_png_file(const RgbImage& img, const std::string& path) {
  std::FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw FileError("cannot open file for writing: " + path);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw FileError("PNG encode failed: " + path);
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, img.width, img.height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_bytep> rows(img.height);
  for (int y = 0; y < img.height; ++y)
    rows[y] = const_cast<png_bytep>(img.data.data() + static_cast<std::size_t>(y) * img.width * 3);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

#endif  // BREGFLOW_HAS_PNG

}  // namespace

bool png_supported() {
#ifdef BREGFLOW_HAS_PNG
  return true;
#else
  return false;
#endif
}

Image read_image(const std::string& path) {
  if (has_suffix(path, ".png")) {
#ifdef BREGFLOW_HAS_PNG
    return read_png_file(path);
#else
    throw FormatError(FormatError::Kind::Unsupported,
                      path + ": PNG support not built in (use PGM/PPM)");
#endif
  }
  return read_pnm(path);
}

void write_image(const Image& img, const std::string& path) {
  if (img.width <= 0 || img.height <= 0) throw std::invalid_argument("write_image: empty image");
  std::ofstream out = open_output(path);
  out << "P5\n" << img.width << " " << img.height << "\n255\n";
  std::vector<std::uint8_t> raw(img.size());
  for (std::size_t i = 0; i < img.size(); ++i)
    raw[i] = static_cast<std::uint8_t>(std::clamp(std::lround(img.data[i]), 0L, 255L));
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) throw FileError("write failed: " + path);
}

void write_image(const RgbImage& img, const std::string& path) {
  if (img.width <= 0 || img.height <= 0) throw std::invalid_argument("write_image: empty image");
  if (has_suffix(path, ".png")) {
#ifdef BREGFLOW_HAS_PNG
    write_png_file(img, path);
    return;
#else
    throw FormatError(FormatError::Kind::Unsupported,
                      path + ": PNG support not built in (use PPM)");
#endif
  }
  std::ofstream out = open_output(path);
  out << "P6\n" << img.width << " " << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.data.data()),
            static_cast<std::streamsize>(img.data.size()));
  if (!out) throw FileError("write failed: " + path);
}

}  // namespace bregflow
