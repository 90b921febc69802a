#pragma once

#include <stdexcept>
#include <string>

#include "bregflow/evaluation.hpp"
#include "bregflow/image.hpp"

namespace bregflow {

class FormatError : public std::runtime_error {
 public:
  enum class Kind { Magic, Dimensions, Truncated, Unsupported };

  FormatError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

class FileError : public std::runtime_error {
 public:
  explicit FileError(const std::string& what) : std::runtime_error(what) {}
};

// Middlebury .flo: float magic 202021.25 ("PIEH"), int32 width/height,
// interleaved (u, v) float32 samples, row-major, little-endian.
FlowField read_flo(const std::string& path);
void write_flo(const FlowField& flow, const std::string& path);

// Binary PGM (P5) and PPM (P6), maxval <= 255; color inputs are converted to
// luminance with weights (0.299, 0.587, 0.114). PNG is supported when built
// against libpng. Sample values are stored as floats in [0, 255].
Image read_image(const std::string& path);
void write_image(const Image& img, const std::string& path);      // P5
void write_image(const RgbImage& img, const std::string& path);   // P6 (or PNG by extension)

bool png_supported();

}  // namespace bregflow
