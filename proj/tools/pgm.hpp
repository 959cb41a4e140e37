#pragma once

#include <gfista/image_ops.hpp>

#include <string>

namespace gfista {

/// Read a portable graymap ("P2" ASCII or "P5" binary, maxval <= 65535;
/// 16-bit samples are big-endian). Values are scaled to [0, 1] by maxval.
/// Comment lines starting with '#' are skipped. Malformed input raises an
/// io_error naming the byte offset.
ScalarField load_pgm(const std::string& path);

/// Write a binary "P5" graymap. Values are clamped to [0, 1] and quantized
/// by round-half-up to maxval steps; maxval must be 255 or 65535.
void save_pgm(const ScalarField& field, const std::string& path, int maxval);

}  // namespace gfista
