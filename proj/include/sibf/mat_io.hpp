#pragma once

#include <string>

#include <Eigen/Dense>

namespace sibf {

// Nonnegative magnitude data, frequency bins x frames. Serialized layout:
//   magic "SIBFMAT1" (8 bytes) | F: u32 LE | T: u32 LE | F*T x f32 LE
// frequency-major, i.e. row f stores frames t = 0..T-1 contiguously.

/// Reads a SIBFMAT file. Rejects bad magic, header/payload size mismatches,
/// and negative or non-finite values.
Eigen::MatrixXd read_matrix(const std::string& path);

/// Writes `m` in SIBFMAT format, the bit-exact inverse of read_matrix for
/// float-representable values. Writes via a temporary file plus rename.
void write_matrix(const Eigen::MatrixXd& m, const std::string& path);

}  // namespace sibf
