#pragma once

#include <string>

#include "sibf/wave.hpp"

namespace sibf {

enum class WavBitDepth {
  Pcm16,    // 16-bit signed integer PCM
  Float32,  // 32-bit IEEE float
};

/// Reads a RIFF/WAVE file holding interleaved 16-bit PCM or 32-bit float
/// samples. 16-bit values map to [-1, 1) via v / 32768; float values pass
/// through unchanged. NaN or infinite float samples are rejected.
MultichannelWave read_wav(const std::string& path);

/// Writes `wave` as a RIFF/WAVE file. The 16-bit path clamps samples to
/// [-1, 1 - 2^-15] and rounds to the nearest integer (ties away from zero).
/// The file is written to a temporary name and renamed on success so a
/// failed write never leaves a partial file behind.
void write_wav(const MultichannelWave& wave, const std::string& path,
               WavBitDepth depth = WavBitDepth::Float32);

}  // namespace sibf
