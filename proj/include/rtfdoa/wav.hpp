#pragma once

#include <filesystem>

#include "rtfdoa/stft.hpp"

namespace rtfdoa {

enum class WavSampleFormat { Pcm16, Float32 };

/// Reads RIFF/WAVE with 16-bit PCM or 32-bit IEEE float samples (plain or extensible header).
/// Samples are scaled to [-1, 1) for PCM. Throws ConfigError on malformed or unsupported files.
AudioClip read_wav(const std::filesystem::path& path);

void write_wav(const std::filesystem::path& path, const AudioClip& clip,
               WavSampleFormat format = WavSampleFormat::Float32);

}  // namespace rtfdoa
