// m2c/wav.hpp

// Copyright 2026  m2c authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef M2C_WAV_HPP_
#define M2C_WAV_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "m2c/common.hpp"

namespace m2c {

struct Waveform {
  std::vector<double> samples;  // in [-1, 1]
  int sample_rate = 16000;

  double duration_seconds() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

namespace wav_detail {

inline std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline void put_u32(std::string& s, std::uint32_t v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>((v >> 8) & 0xff));
  s.push_back(static_cast<char>((v >> 16) & 0xff));
  s.push_back(static_cast<char>((v >> 24) & 0xff));
}

inline void put_u16(std::string& s, std::uint16_t v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>((v >> 8) & 0xff));
}

}  // namespace wav_detail

/// Reads a mono PCM WAV file. Integer samples are scaled to [-1, 1];
/// the sample rate comes from the header. Multi-channel, compressed and
/// truncated files are rejected with a diagnostic naming the file.
inline Waveform load_waveform(const std::string& path) {
  using namespace wav_detail;
  std::ifstream in(path, std::ios::binary);
  M2C_CHECK(in.good(), "cannot open wav file: ", path);
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  const unsigned char* p = reinterpret_cast<const unsigned char*>(bytes.data());
  M2C_CHECK(bytes.size() >= 44 && std::memcmp(p, "RIFF", 4) == 0 &&
                std::memcmp(p + 8, "WAVE", 4) == 0,
            path, ": not a RIFF/WAVE file");

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  Waveform w;

  std::size_t off = 12;
  while (off + 8 <= bytes.size()) {
    const unsigned char* chunk = p + off;
    std::uint32_t chunk_size = read_u32(chunk + 4);
    std::size_t body = off + 8;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      M2C_CHECK(chunk_size >= 16 && body + 16 <= bytes.size(), path,
                ": malformed fmt chunk");
      format = read_u16(chunk + 8);
      channels = read_u16(chunk + 10);
      rate = read_u32(chunk + 12);
      bits = read_u16(chunk + 22);
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      M2C_CHECK(have_fmt, path, ": data chunk before fmt chunk");
      M2C_CHECK(format == 1, path, ": compressed audio (format tag ", format,
                ") not supported, PCM only");
      M2C_CHECK(channels == 1, path, ": expected mono, got ", channels,
                " channels");
      M2C_CHECK(bits == 8 || bits == 16 || bits == 24 || bits == 32, path,
                ": unsupported bit depth ", bits);
      M2C_CHECK(body + chunk_size <= bytes.size(), path,
                ": truncated data chunk (header claims ", chunk_size,
                " bytes)");
      std::size_t bytes_per = bits / 8;
      M2C_CHECK(chunk_size % bytes_per == 0, path, ": ragged data chunk");
      std::size_t n = chunk_size / bytes_per;
      w.samples.resize(n);
      const unsigned char* d = chunk + 8;
      for (std::size_t i = 0; i < n; ++i) {
        const unsigned char* s = d + i * bytes_per;
        double v = 0.0;
        switch (bits) {
          case 8:
            v = (static_cast<int>(s[0]) - 128) / 128.0;
            break;
          case 16: {
            std::int16_t x = static_cast<std::int16_t>(s[0] | (s[1] << 8));
            v = x / 32768.0;
            break;
          }
          case 24: {
            std::int32_t x = s[0] | (s[1] << 8) | (s[2] << 16);
            if (x & 0x800000) x |= ~0xffffff;
            v = x / 8388608.0;
            break;
          }
          case 32: {
            std::int32_t x;
            std::memcpy(&x, s, 4);
            v = x / 2147483648.0;
            break;
          }
        }
        w.samples[i] = v;
      }
      w.sample_rate = static_cast<int>(rate);
      M2C_CHECK(w.sample_rate > 0, path, ": zero sample rate");
      return w;
    }
    off = body + chunk_size + (chunk_size & 1);  // chunks are word-aligned
  }
  throw Error(detail::concat_msg(path, ": no data chunk found"));
}

/// Writes 16-bit mono PCM. Samples are clamped to [-1, 1].
inline void save_waveform(const std::string& path, const Waveform& w) {
  using namespace wav_detail;
  std::string out;
  std::uint32_t data_size = static_cast<std::uint32_t>(w.samples.size() * 2);
  out.reserve(44 + data_size);
  out += "RIFF";
  put_u32(out, 36 + data_size);
  out += "WAVEfmt ";
  put_u32(out, 16);
  put_u16(out, 1);  // PCM
  put_u16(out, 1);  // mono
  put_u32(out, static_cast<std::uint32_t>(w.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(w.sample_rate * 2));
  put_u16(out, 2);
  put_u16(out, 16);
  out += "data";
  put_u32(out, data_size);
  for (double v : w.samples) {
    double c = std::clamp(v, -1.0, 1.0);
    std::int16_t s = static_cast<std::int16_t>(std::lround(c * 32767.0));
    put_u16(out, static_cast<std::uint16_t>(s));
  }
  std::ofstream f(path, std::ios::binary);
  M2C_CHECK(f.good(), "cannot write wav file: ", path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  M2C_CHECK(f.good(), "short write: ", path);
}

}  // namespace m2c

#endif  // M2C_WAV_HPP_
