// m2c/checkpoint.hpp

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

#ifndef M2C_CHECKPOINT_HPP_
#define M2C_CHECKPOINT_HPP_

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "m2c/tensor.hpp"

namespace m2c {

/// Flat versioned map of name -> (tensor | string | int | real), stored in
/// a little-endian binary file. Doubles are written raw, so a save/load
/// round trip is value-exact.
class Checkpoint {
 public:
  enum Kind : std::uint8_t { kTensor = 0, kString = 1, kInt = 2, kReal = 3 };

  static constexpr char kMagic[5] = "M2CK";
  static constexpr std::uint32_t kVersion = 1;

  void put_values(const std::string& name, std::vector<double> data,
                  Shape dims) {
    M2C_CHECK(shape_numel(dims) == data.size(), "checkpoint entry '", name,
              "': shape mismatch");
    Entry e;
    e.kind = kTensor;
    e.dims = std::move(dims);
    e.data = std::move(data);
    insert(name, std::move(e));
  }

  void put_tensor(const std::string& name, const Tensor& t) {
    put_values(name, t.value(), t.shape());
  }

  void put_string(const std::string& name, std::string s) {
    Entry e;
    e.kind = kString;
    e.str = std::move(s);
    insert(name, std::move(e));
  }

  void put_int(const std::string& name, std::int64_t v) {
    Entry e;
    e.kind = kInt;
    e.i = v;
    insert(name, std::move(e));
  }

  void put_real(const std::string& name, double v) {
    Entry e;
    e.kind = kReal;
    e.f = v;
    insert(name, std::move(e));
  }

  bool has(const std::string& name) const { return index_.count(name) > 0; }

  const std::vector<double>& get_values(const std::string& name) const {
    return entry(name, kTensor).data;
  }

  const Shape& get_dims(const std::string& name) const {
    return entry(name, kTensor).dims;
  }

  Tensor get_tensor(const std::string& name, bool requires_grad = false) const {
    const Entry& e = entry(name, kTensor);
    return Tensor::from(e.data, e.dims, requires_grad);
  }

  const std::string& get_string(const std::string& name) const {
    return entry(name, kString).str;
  }

  std::int64_t get_int(const std::string& name) const {
    return entry(name, kInt).i;
  }

  double get_real(const std::string& name) const {
    return entry(name, kReal).f;
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) out.push_back(e.name);
    return out;
  }

  /// Copies every parameter value into the map under `prefix + name`.
  void put_params(const std::string& prefix, const ParamList& params) {
    for (const auto& p : params) put_tensor(prefix + p.name, p.tensor);
  }

  /// Writes stored values back into existing parameter tensors in place,
  /// checking shapes. The handles are copies; they share the underlying
  /// nodes with the caller's models.
  void load_params(const std::string& prefix, ParamList params) const {
    for (auto& p : params) {
      const Entry& e = entry(prefix + p.name, kTensor);
      M2C_CHECK(e.dims == p.tensor.shape(), "checkpoint entry '",
                prefix + p.name, "': shape ", shape_str(e.dims),
                " does not match parameter ", shape_str(p.tensor.shape()));
      p.tensor.value() = e.data;
    }
  }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    M2C_CHECK(out.good(), "cannot write checkpoint: ", path);
    out.write(kMagic, 4);
    write_u32(out, kVersion);
    write_u64(out, entries_.size());
    for (const auto& e : entries_) {
      out.put(static_cast<char>(e.kind));
      write_u32(out, static_cast<std::uint32_t>(e.name.size()));
      out.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
      switch (e.kind) {
        case kTensor: {
          write_u32(out, static_cast<std::uint32_t>(e.dims.size()));
          for (std::size_t d : e.dims) write_u64(out, d);
          out.write(reinterpret_cast<const char*>(e.data.data()),
                    static_cast<std::streamsize>(e.data.size() * 8));
          break;
        }
        case kString:
          write_u64(out, e.str.size());
          out.write(e.str.data(), static_cast<std::streamsize>(e.str.size()));
          break;
        case kInt:
          write_u64(out, static_cast<std::uint64_t>(e.i));
          break;
        case kReal: {
          std::uint64_t bits;
          std::memcpy(&bits, &e.f, 8);
          write_u64(out, bits);
          break;
        }
      }
    }
    M2C_CHECK(out.good(), "short checkpoint write: ", path);
  }

  static Checkpoint load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    M2C_CHECK(in.good(), "cannot open checkpoint: ", path);
    char magic[4];
    in.read(magic, 4);
    M2C_CHECK(in.good() && std::memcmp(magic, kMagic, 4) == 0, path,
              ": not a checkpoint file");
    std::uint32_t version = read_u32(in, path);
    M2C_CHECK(version == kVersion, path, ": unsupported version ", version);
    std::uint64_t count = read_u64(in, path);
    Checkpoint ck;
    for (std::uint64_t k = 0; k < count; ++k) {
      int kind = in.get();
      M2C_CHECK(kind >= 0 && kind <= kReal, path, ": bad entry kind");
      std::uint32_t name_len = read_u32(in, path);
      std::string name(name_len, '\0');
      in.read(name.data(), name_len);
      Entry e;
      e.kind = static_cast<Kind>(kind);
      switch (e.kind) {
        case kTensor: {
          std::uint32_t ndim = read_u32(in, path);
          e.dims.resize(ndim);
          for (auto& d : e.dims)
            d = static_cast<std::size_t>(read_u64(in, path));
          e.data.resize(shape_numel(e.dims));
          in.read(reinterpret_cast<char*>(e.data.data()),
                  static_cast<std::streamsize>(e.data.size() * 8));
          break;
        }
        case kString: {
          std::uint64_t len = read_u64(in, path);
          e.str.resize(len);
          in.read(e.str.data(), static_cast<std::streamsize>(len));
          break;
        }
        case kInt:
          e.i = static_cast<std::int64_t>(read_u64(in, path));
          break;
        case kReal: {
          std::uint64_t bits = read_u64(in, path);
          std::memcpy(&e.f, &bits, 8);
          break;
        }
      }
      M2C_CHECK(in.good(), path, ": truncated checkpoint");
      ck.insert(name, std::move(e));
    }
    return ck;
  }

 private:
  struct Entry {
    std::string name;
    Kind kind = kTensor;
    Shape dims;
    std::vector<double> data;
    std::string str;
    std::int64_t i = 0;
    double f = 0;
  };

  void insert(const std::string& name, Entry e) {
    e.name = name;
    auto it = index_.find(name);
    if (it != index_.end()) {
      entries_[it->second] = std::move(e);
    } else {
      index_[name] = entries_.size();
      entries_.push_back(std::move(e));
    }
  }

  const Entry& entry(const std::string& name, Kind kind) const {
    auto it = index_.find(name);
    M2C_CHECK(it != index_.end(), "checkpoint entry not found: ", name);
    const Entry& e = entries_[it->second];
    M2C_CHECK(e.kind == kind, "checkpoint entry '", name, "' has kind ",
              static_cast<int>(e.kind), ", wanted ", static_cast<int>(kind));
    return e;
  }

  static void write_u32(std::ofstream& out, std::uint32_t v) {
    char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                 static_cast<char>((v >> 16) & 0xff),
                 static_cast<char>((v >> 24) & 0xff)};
    out.write(b, 4);
  }
  static void write_u64(std::ofstream& out, std::uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(b, 8);
  }
  static std::uint32_t read_u32(std::ifstream& in, const std::string& path) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    M2C_CHECK(in.good(), path, ": truncated checkpoint");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) |
           (static_cast<std::uint32_t>(b[3]) << 24);
  }
  static std::uint64_t read_u64(std::ifstream& in, const std::string& path) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    M2C_CHECK(in.good(), path, ": truncated checkpoint");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
  }

  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace m2c

#endif  // M2C_CHECKPOINT_HPP_
