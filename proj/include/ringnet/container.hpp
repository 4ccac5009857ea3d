#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "ringnet/dense_array.hpp"
#include "ringnet/error.hpp"

namespace ringnet {

using Json = nlohmann::json;

enum class Dtype { kF32, kF64, kI32 };

inline const char* dtype_name(Dtype d) {
  switch (d) {
    case Dtype::kF32: return "f32";
    case Dtype::kF64: return "f64";
    case Dtype::kI32: return "i32";
  }
  return "?";
}

inline std::size_t dtype_size(Dtype d) { return d == Dtype::kF64 ? 8 : 4; }

inline Dtype parse_dtype(const std::string& s) {
  if (s == "f32") return Dtype::kF32;
  if (s == "f64") return Dtype::kF64;
  if (s == "i32") return Dtype::kI32;
  throw FormatError("unknown element type '" + s + "'");
}

/// Manifest + little-endian blob. The manifest is JSON; the payload sits next
/// to it with the extension replaced by ".bin".
struct Container {
  struct Array {
    std::string name;
    Dtype dtype = Dtype::kF64;
    Shape shape;
    std::vector<std::uint8_t> bytes;
  };

  std::string format;
  int version = 1;
  Json meta = Json::object();
  std::vector<Array> arrays;

  const Array& find(const std::string& name) const {
    for (const Array& a : arrays)
      if (a.name == name) return a;
    throw FormatError(format + ": missing array '" + name + "'");
  }
  bool has(const std::string& name) const {
    for (const Array& a : arrays)
      if (a.name == name) return true;
    return false;
  }

  template <class T, class Src>
  static std::vector<std::uint8_t> encode(const Src* src, std::size_t n) {
    std::vector<std::uint8_t> out(n * sizeof(T));
    for (std::size_t i = 0; i < n; ++i) {
      const T v = static_cast<T>(src[i]);
      std::uint8_t raw[sizeof(T)];
      std::memcpy(raw, &v, sizeof(T));
      if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
      std::memcpy(out.data() + i * sizeof(T), raw, sizeof(T));
    }
    return out;
  }

  template <class T>
  static T decode_one(const std::uint8_t* p) {
    std::uint8_t raw[sizeof(T)];
    std::memcpy(raw, p, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
    T v;
    std::memcpy(&v, raw, sizeof(T));
    return v;
  }

  void add(const std::string& name, const DenseArray& a, Dtype dtype) {
    Array e{name, dtype, a.shape(), {}};
    switch (dtype) {
      case Dtype::kF32: e.bytes = encode<float>(a.data(), a.size()); break;
      case Dtype::kF64: e.bytes = encode<double>(a.data(), a.size()); break;
      case Dtype::kI32: e.bytes = encode<std::int32_t>(a.data(), a.size()); break;
    }
    arrays.push_back(std::move(e));
  }

  void add_ints(const std::string& name, const std::vector<std::int64_t>& v, Shape shape) {
    if (shape_size(shape) != v.size()) throw DimensionError("Container: shape does not match the value count");
    arrays.push_back({name, Dtype::kI32, std::move(shape), encode<std::int32_t>(v.data(), v.size())});
  }

  DenseArray get(const std::string& name) const {
    const Array& a = find(name);
    DenseArray out(a.shape);
    const std::size_t n = out.size(), w = dtype_size(a.dtype);
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint8_t* p = a.bytes.data() + i * w;
      switch (a.dtype) {
        case Dtype::kF32: out[i] = decode_one<float>(p); break;
        case Dtype::kF64: out[i] = decode_one<double>(p); break;
        case Dtype::kI32: out[i] = decode_one<std::int32_t>(p); break;
      }
    }
    return out;
  }

  std::vector<std::int64_t> get_ints(const std::string& name) const {
    const Array& a = find(name);
    if (a.dtype != Dtype::kI32) throw FormatError(format + ": array '" + name + "' is not i32");
    std::vector<std::int64_t> out(shape_size(a.shape));
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = decode_one<std::int32_t>(a.bytes.data() + 4 * i);
    return out;
  }

  /// Requires `name` to exist with the given element type and shape.
  void expect(const std::string& name, Dtype dtype, const Shape& shape) const {
    const Array& a = find(name);
    if (a.dtype != dtype)
      throw FormatError(format + ": array '" + name + "' has element type " + dtype_name(a.dtype) + ", expected " + dtype_name(dtype));
    if (a.shape != shape)
      throw FormatError(format + ": array '" + name + "' has shape " + shape_string(a.shape) + ", expected " + shape_string(shape));
  }
};

inline std::filesystem::path payload_path(const std::filesystem::path& manifest) {
  std::filesystem::path p = manifest;
  return p.replace_extension(".bin");
}

inline void save_container(const Container& c, const std::filesystem::path& manifest) {
  const std::filesystem::path payload = payload_path(manifest);
  if (payload == manifest) throw FormatError("manifest path must not end in .bin: " + manifest.string());
  Json arrays = Json::array();
  std::uint64_t offset = 0;
  for (const auto& a : c.arrays) {
    arrays.push_back({{"name", a.name},
                      {"dtype", dtype_name(a.dtype)},
                      {"shape", a.shape},
                      {"offset", offset},
                      {"bytes", a.bytes.size()}});
    offset += a.bytes.size();
  }
  Json j = {{"format", c.format},
            {"version", c.version},
            {"payload", payload.filename().string()},
            {"payload_bytes", offset},
            {"arrays", arrays},
            {"meta", c.meta}};
  {
    std::ofstream out(manifest);
    if (!out) throw FormatError("cannot write " + manifest.string());
    out << j.dump(2) << "\n";
  }
  std::ofstream bin(payload, std::ios::binary);
  if (!bin) throw FormatError("cannot write " + payload.string());
  for (const auto& a : c.arrays) bin.write(reinterpret_cast<const char*>(a.bytes.data()), static_cast<std::streamsize>(a.bytes.size()));
  if (!bin) throw FormatError("failed writing " + payload.string());
}

inline Container load_container(const std::filesystem::path& manifest, const std::string& expected_format) {
  std::ifstream in(manifest);
  if (!in) throw FormatError("cannot open " + manifest.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::exception& e) {
    throw FormatError(manifest.string() + ": manifest is not valid JSON: " + e.what());
  }
  Container c;
  try {
    c.format = j.at("format").get<std::string>();
    if (!expected_format.empty() && c.format != expected_format)
      throw FormatError(manifest.string() + ": expected format '" + expected_format + "', found '" + c.format + "'");
    if (!j.contains("version")) throw FormatError(manifest.string() + ": manifest has no version field");
    c.version = j.at("version").get<int>();
    if (c.version != 1) throw FormatError(manifest.string() + ": unsupported version " + std::to_string(c.version));
    c.meta = j.value("meta", Json::object());
    const std::filesystem::path payload = manifest.parent_path() / j.at("payload").get<std::string>();
    std::ifstream bin(payload, std::ios::binary);
    if (!bin) throw FormatError("cannot open payload " + payload.string());
    const std::vector<std::uint8_t> blob((std::istreambuf_iterator<char>(bin)), std::istreambuf_iterator<char>());
    for (const Json& e : j.at("arrays")) {
      Container::Array a;
      a.name = e.at("name").get<std::string>();
      a.dtype = parse_dtype(e.at("dtype").get<std::string>());
      a.shape = e.at("shape").get<Shape>();
      const std::uint64_t offset = e.at("offset").get<std::uint64_t>();
      const std::uint64_t bytes = e.at("bytes").get<std::uint64_t>();
      const std::uint64_t need = shape_size(a.shape) * dtype_size(a.dtype);
      if (bytes != need) {
        throw FormatError(manifest.string() + ": shape mismatch for array '" + a.name + "': shape " + shape_string(a.shape) +
                          " needs " + std::to_string(need) + " bytes, manifest records " + std::to_string(bytes));
      }
      if (offset + bytes > blob.size()) {
        throw FormatError(manifest.string() + ": shape mismatch for array '" + a.name + "': needs bytes [" +
                          std::to_string(offset) + ", " + std::to_string(offset + bytes) + ") but the payload has " +
                          std::to_string(blob.size()) + " bytes");
      }
      a.bytes.assign(blob.begin() + static_cast<std::ptrdiff_t>(offset), blob.begin() + static_cast<std::ptrdiff_t>(offset + bytes));
      c.arrays.push_back(std::move(a));
    }
    if (j.contains("payload_bytes") && j["payload_bytes"].get<std::uint64_t>() != blob.size()) {
      throw FormatError(manifest.string() + ": payload has " + std::to_string(blob.size()) + " bytes, manifest records " +
                        std::to_string(j["payload_bytes"].get<std::uint64_t>()));
    }
  } catch (const Json::exception& e) {
    throw FormatError(manifest.string() + ": malformed manifest: " + e.what());
  }
  return c;
}

/// Raw payload bytes, for byte-level comparisons.
inline std::vector<std::uint8_t> read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw FormatError("cannot open " + p.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace ringnet
