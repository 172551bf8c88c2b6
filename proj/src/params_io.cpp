#include "kcac/params_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "kcac/error.hpp"

namespace kcac {

namespace {

constexpr char kMagic[8] = {'K', 'C', 'A', 'C', 'P', 'B', '0', '1'};

static_assert(std::endian::native == std::endian::little,
              "parameter blob encoding assumes a little-endian host");

template <typename T>
void put(std::vector<std::uint8_t>& out, T v) {
  std::uint8_t raw[sizeof(T)];
  std::memcpy(raw, &v, sizeof(T));
  out.insert(out.end(), raw, raw + sizeof(T));
}

struct Reader {
  const std::vector<std::uint8_t>& bytes;
  std::size_t pos = 0;

  template <typename T>
  T get() {
    if (pos + sizeof(T) > bytes.size()) {
      throw ShapeError("parameter blob truncated");
    }
    T v;
    std::memcpy(&v, bytes.data() + pos, sizeof(T));
    pos += sizeof(T);
    return v;
  }
};

}  // namespace

std::vector<std::uint8_t> serialize_params(const ParamBlob& blob) {
  std::vector<std::uint8_t> out;
  out.insert(out.end(), kMagic, kMagic + sizeof(kMagic));
  put<std::int32_t>(out, blob.obs_dim);
  put<std::int32_t>(out, blob.act_dim);
  put<double>(out, blob.log_temperature);
  put<std::uint32_t>(out, std::uint32_t(blob.tensors.size()));
  for (const NamedTensor& t : blob.tensors) {
    put<std::uint32_t>(out, std::uint32_t(t.name.size()));
    out.insert(out.end(), t.name.begin(), t.name.end());
    put<std::uint32_t>(out, std::uint32_t(t.shape.size()));
    std::size_t count = 1;
    for (int d : t.shape) {
      put<std::int32_t>(out, d);
      count *= std::size_t(d);
    }
    if (count != t.values.size()) {
      throw ShapeError("tensor '" + t.name + "': shape does not match value count");
    }
    for (double v : t.values) put<double>(out, v);
  }
  return out;
}

ParamBlob deserialize_params(const std::vector<std::uint8_t>& bytes) {
  Reader r{bytes};
  char magic[8];
  for (char& c : magic) c = char(r.get<std::uint8_t>());
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw ShapeError("not a parameter blob (bad magic)");
  }
  ParamBlob blob;
  blob.obs_dim = r.get<std::int32_t>();
  blob.act_dim = r.get<std::int32_t>();
  blob.log_temperature = r.get<double>();
  std::uint32_t n = r.get<std::uint32_t>();
  blob.tensors.resize(n);
  for (NamedTensor& t : blob.tensors) {
    std::uint32_t name_len = r.get<std::uint32_t>();
    t.name.resize(name_len);
    for (char& c : t.name) c = char(r.get<std::uint8_t>());
    std::uint32_t rank = r.get<std::uint32_t>();
    t.shape.resize(rank);
    std::size_t count = 1;
    for (int& d : t.shape) {
      d = r.get<std::int32_t>();
      if (d < 1) throw ShapeError("tensor '" + t.name + "': bad dimension");
      count *= std::size_t(d);
    }
    t.values.resize(count);
    for (double& v : t.values) v = r.get<double>();
  }
  if (r.pos != bytes.size()) throw ShapeError("parameter blob has trailing bytes");
  return blob;
}

void save_params(const ParamBlob& blob, const std::string& path) {
  std::vector<std::uint8_t> bytes = serialize_params(blob);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot open for writing: " + path);
  f.write(reinterpret_cast<const char*>(bytes.data()),
          std::streamsize(bytes.size()));
  if (!f) throw Error("write failed: " + path);
}

ParamBlob load_params(const std::string& path) {
  std::ifstream f(path, std::ios::binary | std::ios::ate);
  if (!f) throw Error("cannot open: " + path);
  std::streamsize size = f.tellg();
  f.seekg(0);
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(size), 0);
  f.read(reinterpret_cast<char*>(bytes.data()), size);
  if (!f) throw Error("read failed: " + path);
  return deserialize_params(bytes);
}

std::uint64_t fnv1a64(const std::uint8_t* data, std::size_t n) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= data[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t params_hash(const ParamBlob& blob) {
  std::vector<std::uint8_t> bytes = serialize_params(blob);
  return fnv1a64(bytes.data(), bytes.size());
}

}  // namespace kcac
