#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace kcac {

struct NamedTensor {
  std::string name;
  std::vector<int> shape;
  std::vector<double> values;

  bool operator==(const NamedTensor&) const = default;
};

// Complete learnable state of a learner: actor, online and target critics,
// and the (log) entropy temperature. Optimizer state is deliberately not
// part of the blob; a transfer starts optimization fresh.
struct ParamBlob {
  std::int32_t obs_dim = 0;
  std::int32_t act_dim = 0;
  double log_temperature = 0.0;
  std::vector<NamedTensor> tensors;

  bool operator==(const ParamBlob&) const = default;
};

// Binary little-endian encoding with a magic/version header.
std::vector<std::uint8_t> serialize_params(const ParamBlob& blob);
ParamBlob deserialize_params(const std::vector<std::uint8_t>& bytes);

void save_params(const ParamBlob& blob, const std::string& path);
ParamBlob load_params(const std::string& path);

// FNV-1a over arbitrary bytes; used to fingerprint parameter blobs.
std::uint64_t fnv1a64(const std::uint8_t* data, std::size_t n);
std::uint64_t params_hash(const ParamBlob& blob);

}  // namespace kcac
