#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "socd/nn/dense_net.hpp"

namespace socd::nn {

/// On-disk layout (all integers and reals little-endian):
///   8 bytes   magic "SOCDCKPT"
///   u32       format version (1)
///   u64       header length in bytes
///   header    UTF-8 JSON: {"kind", "meta", "nets": [{"name", "sizes", "activations", "param_count"}]}
///   f64[]     parameters of every net in header order, each in DenseNet::flat_params order
struct Checkpoint {
  std::string kind;
  nlohmann::json meta = nlohmann::json::object();
  std::vector<std::pair<std::string, DenseNet>> nets;

  const DenseNet& net(const std::string& name) const;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_checkpoint(const std::string& path, const Checkpoint& ckpt);
/// Throws DataFormatError on bad magic, version, or truncated payload.
Checkpoint read_checkpoint(const std::string& path);

/// Serialised bytes, identical to the file contents.
std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(const std::string& bytes);

}  // namespace socd::nn
