#include "socd/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace socd::nn {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'S', 'O', 'C', 'D', 'C', 'K', 'P', 'T'};

template <typename T>
void put_le(std::string& out, T value) {
  static_assert(std::is_integral_v<T>);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xff));
  }
}

template <typename T>
T get_le(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw DataFormatError("checkpoint truncated");
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  }
  pos += sizeof(T);
  return static_cast<T>(v);
}

}  // namespace

const DenseNet& Checkpoint::net(const std::string& name) const {
  for (const auto& [n, net] : nets) {
    if (n == name) return net;
  }
  throw DataFormatError("checkpoint has no network named '" + name + "'");
}

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  json header{{"kind", ckpt.kind}, {"meta", ckpt.meta}, {"nets", json::array()}};
  for (const auto& [name, net] : ckpt.nets) {
    json acts = json::array();
    for (auto a : net.activations()) acts.push_back(to_string(a));
    header["nets"].push_back(
        {{"name", name}, {"sizes", net.sizes()}, {"activations", acts}, {"param_count", net.param_count()}});
  }
  const std::string text = header.dump();
  std::string out(kMagic, sizeof(kMagic));
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint64_t>(out, text.size());
  out += text;
  for (const auto& entry : ckpt.nets) {
    for (double v : entry.second.flat_params()) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  }
  return out;
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
  if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw DataFormatError("not a checkpoint file (bad magic)");
  }
  std::size_t pos = sizeof(kMagic);
  const auto version = get_le<std::uint32_t>(bytes, pos);
  if (version != kCheckpointVersion) {
    throw DataFormatError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto len = get_le<std::uint64_t>(bytes, pos);
  if (pos + len > bytes.size()) throw DataFormatError("checkpoint header truncated");
  json header;
  try {
    header = json::parse(bytes.substr(pos, len));
  } catch (const json::exception& e) {
    throw DataFormatError(std::string("checkpoint header: ") + e.what());
  }
  pos += len;
  Checkpoint ckpt;
  try {
    ckpt.kind = header.at("kind").get<std::string>();
    ckpt.meta = header.at("meta");
    for (const auto& jn : header.at("nets")) {
      std::vector<Activation> acts;
      for (const auto& a : jn.at("activations")) acts.push_back(activation_from_string(a.get<std::string>()));
      DenseNet net(jn.at("sizes").get<std::vector<int>>(), acts);
      if (net.param_count() != jn.at("param_count").get<std::size_t>()) {
        throw DataFormatError("checkpoint param_count disagrees with sizes");
      }
      Vec params(net.param_count());
      for (double& v : params) v = std::bit_cast<double>(get_le<std::uint64_t>(bytes, pos));
      net.set_flat_params(params);
      ckpt.nets.emplace_back(jn.at("name").get<std::string>(), std::move(net));
    }
  } catch (const json::exception& e) {
    throw DataFormatError(std::string("checkpoint header: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataFormatError(std::string("checkpoint: ") + e.what());
  }
  if (pos != bytes.size()) throw DataFormatError("checkpoint has trailing bytes");
  return ckpt;
}

void write_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  const std::string bytes = serialize_checkpoint(ckpt);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

Checkpoint read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataFormatError("cannot open checkpoint: " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

}  // namespace socd::nn
