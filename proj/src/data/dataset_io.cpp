#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "socd/data/dataset.hpp"

namespace socd::data {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

namespace {

constexpr char kBinMagic[8] = {'S', 'O', 'C', 'D', 'D', 'A', 'T', 'A'};
constexpr std::uint32_t kBinVersion = 1;

json transition_json(std::size_t ep, std::size_t t, const Transition& tr) {
  return {{"ep", ep},         {"t", t},          {"s", tr.state},       {"a", tr.action},
          {"d", tr.throughput_D}, {"e", tr.resource_E}, {"u", tr.served}, {"ns", tr.next_state},
          {"done", tr.terminal}};
}

// Rebuilds config and layout from the header and checks everything the header promises.
Dataset from_header(const json& hj) {
  Dataset ds;
  try {
    ds.header = DatasetHeader::from_json(hj);
  } catch (const json::exception& e) {
    throw DataFormatError(std::string("dataset header: ") + e.what());
  }
  if (ds.header.format != kFormatTag) {
    throw DataFormatError("unsupported dataset format '" + ds.header.format + "'");
  }
  try {
    ds.config = env::any_env_from_json(ds.header.config);
  } catch (const ConfigError& e) {
    throw DataFormatError(std::string("dataset header config: ") + e.what());
  }
  if (env::config_hash(ds.config) != ds.header.config_hash) {
    throw DataFormatError("dataset header config hash does not match the embedded config");
  }
  ds.layout = env::ObsLayout::from(ds.config);
  if (layout_descriptor(ds.layout) != ds.header.layout) {
    throw DataFormatError("dataset layout descriptor does not match the embedded config");
  }
  if (ds.header.J < 0 || ds.header.T < 0) throw DataFormatError("dataset header has negative counts");
  return ds;
}

void check_transition(const Dataset& ds, const Transition& tr) {
  const auto& l = ds.layout;
  if (tr.state.size() != l.obs_dim() || tr.next_state.size() != l.obs_dim() ||
      tr.action.size() != l.action_dim() ||
      tr.resource_E.size() != static_cast<std::size_t>(l.num_nodes) ||
      tr.served.size() != static_cast<std::size_t>(l.num_users)) {
    throw DataFormatError("transition vector lengths do not match the dataset layout");
  }
}

void finish(Dataset& ds) {
  if (static_cast<int>(ds.trajectories.size()) != ds.header.J) {
    throw DataFormatError("dataset body has " + std::to_string(ds.trajectories.size()) +
                          " trajectories, header says " + std::to_string(ds.header.J));
  }
  for (const auto& traj : ds.trajectories) {
    if (static_cast<int>(traj.steps.size()) != ds.header.T) {
      throw DataFormatError("dataset trajectory length differs from header T");
    }
  }
  const DatasetSummary s = summarize(ds.trajectories);
  const DatasetSummary& h = ds.header.summary;
  auto close = [](double a, double b) { return std::abs(a - b) <= 1e-9 * (1.0 + std::abs(b)); };
  if (!close(s.throughput.mean, h.throughput.mean) || !close(s.consumption.mean, h.consumption.mean) ||
      !close(s.throughput.std, h.throughput.std) || !close(s.consumption.std, h.consumption.std)) {
    throw DataFormatError("dataset header summary does not match the body");
  }
}

void put_f64(std::string& out, double v) {
  char b[8];
  std::memcpy(b, &v, 8);
  out.append(b, 8);
}

template <class T>
void put_int(std::string& out, T v) {
  char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  out.append(b, sizeof(T));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}
  void read(void* dst, std::size_t n) {
    if (pos_ + n > bytes_.size()) throw DataFormatError("binary dataset is truncated");
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }
  double f64() {
    double v;
    read(&v, 8);
    return v;
  }
  Vec vec(std::size_t n) {
    Vec v(n);
    for (double& x : v) x = f64();
    return v;
  }
  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

void write_jsonl(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << data.header.to_json().dump() << '\n';
  for (std::size_t ep = 0; ep < data.trajectories.size(); ++ep) {
    const auto& steps = data.trajectories[ep].steps;
    for (std::size_t t = 0; t < steps.size(); ++t) out << transition_json(ep, t, steps[t]).dump() << '\n';
  }
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

Dataset read_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw DataFormatError("dataset file is empty");
  Dataset ds;
  try {
    ds = from_header(json::parse(line));
  } catch (const json::parse_error& e) {
    throw DataFormatError(std::string("dataset header line: ") + e.what());
  }
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      const auto ep = j.at("ep").get<std::size_t>();
      const auto t = j.at("t").get<std::size_t>();
      if (ep == ds.trajectories.size() && t == 0) ds.trajectories.emplace_back();
      if (ds.trajectories.empty() || ep + 1 != ds.trajectories.size() ||
          t != ds.trajectories.back().steps.size()) {
        throw DataFormatError("transitions out of order at line " + std::to_string(lineno));
      }
      Transition tr;
      tr.state = j.at("s").get<Vec>();
      tr.action = j.at("a").get<Vec>();
      tr.throughput_D = j.at("d").get<double>();
      tr.resource_E = j.at("e").get<Vec>();
      tr.served = j.at("u").get<std::vector<int>>();
      tr.next_state = j.at("ns").get<Vec>();
      tr.terminal = j.at("done").get<bool>();
      check_transition(ds, tr);
      ds.trajectories.back().steps.push_back(std::move(tr));
    } catch (const json::exception& e) {
      throw DataFormatError("dataset line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  finish(ds);
  return ds;
}

void write_binary(const Dataset& data, const std::string& path) {
  std::string out(kBinMagic, 8);
  const std::string header = data.header.to_json().dump();
  put_int<std::uint32_t>(out, kBinVersion);
  put_int<std::uint64_t>(out, header.size());
  out += header;
  for (const auto& traj : data.trajectories) {
    for (const auto& tr : traj.steps) {
      for (double v : tr.state) put_f64(out, v);
      for (double v : tr.action) put_f64(out, v);
      put_f64(out, tr.throughput_D);
      for (double v : tr.resource_E) put_f64(out, v);
      for (int u : tr.served) put_f64(out, u);
      for (double v : tr.next_state) put_f64(out, v);
      put_f64(out, tr.terminal ? 1.0 : 0.0);
    }
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write '" + path + "'");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw std::runtime_error("write failed for '" + path + "'");
}

Dataset read_binary(const std::string& path) {
  const std::string bytes = slurp(path);
  Reader r(bytes);
  char magic[8];
  r.read(magic, 8);
  if (std::memcmp(magic, kBinMagic, 8) != 0) throw DataFormatError("bad binary dataset magic");
  std::uint32_t version;
  std::uint64_t hlen;
  r.read(&version, 4);
  if (version != kBinVersion) throw DataFormatError("unsupported binary dataset version " + std::to_string(version));
  r.read(&hlen, 8);
  if (hlen > bytes.size()) throw DataFormatError("binary dataset header length is corrupt");
  std::string header(hlen, '\0');
  r.read(header.data(), hlen);
  Dataset ds;
  try {
    ds = from_header(json::parse(header));
  } catch (const json::parse_error& e) {
    throw DataFormatError(std::string("binary dataset header: ") + e.what());
  }
  const auto& l = ds.layout;
  for (int ep = 0; ep < ds.header.J; ++ep) {
    Trajectory traj;
    for (int t = 0; t < ds.header.T; ++t) {
      Transition tr;
      tr.state = r.vec(l.obs_dim());
      tr.action = r.vec(l.action_dim());
      tr.throughput_D = r.f64();
      tr.resource_E = r.vec(l.num_nodes);
      for (double u : r.vec(l.num_users)) tr.served.push_back(static_cast<int>(u));
      tr.next_state = r.vec(l.obs_dim());
      tr.terminal = r.f64() != 0.0;
      traj.steps.push_back(std::move(tr));
    }
    ds.trajectories.push_back(std::move(traj));
  }
  if (!r.at_end()) throw DataFormatError("binary dataset has trailing bytes");
  finish(ds);
  return ds;
}

Dataset read_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  char magic[8] = {};
  in.read(magic, 8);
  in.close();
  if (std::memcmp(magic, kBinMagic, 8) == 0) return read_binary(path);
  return read_jsonl(path);
}

void write_dataset(const Dataset& data, const std::string& path) {
  if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".bin") == 0) {
    write_binary(data, path);
  } else {
    write_jsonl(data, path);
  }
}

}  // namespace socd::data
