#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "mlpcpg/policy.hpp"
#include "mlpcpg/types.hpp"

namespace mlpcpg {

/// Checkpoint container: named flat f64 arrays written little-endian after a
/// JSON manifest that records the format version, array shapes/offsets and a
/// content hash of the payload.
///
/// File layout: "MCPG" | u32 version | u64 manifest length | manifest JSON |
/// payload (f64, little-endian, arrays in manifest order).
inline constexpr std::uint32_t kCheckpointVersion = 1;

inline std::uint64_t fnv1a64(const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 1469598103934665603ull;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

class Checkpoint {
 public:
  void set(const std::string& name, const VecX& values) {
    arrays_[name] = std::vector<double>(values.data(), values.data() + values.size());
  }
  void set_scalar(const std::string& name, double v) {
    arrays_[name] = {v};
  }
  void set_meta(const std::string& key, const std::string& value) {
    meta_[key] = value;
  }

  bool has(const std::string& name) const { return arrays_.count(name) > 0; }

  VecX get(const std::string& name) const {
    auto it = arrays_.find(name);
    if (it == arrays_.end()) throw DomainError("checkpoint missing array: " + name);
    return Eigen::Map<const VecX>(it->second.data(),
                                  static_cast<Eigen::Index>(it->second.size()));
  }
  double get_scalar(const std::string& name) const { return get(name)[0]; }
  std::string meta(const std::string& key) const {
    auto it = meta_.find(key);
    if (it == meta_.end()) throw DomainError("checkpoint missing meta: " + key);
    return it->second;
  }

  void save(const std::string& path) const {
    std::vector<double> payload;
    nlohmann::json manifest;
    manifest["version"] = kCheckpointVersion;
    manifest["byte_order"] = "little-endian";
    manifest["dtype"] = "f64";
    manifest["meta"] = meta_;
    auto& arr = manifest["arrays"] = nlohmann::json::array();
    for (const auto& [name, values] : arrays_) {
      arr.push_back({{"name", name},
                     {"offset", payload.size()},
                     {"size", values.size()}});
      payload.insert(payload.end(), values.begin(), values.end());
    }
    char hash_hex[17];
    std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                  static_cast<unsigned long long>(
                      fnv1a64(payload.data(), payload.size() * sizeof(double))));
    manifest["payload_hash_fnv1a64"] = hash_hex;

    const std::string mjson = manifest.dump();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
    out.write("MCPG", 4);
    const std::uint32_t version = kCheckpointVersion;
    out.write(reinterpret_cast<const char*>(&version), sizeof(version));
    const std::uint64_t mlen = mjson.size();
    out.write(reinterpret_cast<const char*>(&mlen), sizeof(mlen));
    out.write(mjson.data(), static_cast<std::streamsize>(mjson.size()));
    out.write(reinterpret_cast<const char*>(payload.data()),
              static_cast<std::streamsize>(payload.size() * sizeof(double)));
  }

  static Checkpoint load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("checkpoint not found: " + path);
    char magic[4];
    in.read(magic, 4);
    if (in.gcount() != 4 || std::memcmp(magic, "MCPG", 4) != 0)
      throw std::runtime_error("not a checkpoint file: " + path);
    std::uint32_t version = 0;
    in.read(reinterpret_cast<char*>(&version), sizeof(version));
    if (version != kCheckpointVersion)
      throw std::runtime_error("unsupported checkpoint version");
    std::uint64_t mlen = 0;
    in.read(reinterpret_cast<char*>(&mlen), sizeof(mlen));
    std::string mjson(mlen, '\0');
    in.read(mjson.data(), static_cast<std::streamsize>(mlen));
    const nlohmann::json manifest = nlohmann::json::parse(mjson);

    std::vector<double> payload;
    {
      std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                              std::istreambuf_iterator<char>());
      payload.resize(bytes.size() / sizeof(double));
      std::memcpy(payload.data(), bytes.data(), payload.size() * sizeof(double));
    }
    char hash_hex[17];
    std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                  static_cast<unsigned long long>(
                      fnv1a64(payload.data(), payload.size() * sizeof(double))));
    if (manifest.at("payload_hash_fnv1a64").get<std::string>() != hash_hex)
      throw std::runtime_error("checkpoint payload hash mismatch");

    Checkpoint ckpt;
    for (const auto& [key, value] : manifest.at("meta").items())
      ckpt.meta_[key] = value.get<std::string>();
    for (const auto& a : manifest.at("arrays")) {
      const auto offset = a.at("offset").get<std::size_t>();
      const auto size = a.at("size").get<std::size_t>();
      if (offset + size > payload.size())
        throw std::runtime_error("checkpoint array out of bounds");
      ckpt.arrays_[a.at("name").get<std::string>()] =
          std::vector<double>(payload.begin() + offset, payload.begin() + offset + size);
    }
    return ckpt;
  }

 private:
  std::map<std::string, std::vector<double>> arrays_;
  std::map<std::string, std::string> meta_;
};

/// Policy (+ observation normalizer) serialization.
template <typename S>
Checkpoint policy_to_checkpoint(const PolicyT<S>& policy,
                                const RunningNormalizer& norm) {
  Checkpoint c;
  c.set("mlp", policy.mlp.net.flat().template cast<double>());
  c.set("eps", Eigen::Map<const MatXT<S>>(policy.cpg.eps.data(), 144, 1)
                   .template cast<double>());
  c.set("phi", Eigen::Map<const MatXT<S>>(policy.cpg.phi.data(), 144, 1)
                   .template cast<double>());
  c.set("eta", policy.cpg.eta.template cast<double>());
  c.set("offset", policy.cpg.offset.template cast<double>());
  c.set_scalar("gamma", static_cast<double>(policy.cpg.gamma));
  c.set_scalar("dt", static_cast<double>(policy.cpg.dt));
  c.set("norm_mean", norm.mean());
  c.set("norm_m2", norm.m2());
  c.set_scalar("norm_count", norm.count());
  c.set_meta("freq_mode", frequency_mode_name(policy.freq_mode));
  return c;
}

template <typename S>
void policy_from_checkpoint(const Checkpoint& c, PolicyT<S>& policy,
                            RunningNormalizer& norm) {
  policy.mlp.net.flat() = c.get("mlp").template cast<S>();
  const VecX eps = c.get("eps");
  const VecX phi = c.get("phi");
  policy.cpg.eps =
      Eigen::Map<const Mat12>(eps.data()).template cast<S>();
  policy.cpg.phi =
      Eigen::Map<const Mat12>(phi.data()).template cast<S>();
  policy.cpg.eta = Vec12(c.get("eta")).template cast<S>();
  policy.cpg.offset = Vec12(c.get("offset")).template cast<S>();
  policy.cpg.gamma = S(c.get_scalar("gamma"));
  policy.cpg.dt = S(c.get_scalar("dt"));
  norm.load(c.get("norm_mean"), c.get("norm_m2"), c.get_scalar("norm_count"));
  policy.freq_mode = frequency_mode_from_name(c.meta("freq_mode"));
}

}  // namespace mlpcpg
