#pragma once

// The "cloud": a versioned store of serialized models. Uploads are
// validated, assigned contiguous versions per model id under one lock, and
// never mutated afterwards. With a root directory the registry persists as
// <root>/<model_id>/<version>.fgn (payload) plus a .creator sidecar, and
// rebuilds its index by scanning on startup.

#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "fedgan/error.hpp"
#include "fedgan/serialize.hpp"

namespace fedgan {

struct ModelEnvelope {
  std::string model_id;
  uint32_t version = 0;  // 0 = not yet assigned by a registry
  std::string creator;
  std::vector<uint8_t> payload;
  uint32_t checksum = 0;

  static ModelEnvelope make(std::string model_id, std::string creator,
                            std::vector<uint8_t> payload) {
    ModelEnvelope env;
    env.model_id = std::move(model_id);
    env.creator = std::move(creator);
    env.checksum = crc32(payload);
    env.payload = std::move(payload);
    return env;
  }

  bool verify() const { return checksum == crc32(payload); }
};

struct RegistryEntry {
  std::string model_id;
  uint32_t max_version = 0;
};

// Ids name directories on disk, so the charset is restricted accordingly.
inline void validate_model_id(const std::string& id) {
  if (id.empty() || id.size() > 64) {
    throw RegistryError(RegistryError::Code::bad_id, "model id must be 1..64 bytes");
  }
  for (char c : id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '.' || c == '_' || c == '-';
    if (!ok) {
      throw RegistryError(RegistryError::Code::bad_id,
                          "model id may use [A-Za-z0-9._-] only: " + id);
    }
  }
  if (id == "." || id == "..") {
    throw RegistryError(RegistryError::Code::bad_id, "model id may not be a dot path");
  }
}

class ModelRegistry {
 public:
  ModelRegistry() = default;

  explicit ModelRegistry(std::filesystem::path root) : root_(std::move(root)) {
    std::error_code ec;
    std::filesystem::create_directories(root_, ec);
    if (ec) throw RegistryError(RegistryError::Code::storage, "cannot create " + root_.string());
    load();
  }

  // Validates the payload, assigns version = previous max + 1, persists,
  // stores. Failed validation stores nothing.
  uint32_t upload(const std::string& model_id, const std::string& creator,
                  std::vector<uint8_t> payload) {
    validate_model_id(model_id);
    try {
      deserialize_model(payload);
    } catch (const SerializeError& e) {
      throw RegistryError(RegistryError::Code::invalid_payload, e.what());
    }
    std::lock_guard<std::mutex> lock(mu_);
    auto& versions = store_[model_id];
    ModelEnvelope env = ModelEnvelope::make(model_id, creator, std::move(payload));
    env.version = static_cast<uint32_t>(versions.size()) + 1;
    if (!root_.empty()) persist(env);
    versions.push_back(std::move(env));
    return versions.back().version;
  }

  ModelEnvelope fetch_latest(const std::string& model_id) const {
    std::lock_guard<std::mutex> lock(mu_);
    const auto it = store_.find(model_id);
    if (it == store_.end() || it->second.empty()) {
      throw RegistryError(RegistryError::Code::not_found, "unknown model id " + model_id);
    }
    return it->second.back();
  }

  ModelEnvelope fetch(const std::string& model_id, uint32_t version) const {
    std::lock_guard<std::mutex> lock(mu_);
    const auto it = store_.find(model_id);
    if (it == store_.end() || version == 0 || version > it->second.size()) {
      throw RegistryError(RegistryError::Code::not_found,
                          "no version " + std::to_string(version) + " of " + model_id);
    }
    return it->second[version - 1];
  }

  std::vector<RegistryEntry> list() const {
    std::lock_guard<std::mutex> lock(mu_);
    std::vector<RegistryEntry> entries;
    entries.reserve(store_.size());
    for (const auto& [id, versions] : store_) {
      if (!versions.empty()) {
        entries.push_back({id, static_cast<uint32_t>(versions.size())});
      }
    }
    return entries;
  }

 private:
  void persist(const ModelEnvelope& env) {
    namespace fs = std::filesystem;
    std::error_code ec;
    const fs::path dir = root_ / env.model_id;
    fs::create_directories(dir, ec);
    if (ec) throw RegistryError(RegistryError::Code::storage, "cannot create " + dir.string());
    const fs::path final_path = dir / (std::to_string(env.version) + ".fgn");
    const fs::path tmp_path = dir / (std::to_string(env.version) + ".fgn.tmp");
    {
      std::ofstream out(tmp_path, std::ios::binary | std::ios::trunc);
      out.write(reinterpret_cast<const char*>(env.payload.data()),
                static_cast<std::streamsize>(env.payload.size()));
      if (!out.good()) {
        throw RegistryError(RegistryError::Code::storage, "write failed: " + tmp_path.string());
      }
    }
    fs::rename(tmp_path, final_path, ec);
    if (ec) throw RegistryError(RegistryError::Code::storage, "rename failed: " + final_path.string());
    std::ofstream meta(dir / (std::to_string(env.version) + ".creator"), std::ios::trunc);
    meta << env.creator;
  }

  void load() {
    namespace fs = std::filesystem;
    for (const auto& dir : fs::directory_iterator(root_)) {
      if (!dir.is_directory()) continue;
      const std::string id = dir.path().filename().string();
      validate_model_id(id);
      std::map<uint32_t, fs::path> found;
      for (const auto& f : fs::directory_iterator(dir.path())) {
        const std::string name = f.path().filename().string();
        if (!name.ends_with(".fgn")) continue;
        const std::string stem = name.substr(0, name.size() - 4);
        uint32_t v = 0;
        try {
          v = static_cast<uint32_t>(std::stoul(stem));
        } catch (...) {
          throw RegistryError(RegistryError::Code::storage, "stray file " + f.path().string());
        }
        found[v] = f.path();
      }
      std::vector<ModelEnvelope>& versions = store_[id];
      uint32_t expect = 1;
      for (const auto& [v, path] : found) {
        if (v != expect) {
          throw RegistryError(RegistryError::Code::storage,
                              "non-contiguous versions for " + id + " at " + std::to_string(v));
        }
        std::ifstream in(path, std::ios::binary);
        std::vector<uint8_t> payload((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
        try {
          deserialize_model(payload);
        } catch (const SerializeError& e) {
          throw RegistryError(RegistryError::Code::storage,
                              "corrupt stored model " + path.string() + ": " + e.what());
        }
        ModelEnvelope env;
        env.model_id = id;
        env.version = v;
        env.checksum = crc32(payload);
        env.payload = std::move(payload);
        std::ifstream meta(dir.path() / (std::to_string(v) + ".creator"));
        if (meta.good()) {
          std::getline(meta, env.creator);
        }
        versions.push_back(std::move(env));
        ++expect;
      }
      if (versions.empty()) store_.erase(id);
    }
  }

  mutable std::mutex mu_;
  std::map<std::string, std::vector<ModelEnvelope>> store_;
  std::filesystem::path root_;
};

// Uniform handle over a registry reached in-process or over the wire, so
// the cascade and the CLI do not care which side of a socket they are on.
class RegistryAccess {
 public:
  virtual ~RegistryAccess() = default;
  virtual uint32_t upload(const std::string& id, const std::string& creator,
                          const std::vector<uint8_t>& payload) = 0;
  virtual ModelEnvelope fetch_latest(const std::string& id) = 0;
  virtual ModelEnvelope fetch(const std::string& id, uint32_t version) = 0;
  virtual std::vector<RegistryEntry> list() = 0;
};

class LocalRegistryAccess final : public RegistryAccess {
 public:
  explicit LocalRegistryAccess(ModelRegistry& reg) : reg_(reg) {}

  uint32_t upload(const std::string& id, const std::string& creator,
                  const std::vector<uint8_t>& payload) override {
    return reg_.upload(id, creator, payload);
  }
  ModelEnvelope fetch_latest(const std::string& id) override { return reg_.fetch_latest(id); }
  ModelEnvelope fetch(const std::string& id, uint32_t version) override {
    return reg_.fetch(id, version);
  }
  std::vector<RegistryEntry> list() override { return reg_.list(); }

 private:
  ModelRegistry& reg_;
};

}  // namespace fedgan
