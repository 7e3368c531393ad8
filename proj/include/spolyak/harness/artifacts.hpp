#pragma once

// Artifact writing: atomic file replacement, git-style content hashes and
// the manifest every output directory carries.

#include <spolyak/harness/config.hpp>
#include <spolyak/types.hpp>

#include <json.hpp>
#include <openssl/evp.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <ostream>
#include <stdexcept>
#include <string>

namespace spolyak::harness {

using json = nlohmann::ordered_json;

/// SHA-1 of "blob <size>\0<content>", i.e. what `git hash-object` prints.
inline std::string git_blob_hash(const std::string& content) {
  const std::string blob = "blob " + std::to_string(content.size()) + '\0' + content;
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(blob.data(), blob.size(), digest, &len, EVP_sha1(), nullptr) != 1)
    throw std::runtime_error("SHA-1 digest failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xF];
  }
  return out;
}

/// Writes via `<path>.tmp` and renames over `path`.
inline void write_atomic(const std::filesystem::path& path,
                         const std::function<void(std::ostream&)>& writer, bool binary = false) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    writer(out);
    out.flush();
    if (!out) throw std::runtime_error("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline void write_json(const std::filesystem::path& path, const json& doc) {
  write_atomic(path, [&](std::ostream& out) { out << doc.dump(2) << '\n'; });
}

/// NaN and infinities have no JSON form; they become null.
inline json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json manifest(const std::string& command, const ExperimentConfig& cfg) {
  json m;
  m["schema_version"] = kSchemaVersion;
  m["toolkit_version"] = kToolkitVersion;
  m["command"] = command;
  const std::string text = canonical_text(cfg.resolved);
  m["config_hash"] = git_blob_hash(text);
  json config = json::object();
  for (const auto& [k, v] : cfg.resolved) config[k] = v;
  m["config"] = config;
  json instance;
  instance["family"] = std::string(to_string(cfg.instance.family));
  instance["n"] = cfg.instance.design.n;
  instance["d"] = cfg.instance.design.d;
  instance["omega"] = cfg.instance.design.omega;
  instance["column_normalize"] = cfg.instance.design.column_normalize;
  instance["s_star"] = cfg.instance.s_star;
  instance["sigma"] = cfg.instance.sigma;
  m["instance"] = instance;
  m["seed"] = cfg.seed;
  m["seeds"] = cfg.seeds;
  return m;
}

}  // namespace spolyak::harness
