#pragma once

#include <openssl/evp.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>
#include <string>

#include "bsnse/io/config.hpp"
#include "json.hpp"

namespace bsnse {

inline constexpr const char* kToolVersion = "bsnse 0.1.0";

/// Lowercase hex SHA-256 of a file's bytes. Needs OpenSSL::Crypto at link time.
inline std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for hashing");
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw IoError("sha256: init failed");
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    if (in.gcount() > 0 && EVP_DigestUpdate(ctx.get(), buf, static_cast<std::size_t>(in.gcount())) != 1)
      throw IoError("sha256: update failed");
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_DigestFinal_ex(ctx.get(), md, &len) != 1) throw IoError("sha256: final failed");
  std::ostringstream os;
  for (unsigned int j = 0; j < len; ++j) os << std::hex << std::setw(2) << std::setfill('0') << int(md[j]);
  return os.str();
}

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

/// Record of one CLI run: resolved config, seed, timestamps and output digests.
/// Loading it back with Config::load reproduces the run.
struct RunManifest {
  std::string subcommand;
  Config config;
  std::uint64_t seed = 0;
  int threads = 1;
  std::string started;
  std::string finished;
  int exit_code = 0;
  std::string message;
  std::map<std::string, std::string> outputs;  ///< file name -> sha256

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["tool"] = kToolVersion;
    j["subcommand"] = subcommand;
    j["config"] = config.to_json();
    j["seed"] = seed;
    j["threads"] = threads;
    j["started"] = started;
    j["finished"] = finished;
    j["exit_code"] = exit_code;
    if (!message.empty()) j["message"] = message;
    j["outputs"] = outputs;
    return j;
  }

  /// Hashes every listed output in `dir` and writes dir/manifest.json.
  void write(const std::filesystem::path& dir) {
    for (auto& [name, digest] : outputs) digest = sha256_file((dir / name).string());
    const auto path = (dir / "manifest.json").string();
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << to_json().dump(2) << '\n';
    if (!out) throw IoError("write to '" + path + "' failed");
  }
};

}  // namespace bsnse
