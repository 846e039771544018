#pragma once

#include <atomic>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <thread>

#include <json.hpp>
#include <unistd.h>

#include "ponte/backend/digest.hpp"
#include "ponte/backend/embedding.hpp"

namespace ponte {

struct CacheKey {
  std::string digest;  // lowercase hex SHA-256

  static CacheKey make(std::string_view model_id, int layer_index, std::string_view rendered) {
    return CacheKey{to_hex(Sha256Builder()
                               .bytes("ponte-cache-v1")
                               .field(model_id)
                               .u64(static_cast<std::uint64_t>(static_cast<std::int64_t>(layer_index)))
                               .field(rendered)
                               .finish())};
  }

  friend bool operator==(const CacheKey &, const CacheKey &) = default;
};

struct CacheStats {
  std::size_t entries = 0;
  std::uintmax_t bytes = 0;
  std::map<std::string, std::size_t> entries_per_model;
};

/// On-disk embedding store: `{dir}/{digest[0:2]}/{digest}.bin` holds raw
/// little-endian float32 values and `.json` the header. The header is renamed
/// into place last, so its presence marks a complete entry.
class EmbeddingCache {
 public:
  explicit EmbeddingCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) fail(ErrorCode::Io, "cannot create cache directory " + dir_.string() + ": " + ec.message());
  }

  const std::filesystem::path &dir() const { return dir_; }

  std::filesystem::path bin_path(const CacheKey &key) const {
    return dir_ / key.digest.substr(0, 2) / (key.digest + ".bin");
  }
  std::filesystem::path header_path(const CacheKey &key) const {
    return dir_ / key.digest.substr(0, 2) / (key.digest + ".json");
  }

  /// Missing, partial or unreadable entries read as a miss.
  std::optional<EmbedResult> load(const CacheKey &key) const {
    std::shared_lock lock(mutex_);
    std::ifstream header_in(header_path(key));
    if (!header_in) return std::nullopt;
    nlohmann::json header;
    try {
      header = nlohmann::json::parse(header_in);
      if (header.at("digest").get<std::string>() != key.digest) return std::nullopt;
    } catch (const nlohmann::json::exception &) {
      return std::nullopt;
    }

    EmbedResult result;
    result.model_id = header.at("model_id").get<std::string>();
    result.layer_index = header.at("layer_index").get<int>();
    if (!header.at("generated_word").is_null()) result.generated_word = header.at("generated_word").get<std::string>();
    const auto dim = header.at("dim").get<std::size_t>();

    std::ifstream bin(bin_path(key), std::ios::binary);
    if (!bin) return std::nullopt;
    std::string raw((std::istreambuf_iterator<char>(bin)), std::istreambuf_iterator<char>());
    if (raw.size() != dim * 4) return std::nullopt;
    result.embedding.values.resize(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      std::uint32_t bits = 0;
      for (int b = 3; b >= 0; --b) bits = (bits << 8) | static_cast<std::uint8_t>(raw[i * 4 + b]);
      result.embedding.values[i] = std::bit_cast<float>(bits);
    }
    return result;
  }

  void store(const CacheKey &key, const EmbedResult &result) {
    std::unique_lock lock(mutex_);
    std::filesystem::create_directories(bin_path(key).parent_path());

    std::string raw(result.embedding.dim() * 4, '\0');
    for (std::size_t i = 0; i < result.embedding.dim(); ++i) {
      const auto bits = std::bit_cast<std::uint32_t>(result.embedding.values[i]);
      for (int b = 0; b < 4; ++b) raw[i * 4 + b] = static_cast<char>((bits >> (8 * b)) & 0xff);
    }
    nlohmann::ordered_json header{{"digest", key.digest},
                                  {"model_id", result.model_id},
                                  {"layer_index", result.layer_index},
                                  {"dim", result.embedding.dim()},
                                  {"generated_word", nullptr}};
    if (result.generated_word) header["generated_word"] = *result.generated_word;

    write_atomically(bin_path(key), raw);
    write_atomically(header_path(key), header.dump(2) + "\n");
  }

  CacheStats stats() const {
    std::shared_lock lock(mutex_);
    CacheStats stats;
    for (const auto &entry : std::filesystem::recursive_directory_iterator(dir_)) {
      if (!entry.is_regular_file()) continue;
      stats.bytes += entry.file_size();
      if (entry.path().extension() != ".json") continue;
      ++stats.entries;
      try {
        std::ifstream in(entry.path());
        ++stats.entries_per_model[nlohmann::json::parse(in).at("model_id").get<std::string>()];
      } catch (const nlohmann::json::exception &) {
        ++stats.entries_per_model["<unreadable>"];
      }
    }
    return stats;
  }

  /// Removes every entry; returns how many were removed.
  std::size_t clear() {
    std::unique_lock lock(mutex_);
    std::size_t removed = 0;
    for (const auto &entry : std::filesystem::directory_iterator(dir_)) {
      if (!entry.is_directory() || entry.path().filename().string().size() != 2) continue;
      for (const auto &file : std::filesystem::directory_iterator(entry.path())) {
        if (file.path().extension() == ".json") ++removed;
      }
      std::filesystem::remove_all(entry.path());
    }
    return removed;
  }

 private:
  static void write_atomically(const std::filesystem::path &target, const std::string &content) {
    static std::atomic<std::uint64_t> counter{0};
    std::ostringstream tmp_name;
    tmp_name << target.filename().string() << ".tmp." << ::getpid() << "." << counter++;
    const auto tmp = target.parent_path() / tmp_name.str();
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      out.write(content.data(), static_cast<std::streamsize>(content.size()));
      if (!out) fail(ErrorCode::Io, "cannot write cache file " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, target, ec);
    if (ec) {
      std::filesystem::remove(tmp, ec);
      fail(ErrorCode::Io, "cannot move cache file into place: " + target.string());
    }
  }

  std::filesystem::path dir_;
  mutable std::shared_mutex mutex_;
};

}  // namespace ponte
