#pragma once

#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <vector>

#include <json.hpp>

namespace accent_eval::listen {

/// Append-only JSON-lines event log. Each append is written and flushed
/// under a single writer lock. Without a path the log lives in memory only.
class JsonlStore {
 public:
  JsonlStore() = default;
  explicit JsonlStore(std::filesystem::path path);

  /// Every record currently on disk, in order. Throws ParseError naming the
  /// line of a malformed record.
  std::vector<nlohmann::json> load() const;

  void append(const nlohmann::json& record);

  const std::optional<std::filesystem::path>& path() const { return path_; }

 private:
  std::optional<std::filesystem::path> path_;
  std::ofstream out_;
  std::mutex mutex_;
};

}  // namespace accent_eval::listen
