#include "accent_eval/listen/store.hpp"

#include <string>

#include "accent_eval/error.hpp"

namespace accent_eval::listen {

JsonlStore::JsonlStore(std::filesystem::path path) : path_(std::move(path)) {
  if (path_->has_parent_path()) std::filesystem::create_directories(path_->parent_path());
  out_.open(*path_, std::ios::app | std::ios::binary);
  if (!out_) throw Error(Errc::config, "cannot open store " + path_->string() + " for appending");
}

std::vector<nlohmann::json> JsonlStore::load() const {
  std::vector<nlohmann::json> records;
  if (!path_ || !std::filesystem::exists(*path_)) return records;
  std::ifstream in(*path_, std::ios::binary);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      records.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError("store " + path_->string() + ": " + e.what(), line_no);
    }
  }
  return records;
}

void JsonlStore::append(const nlohmann::json& record) {
  if (!path_) return;
  const std::string line = record.dump() + "\n";
  std::lock_guard lock(mutex_);
  out_.write(line.data(), static_cast<std::streamsize>(line.size()));
  out_.flush();
  if (!out_) throw Error(Errc::state, "write to store " + path_->string() + " failed");
}

}  // namespace accent_eval::listen
