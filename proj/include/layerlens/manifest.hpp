#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace layerlens {

inline constexpr const char* kToolVersion = "0.1.0";

// Run manifest: which stages completed, with a digest per artifact. The
// created_at timestamp is the only non-deterministic field in any output.
struct StageRecord {
  std::string config_digest;
  std::vector<std::pair<std::string, std::string>> artifacts;  // relative path -> fnv64 hex
};

struct RunManifest {
  std::map<std::string, StageRecord> stages;

  static RunManifest load(const std::filesystem::path& out_dir);  // empty if absent
  void save(const std::filesystem::path& out_dir) const;

  // True when the stage completed under the same config and every recorded
  // artifact still exists with a matching digest.
  bool stage_current(const std::filesystem::path& out_dir, const std::string& stage,
                     const std::string& config_digest) const;

  // Records a stage from the files it just wrote (paths relative to out_dir).
  void record_stage(const std::filesystem::path& out_dir, const std::string& stage,
                    const std::string& config_digest, const std::vector<std::string>& paths);
};

// Exclusive ownership of an output directory for the duration of a command.
class DirectoryLock {
 public:
  explicit DirectoryLock(const std::filesystem::path& out_dir);
  ~DirectoryLock();
  DirectoryLock(const DirectoryLock&) = delete;
  DirectoryLock& operator=(const DirectoryLock&) = delete;

 private:
  std::filesystem::path lock_path_;
};

}  // namespace layerlens
