#include "layerlens/manifest.hpp"

#include <chrono>
#include <cstdio>
#include <fcntl.h>
#include <fstream>
#include <unistd.h>

#include <json.hpp>

#include "layerlens/digest.hpp"
#include "layerlens/errors.hpp"

namespace layerlens {

namespace {

std::string timestamp_utc() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ", tm.tm_year + 1900,
                tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec);
  return buf;
}

}  // namespace

RunManifest RunManifest::load(const std::filesystem::path& out_dir) {
  RunManifest m;
  const auto path = out_dir / "manifest.json";
  std::ifstream in(path);
  if (!in) return m;
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("manifest.json is not valid JSON: " + std::string(e.what()));
  }
  if (!j.contains("stages")) return m;
  for (const auto& [stage, rec] : j.at("stages").items()) {
    StageRecord r;
    r.config_digest = rec.value("config_digest", "");
    for (const auto& a : rec.value("artifacts", nlohmann::json::array())) {
      r.artifacts.emplace_back(a.at("path").get<std::string>(),
                               a.at("digest").get<std::string>());
    }
    m.stages[stage] = std::move(r);
  }
  return m;
}

void RunManifest::save(const std::filesystem::path& out_dir) const {
  nlohmann::ordered_json j;
  j["schema"] = 1;
  j["tool_version"] = kToolVersion;
  j["created_at"] = timestamp_utc();
  nlohmann::ordered_json stages_json;
  for (const auto& [stage, rec] : stages) {
    nlohmann::ordered_json r;
    r["config_digest"] = rec.config_digest;
    auto artifacts = nlohmann::ordered_json::array();
    for (const auto& [path, digest] : rec.artifacts) {
      artifacts.push_back({{"path", path}, {"digest", digest}});
    }
    r["artifacts"] = std::move(artifacts);
    stages_json[stage] = std::move(r);
  }
  j["stages"] = std::move(stages_json);

  std::ofstream out(out_dir / "manifest.json", std::ios::trunc);
  if (!out) {
    throw DataError("cannot write manifest.json in " + out_dir.string());
  }
  out << j.dump(2) << "\n";
}

bool RunManifest::stage_current(const std::filesystem::path& out_dir, const std::string& stage,
                                const std::string& config_digest) const {
  const auto it = stages.find(stage);
  if (it == stages.end()) return false;
  if (it->second.config_digest != config_digest) return false;
  for (const auto& [rel, digest] : it->second.artifacts) {
    const auto path = out_dir / rel;
    if (!std::filesystem::exists(path)) return false;
    if (hex64(fnv1a64_file(path)) != digest) return false;
  }
  return true;
}

void RunManifest::record_stage(const std::filesystem::path& out_dir, const std::string& stage,
                               const std::string& config_digest,
                               const std::vector<std::string>& paths) {
  StageRecord rec;
  rec.config_digest = config_digest;
  for (const std::string& rel : paths) {
    rec.artifacts.emplace_back(rel, hex64(fnv1a64_file(out_dir / rel)));
  }
  stages[stage] = std::move(rec);
  save(out_dir);
}

DirectoryLock::DirectoryLock(const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  lock_path_ = out_dir / ".layerlens.lock";
  const int fd = ::open(lock_path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0) {
    throw DataError("output directory is locked by another process (remove " +
                    lock_path_.string() + " if stale)");
  }
  ::close(fd);
}

DirectoryLock::~DirectoryLock() {
  std::error_code ec;
  std::filesystem::remove(lock_path_, ec);
}

}  // namespace layerlens
