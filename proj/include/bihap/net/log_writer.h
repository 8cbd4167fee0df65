#pragma once

#include <condition_variable>
#include <deque>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <thread>

namespace bihap::net {

/// Appends lines to a file from a background thread so the caller never
/// waits on disk. Everything queued is flushed by Close() or destruction.
class LogWriter {
 public:
  LogWriter(const std::filesystem::path& path, const std::string& header);
  ~LogWriter();
  LogWriter(const LogWriter&) = delete;
  LogWriter& operator=(const LogWriter&) = delete;

  void Write(std::string line);
  void Close();

 private:
  void Run();

  std::ofstream out_;
  std::mutex mutex_;
  std::condition_variable ready_;
  std::deque<std::string> queue_;
  bool closing_ = false;
  std::thread thread_;
};

}  // namespace bihap::net
