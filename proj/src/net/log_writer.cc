#include "bihap/net/log_writer.h"

#include <stdexcept>

namespace bihap::net {

LogWriter::LogWriter(const std::filesystem::path& path, const std::string& header)
    : out_(path) {
  if (!out_) { throw std::runtime_error("cannot open log " + path.string()); }
  out_ << header << '\n';
  thread_ = std::thread([this] { Run(); });
}

LogWriter::~LogWriter() { Close(); }

void LogWriter::Write(std::string line) {
  {
    std::lock_guard lock(mutex_);
    queue_.push_back(std::move(line));
  }
  ready_.notify_one();
}

void LogWriter::Close() {
  {
    std::lock_guard lock(mutex_);
    if (closing_) { return; }
    closing_ = true;
  }
  ready_.notify_one();
  thread_.join();
  out_.flush();
}

void LogWriter::Run() {
  std::deque<std::string> batch;
  for (;;) {
    {
      std::unique_lock lock(mutex_);
      ready_.wait(lock, [this] { return closing_ || !queue_.empty(); });
      batch.swap(queue_);
      if (batch.empty() && closing_) { return; }
    }
    for (const auto& line : batch) { out_ << line << '\n'; }
    batch.clear();
  }
}

}  // namespace bihap::net
