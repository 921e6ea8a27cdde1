#pragma once

#include <filesystem>
#include <stdexcept>

namespace hnc::app {

class LockBusy : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Advisory flock on <dir>/.hnc.lock. The service holds it shared, training
// commands exclusive; acquisition never blocks.
class DirLock {
 public:
  enum class Mode { Shared, Exclusive };

  DirLock(const std::filesystem::path& dir, Mode mode);  // throws LockBusy
  ~DirLock();
  DirLock(DirLock&& other) noexcept;
  DirLock& operator=(DirLock&&) = delete;
  DirLock(const DirLock&) = delete;

 private:
  int fd_ = -1;
};

}  // namespace hnc::app
