#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>

#include "typeline/error.hpp"

namespace typeline {

/// Accounting model of the object heap behind OBJ.n / OBJ.r. Objects have a
/// size but no storage; handles start above any data address so that using a
/// handle as a pointer faults.
class ObjectHeap {
 public:
  static constexpr std::int64_t kFirstHandle = std::int64_t{1} << 20;

  std::int64_t obj_new(std::int64_t size) {
    if (size <= 0) throw Error(ErrorCode::ZeroSizeAllocation, "allocation of " + std::to_string(size) + " bytes");
    const std::int64_t h = next_handle_++;
    live_.emplace(h, size);
    live_bytes_ += size;
    peak_bytes_ = std::max(peak_bytes_, live_bytes_);
    ++alloc_count_;
    return h;
  }

  void obj_release(std::int64_t h) {
    auto it = live_.find(h);
    if (it == live_.end()) {
      if (released_.count(h)) throw Error(ErrorCode::DoubleFree, "handle " + std::to_string(h) + " released twice");
      throw Error(ErrorCode::UnknownHandle, "handle " + std::to_string(h) + " was never allocated");
    }
    live_bytes_ -= it->second;
    live_.erase(it);
    released_.insert(h);
    ++release_count_;
  }

  std::int64_t next_handle() const { return next_handle_; }
  std::int64_t live_bytes() const { return live_bytes_; }
  std::int64_t peak_bytes() const { return peak_bytes_; }
  std::int64_t alloc_count() const { return alloc_count_; }
  std::int64_t release_count() const { return release_count_; }
  const std::map<std::int64_t, std::int64_t>& live_objects() const { return live_; }

  friend bool operator==(const ObjectHeap&, const ObjectHeap&) = default;

 private:
  std::int64_t next_handle_ = kFirstHandle;
  std::map<std::int64_t, std::int64_t> live_;
  std::set<std::int64_t> released_;
  std::int64_t live_bytes_ = 0;
  std::int64_t peak_bytes_ = 0;
  std::int64_t alloc_count_ = 0;
  std::int64_t release_count_ = 0;
};

}  // namespace typeline
