#pragma once

#include "hg/numkit.hpp"

#include <cstddef>
#include <functional>
#include <list>
#include <memory>
#include <mutex>
#include <utility>

namespace hg::detail {

/// Small LRU memo keyed on the exact bits of lam. Values are immutable once
/// computed, so returned pointers stay valid after eviction.
template <class T>
class LambdaCache {
 public:
  using Compute = std::function<T(const Vec&)>;

  explicit LambdaCache(Compute compute, std::size_t slots = 8) : compute_(std::move(compute)), slots_(slots) {}

  std::shared_ptr<const T> get(const Vec& lam) const {
    {
      std::lock_guard lock(mutex_);
      for (auto it = entries_.begin(); it != entries_.end(); ++it) {
        if (it->first.size() == lam.size() && it->first == lam) {
          entries_.splice(entries_.begin(), entries_, it);
          return entries_.front().second;
        }
      }
    }
    auto value = std::make_shared<const T>(compute_(lam));
    std::lock_guard lock(mutex_);
    entries_.emplace_front(lam, value);
    if (entries_.size() > slots_) entries_.pop_back();
    return value;
  }

 private:
  Compute compute_;
  std::size_t slots_;
  mutable std::mutex mutex_;
  mutable std::list<std::pair<Vec, std::shared_ptr<const T>>> entries_;
};

template <class T>
std::shared_ptr<LambdaCache<T>> make_cache(typename LambdaCache<T>::Compute compute, std::size_t slots = 8) {
  return std::make_shared<LambdaCache<T>>(std::move(compute), slots);
}

}  // namespace hg::detail
