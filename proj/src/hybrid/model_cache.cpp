#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstring>
#include <thread>

#include "stockhybrid/hybrid.hpp"

namespace stockhybrid::hybrid {
namespace {

class Fnv1a {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h_ ^= b[i];
      h_ *= 1099511628211ULL;
    }
  }
  void number(double v) {
    // One bit pattern for every NaN.
    if (is_missing(v)) v = kMissing;
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    bytes(&bits, sizeof bits);
  }
  void integer(long long v) { bytes(&v, sizeof v); }
  void text(const std::string& s) {
    integer(static_cast<long long>(s.size()));
    bytes(s.data(), s.size());
  }
  std::uint64_t value() const { return h_; }

 private:
  std::uint64_t h_ = 1469598103934665603ULL;
};

}  // namespace

std::string data_fingerprint(const ObservationSeries& obs, const BiologySeries& bio) {
  Fnv1a h;
  h.integer(obs.first_year);
  h.integer(obs.last_year);
  for (const auto& f : obs.fleets) {
    h.text(f.name);
    h.integer(static_cast<int>(f.kind));
    h.number(f.timing);
    h.integer(f.first_year);
    for (int a : f.ages) h.integer(a);
    h.integer(-1);
    for (const auto& row : f.values) {
      for (double v : row) h.number(v);
    }
  }
  const auto& ages = bio.ages();
  h.integer(ages.min_age);
  h.integer(ages.max_age);
  h.integer(ages.plus_group);
  for (int y = bio.first_year(); y <= bio.last_year(); ++y) {
    for (auto row : {bio.weight(y), bio.maturity(y), bio.natural_mortality(y)}) {
      for (double v : row) h.number(v);
    }
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h.value()));
  return buf;
}

ModelCache::Model ModelCache::get(const ObservationSeries& obs, const BiologySeries& bio,
                                  const assess::AssessorConfig& cfg, int last_year) {
  const auto data = obs.truncated(last_year);
  const std::string key =
      data_fingerprint(data, bio) + '|' + std::to_string(last_year) + '|' + cfg.fingerprint();
  std::promise<Model> promise;
  std::shared_future<Model> future;
  bool owner = false;
  {
    std::lock_guard lock(mutex_);
    auto it = entries_.find(key);
    if (it == entries_.end()) {
      future = promise.get_future().share();
      entries_.emplace(key, future);
      ++fits_;
      owner = true;
    } else {
      future = it->second;
    }
  }
  if (owner) {
    try {
      promise.set_value(
          std::make_shared<const assess::FittedAssessment>(
              assess::fit(data, bio, cfg)));
    } catch (...) {
      promise.set_exception(std::current_exception());
    }
  }
  return future.get();
}

void ModelCache::prefetch(const ObservationSeries& obs, const BiologySeries& bio,
                          const assess::AssessorConfig& cfg, const std::vector<int>& years,
                          int threads) {
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < years.size(); i = next++) {
      try {
        get(obs, bio, cfg, years[i]);
      } catch (const Error&) {
        // Stored in the cache; surfaced to whoever asks for this year.
      }
    }
  };
  if (workers == 1) {
    work();
    return;
  }
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
}

ModelProvider ModelCache::provider(const ObservationSeries& obs, const BiologySeries& bio,
                                   const assess::AssessorConfig& cfg) {
  return [this, &obs, &bio, cfg](int last_year) { return get(obs, bio, cfg, last_year); };
}

std::size_t ModelCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

std::size_t ModelCache::fits() const {
  std::lock_guard lock(mutex_);
  return fits_;
}

}  // namespace stockhybrid::hybrid
