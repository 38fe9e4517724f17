#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <iosfwd>
#include <random>
#include <span>
#include <vector>

#include "amc/measurement.hpp"

namespace amc {

/// Raw feature layout: [sinr_0 .. sinr_{R-1}, cqi, age_ms, rsrp_dbm, mcs].
std::vector<double> make_features(const Measurement& meas, int mcs);
inline std::size_t feature_count(int rx_antennas) { return static_cast<std::size_t>(rx_antennas) + 4; }

/// One transmission: features with the mcs that was actually sent, and the outcome.
struct Sample {
  std::vector<double> features;
  bool ack = false;
  std::int64_t tti = 0;

  int mcs() const;
  bool operator==(const Sample&) const = default;
};

/// Bounded FIFO: the newest sample evicts the oldest once capacity is reached.
class SampleBuffer {
 public:
  explicit SampleBuffer(std::size_t capacity);

  void push(Sample sample);
  /// Draws one uniform from `rng`; pushes when it falls below `rate`.
  bool maybe_push(Sample sample, double rate, std::mt19937_64& rng);

  std::size_t size() const { return samples_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return samples_.empty(); }
  bool full() const { return samples_.size() == capacity_; }
  std::uint64_t inserted() const { return inserted_; }

  const Sample& operator[](std::size_t i) const { return samples_[i]; }
  auto begin() const { return samples_.begin(); }
  auto end() const { return samples_.end(); }

  /// Bytes reserved for a full buffer of `feature_count`-wide samples.
  static std::size_t capacity_bytes(std::size_t capacity, std::size_t feature_count);
  std::size_t memory_bytes() const;

 private:
  std::size_t capacity_;
  std::deque<Sample> samples_;
  std::uint64_t inserted_ = 0;
};

/// Sample-log CSV: tti,sinr_0..sinr_{R-1},cqi,age_ms,rsrp_dbm,mcs,ack
void write_samples_header(std::ostream& os, int rx_antennas);
void write_sample_row(std::ostream& os, const Sample& sample);
void dump_csv(std::ostream& os, const SampleBuffer& buffer, int rx_antennas);

}  // namespace amc
