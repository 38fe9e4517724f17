#include "amc/buffer.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

#include "amc/report.hpp"

namespace amc {

std::vector<double> make_features(const Measurement& meas, int mcs) {
  std::vector<double> x;
  x.reserve(meas.sounded_sinr_db.size() + 4);
  x.insert(x.end(), meas.sounded_sinr_db.begin(), meas.sounded_sinr_db.end());
  x.push_back(static_cast<double>(meas.cqi));
  x.push_back(meas.age_ms);
  x.push_back(meas.rsrp_dbm);
  x.push_back(static_cast<double>(mcs));
  return x;
}

int Sample::mcs() const { return static_cast<int>(std::lround(features.back())); }

SampleBuffer::SampleBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw std::invalid_argument("sample buffer capacity must be positive");
}

void SampleBuffer::push(Sample sample) {
  if (samples_.size() == capacity_) samples_.pop_front();
  samples_.push_back(std::move(sample));
  ++inserted_;
}

bool SampleBuffer::maybe_push(Sample sample, double rate, std::mt19937_64& rng) {
  if (!(rate > 0.0 && rate <= 1.0)) throw std::invalid_argument("subsampling rate must be in (0, 1]");
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  if (u >= rate) return false;
  push(std::move(sample));
  return true;
}

std::size_t SampleBuffer::capacity_bytes(std::size_t capacity, std::size_t feature_count) {
  return capacity * (sizeof(Sample) + feature_count * sizeof(double));
}

std::size_t SampleBuffer::memory_bytes() const {
  return capacity_bytes(capacity_, samples_.empty() ? 0 : samples_.front().features.size());
}

void write_samples_header(std::ostream& os, int rx_antennas) {
  os << "tti";
  for (int r = 0; r < rx_antennas; ++r) os << ",sinr_" << r;
  os << ",cqi,age_ms,rsrp_dbm,mcs,ack\n";
}

void write_sample_row(std::ostream& os, const Sample& sample) {
  os << sample.tti;
  const std::size_t n = sample.features.size();
  for (std::size_t i = 0; i + 1 < n; ++i) os << ',' << format_real(sample.features[i]);
  os << ',' << sample.mcs() << ',' << (sample.ack ? 1 : 0) << '\n';
}

void dump_csv(std::ostream& os, const SampleBuffer& buffer, int rx_antennas) {
  write_samples_header(os, rx_antennas);
  for (const auto& s : buffer) write_sample_row(os, s);
}

}  // namespace amc
