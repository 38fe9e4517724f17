#include <cmath>
#include <complex>
#include <random>

#include <Eigen/Eigenvalues>

#include "amc/channel.hpp"
#include "doctest.h"

using namespace amc;

namespace {

ComplexMatrix random_matrix(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, std::sqrt(0.5));
  ComplexMatrix m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = {n(rng), n(rng)};
  return m;
}

ChannelConfig gm_config(double speed_kmh) {
  ChannelConfig c;
  c.speed_kmh = speed_kmh;
  c.rank = 1;
  return c;
}

// Per-layer SINR from the explicit MMSE filter G = A^H (A A^H + noise I)^-1:
// |g_l a_l|^2 / (sum_{j != l} |g_l a_j|^2 + noise ||g_l||^2).
std::vector<double> mmse_filter_sinr(const ComplexMatrix& a, double noise) {
  const auto r = a.rows();
  const ComplexMatrix g =
      a.adjoint() * (a * a.adjoint() + noise * ComplexMatrix::Identity(r, r)).inverse();
  std::vector<double> out;
  for (Eigen::Index l = 0; l < a.cols(); ++l) {
    const auto gl = g.row(l);
    const double signal = std::norm((gl * a.col(l))(0, 0));
    double interference = noise * gl.squaredNorm();
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      if (j != l) interference += std::norm((gl * a.col(j))(0, 0));
    out.push_back(signal / interference);
  }
  return out;
}

}  // namespace

TEST_CASE("config validation") {
  ChannelConfig c;
  CHECK_NOTHROW(c.validate());
  c.rank = 5;
  CHECK_THROWS(c.validate());
  c = ChannelConfig{};
  c.sounding_period_s = 0.0025;
  c.tti_s = 0.001;
  CHECK_THROWS(c.validate());
  c = ChannelConfig{};
  c.tx_antennas = 2;
  CHECK_THROWS(c.validate());
}

TEST_CASE("doppler correlation for 3 km/h at 3.5 GHz") {
  const ChannelConfig c = gm_config(3.0);
  const double fd = c.speed_mps() * c.carrier_hz / kSpeedOfLight;
  // Reference numbers were evaluated with c = 3e8, hence the looser tolerances.
  CHECK(fd == doctest::Approx(9.722).epsilon(1e-3));
  CHECK(coherence_time_s(c.speed_mps(), c.carrier_hz) * 1e3 == doctest::Approx(43.51).epsilon(2e-3));
  CHECK(c.correlation() == doctest::Approx(0.97728).epsilon(1e-4));
  CHECK(gm_config(0.0).correlation() == 1.0);
}

TEST_CASE("zero speed freezes the gauss-markov state exactly") {
  Channel ch(gm_config(0.0), 9);
  const std::vector<double> before(ch.true_sinr_db().begin(), ch.true_sinr_db().end());
  for (int i = 0; i < 100; ++i) ch.advance();
  for (std::size_t r = 0; r < before.size(); ++r) CHECK(ch.true_sinr_db()[r] == before[r]);
}

TEST_CASE("gauss-markov stationary moments and lag-1 autocorrelation") {
  ChannelConfig c = gm_config(3.0);
  Channel ch(c, 1234);
  const double rho = c.correlation();
  const int n = 100000;
  std::vector<double> xs(n);
  for (int i = 0; i < n; ++i) {
    xs[i] = ch.true_sinr_db()[0];
    ch.advance();
  }
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= n;
  double var = 0.0, cov = 0.0;
  for (int i = 0; i < n; ++i) {
    var += (xs[i] - mean) * (xs[i] - mean);
    if (i + 1 < n) cov += (xs[i] - mean) * (xs[i + 1] - mean);
  }
  var /= n;
  cov /= (n - 1);
  const double effective_n = n * (1.0 - rho) / (1.0 + rho);
  CHECK(std::abs(mean - c.mean_sinr_db) < 3.0 * c.sinr_std_db / std::sqrt(effective_n));
  CHECK(std::sqrt(var) == doctest::Approx(c.sinr_std_db).epsilon(0.05));
  CHECK(std::abs(cov / var - rho) < 0.01);
}

TEST_CASE("sounding schedule, frozen snapshot and measurement age") {
  ChannelConfig c = gm_config(30.0);
  c.rank = 2;
  Channel ch(c, 5);
  CHECK_THROWS_AS(ch.measure(CqiTable{}), std::logic_error);
  std::vector<std::int64_t> soundings;
  std::vector<double> snapshot;
  for (int t = 0; t < 23; ++t) {
    if (ch.sounding_due()) {
      ch.sound();
      soundings.push_back(ch.tti());
      const Measurement m = ch.measure(CqiTable{});
      CHECK(m.age_ms == 0.0);
      snapshot = m.sounded_sinr_db;
    } else {
      CHECK_THROWS_AS(ch.sound(), std::logic_error);
      const Measurement m = ch.measure(CqiTable{});
      CHECK(m.sounded_sinr_db == snapshot);
      CHECK(m.age_ms == doctest::Approx(static_cast<double>(ch.tti() - soundings.back())));
    }
    ch.advance();
  }
  CHECK(soundings == std::vector<std::int64_t>{0, 5, 10, 15, 20});
}

TEST_CASE("measurement fields") {
  ChannelConfig c = gm_config(0.0);
  c.sinr_std_db = 0.0;
  c.mean_sinr_db = 0.0;
  Channel ch(c, 3);
  ch.sound();
  ch.advance();
  ch.advance();
  ch.advance();
  const Measurement m = ch.measure(CqiTable{});
  CHECK(m.age_ms == 3.0);
  CHECK(m.rsrp_dbm == -60.0);
  CHECK(m.cqi == 5);
  CHECK(m.sounded_sinr_db.size() == 4);
}

TEST_CASE("gauss-markov effective sinr applies the rank penalty") {
  ChannelConfig c = gm_config(0.0);
  c.sinr_std_db = 0.0;
  c.mean_sinr_db = 10.0;
  Channel one(c, 1);
  CHECK(one.true_effective_sinr_db() == doctest::Approx(10.0));
  c.rank = 2;
  Channel two(c, 1);
  CHECK(two.true_effective_sinr_db() == doctest::Approx(6.9897).epsilon(1e-5));
}

TEST_CASE("determinism: same seed, same trajectory") {
  for (ChannelMode mode : {ChannelMode::gauss_markov, ChannelMode::mimo}) {
    ChannelConfig c = gm_config(60.0);
    c.mode = mode;
    c.tx_antennas = 8;
    Channel a(c, 77), b(c, 77);
    for (int t = 0; t < 50; ++t) {
      if (a.sounding_due()) {
        a.sound();
        b.sound();
      }
      CHECK(a.true_effective_sinr_db() == b.true_effective_sinr_db());
      a.advance();
      b.advance();
    }
  }
}

TEST_CASE("svd precoder: diagonal case") {
  ComplexMatrix h(2, 2);
  h << 2.0, 0.0, 0.0, 1.0;
  const ComplexMatrix w = svd_precoder(h, 1);
  CHECK(std::abs(w(0, 0)) == doctest::Approx(1.0));
  CHECK(std::abs(w(1, 0)) == doctest::Approx(0.0));
}

TEST_CASE("svd precoder: orthonormal columns and captured energy") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const ComplexMatrix h = random_matrix(4, 8, rng);
    const ComplexMatrix w = svd_precoder(h, 2);
    const ComplexMatrix gram = w.adjoint() * w;
    CHECK((gram - ComplexMatrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-9);
    // Independent route: top eigenvalues of H^H H are the squared singular values.
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(h.adjoint() * h);
    const auto& ev = eig.eigenvalues();  // ascending
    const double top2 = ev(ev.size() - 1) + ev(ev.size() - 2);
    CHECK((h * w).squaredNorm() == doctest::Approx(top2).epsilon(1e-9));
  }
}

TEST_CASE("svd precoder: rank-deficient channel is completed and flagged") {
  ComplexMatrix h = ComplexMatrix::Zero(2, 4);
  h(0, 0) = 1.0;
  h(1, 0) = 2.0;  // rank 1
  bool deficient = false;
  const ComplexMatrix w = svd_precoder(h, 2, &deficient);
  CHECK(deficient);
  CHECK((w.adjoint() * w - ComplexMatrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-9);
  CHECK_THROWS(svd_precoder(h, 3));
}

TEST_CASE("post-detection sinr: closed-form cases") {
  ComplexMatrix eye = ComplexMatrix::Identity(2, 2);
  const auto s = post_detection_sinr_db(eye, eye, 1.0);
  CHECK(s[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(s[1] == doctest::Approx(0.0).epsilon(1e-12));

  ComplexMatrix h(3, 1);
  h << std::complex<double>(1.0, 1.0), 2.0, std::complex<double>(0.0, -0.5);
  ComplexMatrix one = ComplexMatrix::Identity(1, 1);
  const double noise = 0.7;
  const auto mf = post_detection_sinr_db(h, one, noise);
  CHECK(std::pow(10.0, mf[0] / 10.0) == doctest::Approx(h.squaredNorm() / noise).epsilon(1e-12));
  CHECK_THROWS(post_detection_sinr_db(h, one, 0.0));
}

TEST_CASE("post-detection sinr matches the explicit MMSE filter") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> dim(1, 4);
  std::uniform_real_distribution<double> noise_db(-10.0, 10.0);
  for (int trial = 0; trial < 100; ++trial) {
    const int t = dim(rng);
    const int r = std::uniform_int_distribution<int>(1, t)(rng);
    const int l = std::uniform_int_distribution<int>(1, r)(rng);
    const ComplexMatrix h = random_matrix(r, t, rng);
    const ComplexMatrix w = svd_precoder(random_matrix(r, t, rng), l);
    const double noise = std::pow(10.0, noise_db(rng) / 10.0);
    const auto got = post_detection_sinr_db(h, w, noise);
    const auto want = mmse_filter_sinr(h * w, noise);
    for (int i = 0; i < l; ++i)
      CHECK(std::pow(10.0, got[i] / 10.0) == doctest::Approx(want[i]).epsilon(1e-8));
  }
}

TEST_CASE("mimo mode: precoder orthonormal after every sounding") {
  ChannelConfig c = gm_config(60.0);
  c.mode = ChannelMode::mimo;
  c.tx_antennas = 8;
  c.rank = 2;
  Channel ch(c, 8);
  for (int t = 0; t < 200; ++t) {
    if (ch.sounding_due()) {
      ch.sound();
      const ComplexMatrix& w = ch.precoder();
      CHECK((w.adjoint() * w - ComplexMatrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-9);
    }
    ch.advance();
  }
}

TEST_CASE("mimo mode at zero speed: stale precoder equals fresh one") {
  ChannelConfig c = gm_config(0.0);
  c.mode = ChannelMode::mimo;
  c.tx_antennas = 8;
  c.rank = 2;
  Channel ch(c, 21);
  ch.sound();
  const double fresh = ch.true_effective_sinr_db();
  for (int t = 1; t < 5; ++t) {
    ch.advance();
    CHECK(ch.true_effective_sinr_db() == fresh);
  }
}

TEST_CASE("mimo mode: channel aging lowers the effective sinr on average") {
  ChannelConfig c = gm_config(30.0);
  c.mode = ChannelMode::mimo;
  c.tx_antennas = 8;
  c.rank = 2;
  const double noise = c.mimo_noise() * c.rank;
  double fresh_sum = 0.0, stale_sum = 0.0;
  const int runs = 1000;
  for (int run = 0; run < runs; ++run) {
    Channel ch(c, 1000 + run);
    ch.sound();
    const ComplexMatrix stale_w = ch.precoder();
    for (int t = 0; t < 5; ++t) ch.advance();
    const auto fresh = post_detection_sinr_db(ch.h(), svd_precoder(ch.h(), 2), noise);
    const auto stale = post_detection_sinr_db(ch.h(), stale_w, noise);
    fresh_sum += (fresh[0] + fresh[1]) / 2.0;
    stale_sum += (stale[0] + stale[1]) / 2.0;
  }
  CHECK(fresh_sum / runs >= stale_sum / runs);
}
