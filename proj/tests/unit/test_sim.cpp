#include <cmath>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "phtomo/accumulation/autocorrelation.hpp"
#include "phtomo/errors.hpp"
#include "phtomo/modes/mode_families.hpp"
#include "phtomo/sim/simulator.hpp"
#include "phtomo/sim/trace_io.hpp"
#include "support/oracles.hpp"
#include "support/temp_dir.hpp"

using namespace phtomo;

namespace {

const double kGamma = mhz_to_rad_s(7.0);

// Short grid with the same 2 ns bins; keeps Monte Carlo tests quick.
TimeGrid small_grid() { return TimeGrid(2e-9, 40, 30); }

TemporalDensityMatrix small_pure() { return tmf_to_tdm(rising_exponential_tmf(kGamma, small_grid())); }

RMatrix reduced_mean(const QuadratureTraceBatch& b) {
  RMatrix m = accumulate(b).values;
  m.diagonal().array() -= 0.5;
  return m;
}

}  // namespace

TEST(SimulatorConfig, Validation) {
  SimulatorConfig c;
  c.efficiency = 1.5;
  EXPECT_THROW(c.validate(), InvalidInput);
  c.efficiency = 0.5;
  c.background_noise_rms = -1.0;
  EXPECT_THROW(c.validate(), InvalidInput);
  c.background_noise_rms = 0.0;
  c.detector_bandwidth = 0.0;
  EXPECT_THROW(c.validate(), InvalidInput);
}

TEST(Sampler, VacuumVarianceIsHalf) {
  const std::size_t n = 100000;
  SimulatorConfig c;
  c.rng_seed = 11;
  const auto batch = vacuum_batch(c, n, small_grid());
  const RMatrix m = accumulate(batch).values;
  const double se = std::sqrt(0.5 / n);
  for (Eigen::Index j = 0; j < m.rows(); ++j) EXPECT_NEAR(m(j, j), 0.5, 5 * se);
  RMatrix off = m;
  off.diagonal().setZero();
  EXPECT_LT(off.cwiseAbs().maxCoeff(), 5.0 / (2.0 * std::sqrt(double(n))));
}

TEST(Sampler, EfficiencyZeroEqualsVacuum) {
  SimulatorConfig c;
  c.rng_seed = 3;
  c.efficiency = 0.0;
  const auto a = sample_traces(small_pure(), c, 50);
  const auto b = vacuum_batch(c, 50, small_grid());
  EXPECT_EQ(a.traces, b.traces);
}

TEST(Sampler, PhotonAutocorrelationMatchesDensityMatrix) {
  const std::size_t n = 200000;
  SimulatorConfig c;
  c.rng_seed = 21;
  const auto rho = small_pure();
  const RMatrix diff = reduced_mean(sample_traces(rho, c, n)) - rho.matrix().real();
  EXPECT_LT(diff.cwiseAbs().maxCoeff(), 5.0 / (2.0 * std::sqrt(double(n))));
}

TEST(Sampler, DetunedMixedStateMatchesModel) {
  const std::size_t n = 200000;
  const auto g = small_grid();
  SimulatorConfig c;
  c.rng_seed = 5;
  c.detuning = mhz_to_rad_s(15.0);
  const auto rho = apply_virtual_shift(eom_mixed_tdm(kGamma, EomParams{}, g), mhz_to_rad_s(5.0));
  const RMatrix expected = oracle::model_loop(rho.matrix(), g, c.detuning);
  const RMatrix diff = reduced_mean(sample_traces(rho, c, n)) - expected;
  EXPECT_LT(diff.cwiseAbs().maxCoeff(), 5.0 / (2.0 * std::sqrt(double(n))));
}

TEST(Sampler, ProjectedQuadratureVarianceIsThreeHalves) {
  const std::size_t n = 200000;
  const auto g = small_grid();
  const auto phi = rising_exponential_tmf(kGamma, g);
  SimulatorConfig c;
  c.rng_seed = 8;
  c.randomize_theta0 = false;
  c.theta0 = 0.0;
  const auto batch = sample_traces(tmf_to_tdm(phi), c, n);
  const RVector v = phi.amplitudes().real();
  const RVector y = batch.traces * v;
  const double var = y.squaredNorm() / n;
  const double oracle_value = oracle::photon_quadrature_variance();
  EXPECT_NEAR(oracle_value, 1.5, 1e-10);
  // var(y^2) = E y^4 - (E y^2)^2 = 15/4 - 9/4
  EXPECT_NEAR(var, oracle_value, 3.0 * std::sqrt(1.5 / n));
}

TEST(Sampler, FixedAndRandomPhaseShareTheLimit) {
  const std::size_t n = 200000;
  const auto g = small_grid();
  const auto rho = small_pure();
  SimulatorConfig c;
  c.rng_seed = 13;
  c.detuning = mhz_to_rad_s(10.0);
  const RMatrix expected = oracle::model_loop(rho.matrix(), g, c.detuning);
  const double tol = 5.0 / (2.0 * std::sqrt(double(n)));
  EXPECT_LT((reduced_mean(sample_traces(rho, c, n)) - expected).cwiseAbs().maxCoeff(), tol);
  c.randomize_theta0 = false;
  c.theta0 = 1.1;
  EXPECT_LT((reduced_mean(sample_traces(rho, c, n)) - expected).cwiseAbs().maxCoeff(), tol);
}

TEST(Sampler, LossScalesReducedAutocorrelation) {
  const std::size_t n = 200000;
  const auto rho = small_pure();
  SimulatorConfig c;
  c.rng_seed = 17;
  c.efficiency = 0.5;
  const RMatrix half = reduced_mean(sample_traces(rho, c, n));
  const RMatrix diff = half - 0.5 * rho.matrix().real();
  EXPECT_LT(diff.cwiseAbs().maxCoeff(), 5.0 / (2.0 * std::sqrt(double(n))));
}

TEST(Sampler, Deterministic) {
  SimulatorConfig c;
  c.rng_seed = 99;
  c.detector_bandwidth = 100e6;
  c.background_noise_rms = 0.1;
  c.background_correlation_time = 5e-9;
  const auto rho = small_pure();
  const auto a = sample_traces(rho, c, 300);
  const auto b = sample_traces(rho, c, 300);
  EXPECT_EQ(a.traces, b.traces);
  c.rng_seed = 100;
  EXPECT_NE(sample_traces(rho, c, 300).traces, a.traces);
}

TEST(Sampler, ParallelScheduleMatchesSequential) {
  SimulatorConfig c;
  c.rng_seed = 4;
  const TraceSampler sampler(small_pure(), c);
  const auto seq = sampler.sample(0, 257, 1);
  const auto par = sampler.sample(0, 257, 3);
  EXPECT_EQ(seq.traces, par.traces);
  const auto tail = sampler.sample(100, 157, 2);
  EXPECT_EQ(tail.traces, seq.traces.bottomRows(157));
}

TEST(Sampler, FourthMomentBounded) {
  const std::size_t n = 100000;
  SimulatorConfig c;
  c.rng_seed = 31;
  const auto batch = sample_traces(small_pure(), c, n);
  const Eigen::ArrayXXd x4 = batch.traces.array().pow(4);
  for (Eigen::Index j = 0; j < x4.cols(); ++j) {
    const double mean = x4.col(j).mean();
    const double sd = std::sqrt((x4.col(j) - mean).square().mean());
    EXPECT_LE(mean, 5.0 + 3.0 * sd / std::sqrt(double(n))) << j;
  }
}

TEST(Sampler, FiniteWithAllOptions) {
  SimulatorConfig c;
  c.rng_seed = 2;
  c.efficiency = 0.53;
  c.detector_bandwidth = 100e6;
  c.dc_bias = 0.2;
  c.background_noise_rms = 0.3;
  c.background_correlation_time = 10e-9;
  const auto batch = sample_traces(eom_mixed_tdm(kGamma, EomParams{}, small_grid()), c, 500);
  EXPECT_TRUE(batch.traces.allFinite());
  EXPECT_EQ(batch.traces.rows(), 500);
  EXPECT_EQ(batch.detuning, c.detuning);
}

TEST(VacuumBatch, DcBiasAddsSquare) {
  const std::size_t n = 50000;
  SimulatorConfig c;
  c.rng_seed = 6;
  const double b = 0.7;
  const RMatrix plain = accumulate(vacuum_batch(c, n, small_grid())).values;
  c.dc_bias = b;
  const RMatrix biased = accumulate(vacuum_batch(c, n, small_grid())).values;
  // Same underlying noise, so the difference is b^2 plus a cross term of mean zero.
  const RMatrix diff = biased - plain;
  EXPECT_NEAR(diff.mean(), b * b, 5.0 * b / std::sqrt(double(n)));
}

TEST(VacuumBatch, FilteredNoiseDecaysExponentially) {
  const std::size_t n = 200000;
  const auto g = small_grid();
  SimulatorConfig c;
  c.rng_seed = 12;
  c.detector_bandwidth = 100e6;
  const RMatrix m = accumulate(vacuum_batch(c, n, g)).values;
  const double a = std::exp(-kTwoPi * 100e6 * g.bin_width());
  for (std::size_t lag = 0; lag < 6; ++lag) {
    double mean = 0.0;
    const auto count = static_cast<double>(g.bin_count() - lag);
    for (std::size_t k = 0; k + lag < g.bin_count(); ++k) {
      mean += m(static_cast<Eigen::Index>(k + lag), static_cast<Eigen::Index>(k));
    }
    mean /= count;
    EXPECT_NEAR(mean, oracle::filtered_vacuum_autocov(a, lag), 3e-3) << lag;
  }
}

TEST(VacuumBatch, StandardErrorOfMeanEntry) {
  const std::size_t n = 2000;
  const int repeats = 40;
  const TimeGrid g(2e-9, 12, 4);
  std::vector<RMatrix> means;
  for (int r = 0; r < repeats; ++r) {
    SimulatorConfig c;
    c.rng_seed = 1000 + r;
    means.push_back(accumulate(vacuum_batch(c, n, g)).values);
  }
  double var = 0.0;
  int count = 0;
  for (Eigen::Index j = 0; j < 12; ++j) {
    for (Eigen::Index k = 0; k < j; ++k) {
      double mu = 0.0;
      for (const auto& m : means) mu += m(j, k);
      mu /= repeats;
      for (const auto& m : means) var += (m(j, k) - mu) * (m(j, k) - mu) / (repeats - 1);
      ++count;
    }
  }
  const double sd = std::sqrt(var / count);
  EXPECT_NEAR(sd / (1.0 / (2.0 * std::sqrt(double(n)))), 1.0, 0.2);
}

TEST(TraceFile, RoundTripAndSize) {
  TempDir dir;
  SimulatorConfig c;
  c.rng_seed = 77;
  c.detuning = mhz_to_rad_s(27.0);
  const auto batch = sample_traces(small_pure(), c, 5);
  const auto path = dir.path() / "t.tdmt";
  write_trace_file(path, batch);
  EXPECT_EQ(std::filesystem::file_size(path), 48u + 5u * 40u * 8u);
  const auto back = read_trace_file(path);
  EXPECT_EQ(back.traces, batch.traces);
  EXPECT_EQ(back.grid, batch.grid);
  EXPECT_EQ(back.detuning, batch.detuning);
  EXPECT_EQ(back.config_snapshot.rng_seed, 77u);
}

TEST(TraceFile, HeaderLayout) {
  TempDir dir;
  SimulatorConfig c;
  c.rng_seed = 0x0102030405060708ULL;
  c.detuning = 3.5;
  const auto path = dir.path() / "one.tdmt";
  write_trace_file(path, sample_traces(small_pure(), c, 1));
  std::ifstream in(path, std::ios::binary);
  unsigned char h[48];
  in.read(reinterpret_cast<char*>(h), 48);
  EXPECT_EQ(std::string(reinterpret_cast<char*>(h), 4), "TDMT");
  auto u32 = [&](int off) {
    return std::uint32_t(h[off]) | std::uint32_t(h[off + 1]) << 8 | std::uint32_t(h[off + 2]) << 16 |
           std::uint32_t(h[off + 3]) << 24;
  };
  auto u64 = [&](int off) { return std::uint64_t(u32(off)) | std::uint64_t(u32(off + 4)) << 32; };
  EXPECT_EQ(u32(4), 1u);
  EXPECT_EQ(u32(8), 40u);
  EXPECT_EQ(u64(12), 1u);
  EXPECT_EQ(std::bit_cast<double>(u64(20)), 2e-9);
  EXPECT_EQ(u32(28), 30u);
  EXPECT_EQ(std::bit_cast<double>(u64(32)), 3.5);
  EXPECT_EQ(u64(40), 0x0102030405060708ULL);
}

TEST(TraceFile, CorruptFilesRejected) {
  TempDir dir;
  const auto path = dir.path() / "bad.tdmt";
  {
    std::ofstream out(path, std::ios::binary);
    out << "NOPE and some more bytes to pass the header length check......";
  }
  EXPECT_THROW(read_trace_file(path), IoError);
  SimulatorConfig c;
  write_trace_file(path, sample_traces(small_pure(), c, 3));
  std::filesystem::resize_file(path, std::filesystem::file_size(path) - 8);
  EXPECT_THROW(read_trace_file(path), IoError);
  EXPECT_THROW(read_trace_file(dir.path() / "missing.tdmt"), IoError);
}

TEST(TraceFile, StreamingReader) {
  TempDir dir;
  SimulatorConfig c;
  const auto batch = sample_traces(small_pure(), c, 10);
  const auto path = dir.path() / "s.tdmt";
  write_trace_file(path, batch);
  TraceFileReader reader(path);
  EXPECT_EQ(reader.remaining(), 10u);
  const auto first = reader.read(4);
  const auto rest = reader.read(100);
  EXPECT_EQ(first, batch.traces.topRows(4));
  EXPECT_EQ(rest, batch.traces.bottomRows(6));
  EXPECT_EQ(reader.read(1).rows(), 0);
}
