#include "phtomo/sim/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "phtomo/errors.hpp"

namespace phtomo {
namespace {

constexpr double kVacuumSigma = 0.70710678118654752440;  // sqrt(1/2)

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += a[j] * b[j];
  return s;
}

}  // namespace

std::uint64_t trace_substream_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(splitmix64(seed) ^ (index * 0xd1342543de82ef95ULL + 0x632be59bd9b4e019ULL));
}

void SimulatorConfig::validate() const {
  if (!(efficiency >= 0.0 && efficiency <= 1.0)) throw InvalidInput("SimulatorConfig: efficiency must lie in [0, 1]");
  if (detector_bandwidth && !(*detector_bandwidth > 0.0)) {
    throw InvalidInput("SimulatorConfig: detector bandwidth must be positive");
  }
  if (!(background_noise_rms >= 0.0)) throw InvalidInput("SimulatorConfig: background rms must be >= 0");
  if (!(background_correlation_time >= 0.0)) {
    throw InvalidInput("SimulatorConfig: background correlation time must be >= 0");
  }
  if (!std::isfinite(detuning) || !std::isfinite(dc_bias)) {
    throw InvalidInput("SimulatorConfig: detuning and dc_bias must be finite");
  }
}

TraceSampler::TraceSampler(const TemporalDensityMatrix& rho, SimulatorConfig config)
    : grid_(rho.grid()), config_(config), times_(rho.grid().times()) {
  config_.validate();
  const Eigensystem eig = eigendecompose(rho);
  std::vector<Eigen::Index> kept;
  double total = 0.0;
  for (Eigen::Index i = 0; i < eig.eigenvalues.size(); ++i) {
    if (eig.eigenvalues(i) > 0.0) {
      kept.push_back(i);
      total += eig.eigenvalues(i);
      cumulative_.push_back(total);
    }
  }
  for (double& c : cumulative_) c /= total;
  modes_.resize(eig.eigenvectors.rows(), static_cast<Eigen::Index>(kept.size()));
  for (std::size_t k = 0; k < kept.size(); ++k) modes_.col(static_cast<Eigen::Index>(k)) = eig.eigenvectors.col(kept[k]);
}

TraceSampler::TraceSampler(const TimeGrid& grid, SimulatorConfig config)
    : grid_(grid), config_(config), times_(grid.times()) {
  config_.efficiency = 0.0;
  config_.validate();
}

void TraceSampler::sample_into(std::uint64_t trace_index, std::span<double> x) const {
  const std::size_t n = grid_.bin_count();
  if (x.size() != n) throw InvalidInput("TraceSampler: output span has wrong length");

  std::mt19937_64 rng(trace_substream_seed(config_.rng_seed, trace_index));
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  const double u_mode = uniform(rng);
  const double u_loss = uniform(rng);
  const double u_theta = uniform(rng);
  for (std::size_t j = 0; j < n; ++j) x[j] = kVacuumSigma * normal(rng);

  if (!cumulative_.empty() && u_loss < config_.efficiency) {
    const auto pick = std::upper_bound(cumulative_.begin(), cumulative_.end(), u_mode) - cumulative_.begin();
    const Eigen::Index mode = std::min<Eigen::Index>(pick, modes_.cols() - 1);
    const double theta0 = config_.randomize_theta0 ? kTwoPi * u_theta : config_.theta0;

    std::vector<double> re(n), im(n);
    for (std::size_t j = 0; j < n; ++j) {
      const Complex w = modes_(static_cast<Eigen::Index>(j), mode) *
                        std::polar(1.0, -(config_.detuning * times_(static_cast<Eigen::Index>(j)) + theta0));
      re[j] = w.real();
      im[j] = w.imag();
    }

    // Orthonormal basis (e1, e2) of span{Re w, Im w}, anchored on the longer vector.
    const double nre = std::sqrt(dot(re, re));
    const double nim = std::sqrt(dot(im, im));
    std::vector<double>& first = (nre >= nim) ? re : im;
    std::vector<double>& second = (nre >= nim) ? im : re;
    const double nfirst = std::max(nre, nim);
    std::vector<double> e1(n), e2(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) e1[j] = first[j] / nfirst;
    const double along = dot(e1, second);
    double nperp2 = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      e2[j] = second[j] - along * e1[j];
      nperp2 += e2[j] * e2[j];
    }
    const double nperp = std::sqrt(nperp2);
    const bool planar = nperp > 1e-12 * nfirst;

    // Quadratic form |w.x|^2 restricted to the plane; first = nfirst e1,
    // second = along e1 + nperp e2.
    const double m11 = nfirst * nfirst + along * along;
    const double m22 = planar ? nperp * nperp : 0.0;
    const double m12 = planar ? along * nperp : 0.0;

    double c1 = 1.0, c2 = 0.0;
    const double u_axis = uniform(rng);
    if (planar) {
      const double half_trace = 0.5 * (m11 + m22);
      const double radius = std::hypot(0.5 * (m11 - m22), m12);
      const double lam1 = half_trace + radius;
      const double lam2 = std::max(half_trace - radius, 0.0);
      // Principal axis for lam1.
      double a1 = m12, a2 = lam1 - m11;
      const double b1 = lam1 - m22, b2 = m12;
      if (std::hypot(b1, b2) > std::hypot(a1, a2)) {
        a1 = b1;
        a2 = b2;
      }
      const double na = std::hypot(a1, a2);
      if (na > 0.0) {
        a1 /= na;
        a2 /= na;
      } else {
        a1 = 1.0;
        a2 = 0.0;
      }
      if (u_axis * (lam1 + lam2) < lam1) {
        c1 = a1;
        c2 = a2;
      } else {
        c1 = -a2;
        c2 = a1;
      }
      for (std::size_t j = 0; j < n; ++j) e2[j] /= nperp;
    }

    std::gamma_distribution<double> gamma(1.5, 1.0);
    const double magnitude = std::sqrt(gamma(rng));
    const double y = (uniform(rng) < 0.5) ? -magnitude : magnitude;

    double projection = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double f = c1 * e1[j] + (planar ? c2 * e2[j] : 0.0);
      e1[j] = f;
      projection += x[j] * f;
    }
    for (std::size_t j = 0; j < n; ++j) x[j] += (y - projection) * e1[j];
  }

  apply_detector_and_noise(x, rng);
}

void TraceSampler::apply_detector_and_noise(std::span<double> x, std::mt19937_64& rng) const {
  std::normal_distribution<double> normal(0.0, 1.0);
  const double dt = grid_.bin_width();
  if (config_.detector_bandwidth) {
    // Causal single pole, y_j = a y_{j-1} + (1 - a) x_j, started from the
    // stationary state of filtered vacuum.
    const double a = std::exp(-kTwoPi * *config_.detector_bandwidth * dt);
    double y = kVacuumSigma * std::sqrt((1.0 - a) / (1.0 + a)) * normal(rng);
    for (double& v : x) {
      y = a * y + (1.0 - a) * v;
      v = y;
    }
  }
  if (config_.background_noise_rms > 0.0) {
    const double sigma = config_.background_noise_rms;
    const double r =
        config_.background_correlation_time > 0.0 ? std::exp(-dt / config_.background_correlation_time) : 0.0;
    const double innovation = sigma * std::sqrt(1.0 - r * r);
    double b = sigma * normal(rng);
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (j > 0) b = r * b + innovation * normal(rng);
      x[j] += b;
    }
  }
  if (config_.dc_bias != 0.0) {
    for (double& v : x) v += config_.dc_bias;
  }
}

QuadratureTraceBatch TraceSampler::sample(std::uint64_t first_index, std::size_t count, unsigned workers) const {
  QuadratureTraceBatch batch{grid_, config_.detuning, RowMajorMatrix(static_cast<Eigen::Index>(count),
                                                                      static_cast<Eigen::Index>(grid_.bin_count())),
                             config_, first_index};
  const std::size_t n = grid_.bin_count();
  auto run = [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      sample_into(first_index + r, std::span<double>(batch.traces.row(static_cast<Eigen::Index>(r)).data(), n));
    }
  };
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  if (workers == 1) {
    run(0, count);
  } else {
    std::vector<std::jthread> pool;
    const std::size_t per = (count + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
      const std::size_t begin = std::min(count, w * per);
      const std::size_t end = std::min(count, begin + per);
      pool.emplace_back(run, begin, end);
    }
  }
  return batch;
}

QuadratureTraceBatch sample_traces(const TemporalDensityMatrix& rho, const SimulatorConfig& config,
                                   std::size_t n_traces) {
  if (n_traces == 0) throw InvalidInput("sample_traces: n_traces must be at least 1");
  return TraceSampler(rho, config).sample(0, n_traces);
}

QuadratureTraceBatch vacuum_batch(const SimulatorConfig& config, std::size_t n_traces, const TimeGrid& grid) {
  if (n_traces == 0) throw InvalidInput("vacuum_batch: n_traces must be at least 1");
  return TraceSampler(grid, config).sample(0, n_traces);
}

}  // namespace phtomo
