#include "phtomo/reconstruction/iterative.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>

#include "phtomo/errors.hpp"
#include "phtomo/reconstruction/model.hpp"

namespace phtomo {
namespace {

// Cost over all (d, j, k) with weight W_jk (0 for flagged entries).
// Model inner products reduce to sums over (j, k) through
//   sum_d W Re(E_d P) Re(E_d Q) = 1/2 Re sum F.P.Q + D/2 Re sum W.P.conj(Q),
// with F = sum_d W E_d^2, because |E_d| = 1.
class CostModel {
 public:
  struct Eval {
    double cost = 0.0;
    double s = 0.0;
    double mm = 0.0;  // <M, M>
    CMatrix h;        // sum_d W R_d E_d
  };

  CostModel(const ReducedAutocorrelationSet& set, double shift) : n_(static_cast<Eigen::Index>(set.grid().bin_count())) {
    w_.setOnes(n_, n_);
    const auto& flags = set.flagged();
    for (Eigen::Index k = 0; k < n_; ++k) {
      for (Eigen::Index j = 0; j < n_; ++j) {
        if (flags(j, k)) w_(j, k) = 0.0;
      }
    }
    if (w_.sum() == 0.0) throw InvalidInput("reconstruction: every matrix entry is flagged");
    uniform_ = w_.minCoeff() == 1.0;
    wc_ = w_.cast<Complex>();
    f_ = CMatrix::Zero(n_, n_);
    for (const auto& e : set.entries()) {
      e_.push_back(detuning_phases(set.grid(), e.detuning, shift));
      a_.push_back(e.values);
      f_.array() += wc_.array() * e_.back().array().square();
      // E_jk = q_j conj(q_k), q_j = exp(-i w j dt); the square enters the Hessian.
      const double w = e.detuning + shift;
      CVector q2(n_);
      for (Eigen::Index j = 0; j < n_; ++j) {
        const double phase = -2.0 * w * static_cast<double>(j) * set.grid().bin_width();
        q2(j) = Complex(std::cos(phase), std::sin(phase));
      }
      q2_.push_back(std::move(q2));
    }
  }

  /// K_il = <M(v_i v_i^dagger), M(v_l v_l^dagger)> for the columns of vs.
  /// Empty when the weighted form would be too expensive.
  std::optional<RMatrix> p_hessian(const CMatrix& vs) const {
    const Eigen::Index r = vs.cols();
    RMatrix k(r, r);
    if (uniform_) {
      const RMatrix overlap = (vs.adjoint() * vs).cwiseAbs2();
      k = 0.5 * detuning_count() * overlap;
      for (const auto& q2 : q2_) {
        const CMatrix b = vs.transpose() * q2.asDiagonal() * vs;
        k += 0.5 * b.cwiseAbs2();
      }
      return k;
    }
    const Eigen::Index cols = r * (r + 1) / 2;
    if (static_cast<double>(cols) * static_cast<double>(n_) * static_cast<double>(n_) > 3e8) return std::nullopt;
    CMatrix y(n_, cols), z(n_, cols);
    std::vector<std::pair<Eigen::Index, Eigen::Index>> idx;
    for (Eigen::Index i = 0; i < r; ++i) {
      for (Eigen::Index l = i; l < r; ++l) {
        const auto c = static_cast<Eigen::Index>(idx.size());
        y.col(c) = vs.col(i).cwiseProduct(vs.col(l));
        z.col(c) = vs.col(i).cwiseProduct(vs.col(l).conjugate());
        idx.emplace_back(i, l);
      }
    }
    const CMatrix fy = f_ * y.conjugate();
    const CMatrix wz = wc_ * z.conjugate();
    for (Eigen::Index c = 0; c < cols; ++c) {
      const double t1 = (y.col(c).array() * fy.col(c).array()).sum().real();
      const double t2 = (z.col(c).array() * wz.col(c).array()).sum().real();
      const auto [i, l] = idx[static_cast<std::size_t>(c)];
      k(i, l) = k(l, i) = 0.5 * t1 + 0.5 * detuning_count() * t2;
    }
    return k;
  }

  Eigen::Index size() const { return n_; }
  double detuning_count() const { return static_cast<double>(e_.size()); }

  Eval evaluate(const CMatrix& rho) const {
    Eval ev;
    std::vector<RMatrix> m(e_.size());
    double am = 0.0;
    for (std::size_t d = 0; d < e_.size(); ++d) {
      m[d] = (e_[d].array() * rho.array()).real().matrix();
      am += (w_.array() * a_[d].array() * m[d].array()).sum();
      ev.mm += (w_.array() * m[d].array().square()).sum();
    }
    ev.s = ev.mm > 0.0 ? std::max(0.0, am / ev.mm) : 0.0;
    ev.h = CMatrix::Zero(n_, n_);
    for (std::size_t d = 0; d < e_.size(); ++d) {
      const RMatrix r = a_[d] - ev.s * m[d];
      ev.cost += (w_.array() * r.array().square()).sum();
      ev.h.array() += (w_.array() * r.array()).cast<Complex>() * e_[d].array();
    }
    return ev;
  }

  /// <M(P), M(Q)>
  double quad(const CMatrix& p, const CMatrix& q) const {
    return 0.5 * (f_.array() * p.array() * q.array()).sum().real() +
           0.5 * detuning_count() * (wc_.array() * p.array() * q.array().conjugate()).sum().real();
  }

  /// <R, M(P)> for the residual summarized by h.
  static double lin(const CMatrix& h, const CMatrix& p) { return (h.array() * p.array()).sum().real(); }

 private:
  Eigen::Index n_;
  bool uniform_ = true;
  RMatrix w_;
  CMatrix wc_;
  std::vector<CVector> q2_;
  CMatrix f_;
  std::vector<CMatrix> e_;
  std::vector<RMatrix> a_;
};

// Euclidean projection onto the probability simplex.
RVector project_simplex(const RVector& v) {
  std::vector<double> u(v.data(), v.data() + v.size());
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumsum = 0.0, theta = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    cumsum += u[i];
    const double t = (cumsum - 1.0) / static_cast<double>(i + 1);
    if (u[i] - t > 0.0) theta = t;
  }
  return (v.array() - theta).max(0.0).matrix();
}

std::vector<Eigen::Index> support_of(const RVector& p) {
  std::vector<Eigen::Index> idx;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p(i) > 0.0) idx.push_back(i);
  }
  return idx;
}

CMatrix gather(const CMatrix& v, const std::vector<Eigen::Index>& cols) {
  CMatrix out(v.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) out.col(static_cast<Eigen::Index>(c)) = v.col(cols[c]);
  return out;
}

CMatrix build_rho(const CMatrix& v, const RVector& p) {
  const auto idx = support_of(p);
  const CMatrix vs = gather(v, idx);
  RVector ps(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t c = 0; c < idx.size(); ++c) ps(static_cast<Eigen::Index>(c)) = p(idx[c]);
  CMatrix rho = vs * ps.cast<Complex>().asDiagonal() * vs.adjoint();
  return 0.5 * (rho + rho.adjoint());
}

void reorthonormalize(CMatrix& v) {
  Eigen::HouseholderQR<CMatrix> qr(v);
  CMatrix q = qr.householderQ();
  const CMatrix& r = qr.matrixQR();
  for (Eigen::Index k = 0; k < v.cols(); ++k) {
    const Complex d = r(k, k);
    if (std::abs(d) > 0.0) q.col(k) *= d / std::abs(d);
  }
  v = q;
}

// Cayley transform of a random Hermitian matrix with entries of size `scale`.
CMatrix random_unitary(Eigen::Index n, double scale, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  CMatrix k(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    k(j, j) = normal(rng);
    for (Eigen::Index i = j + 1; i < n; ++i) {
      k(i, j) = Complex(normal(rng), normal(rng)) / std::sqrt(2.0);
      k(j, i) = std::conj(k(i, j));
    }
  }
  k *= scale / std::sqrt(static_cast<double>(n));
  const CMatrix id = CMatrix::Identity(n, n);
  const Complex i1(0.0, 1.0);
  return (id - i1 * k).partialPivLu().solve(id + i1 * k);
}

// Cost of a pair rotation from a 5x5 Gram matrix over
// {R0, M(rho0), M(X), M(K1), M(K2)} with the scale refitted.
struct PairCost {
  Eigen::Matrix<double, 5, 5> gram;
  double s0 = 0.0;

  double operator()(double x1, double x2) const {
    const double u = std::hypot(x1, x2);
    const double cu = u > 0.0 ? x1 / u : 1.0;
    const double su = u > 0.0 ? x2 / u : 0.0;
    const double half = std::sin(0.5 * u);
    const std::array<double, 3> c{-2.0 * half * half, std::sin(u) * cu, std::sin(u) * su};
    Eigen::Matrix<double, 5, 1> k0, k1;
    k0 << 1.0, 0.0, -s0 * c[0], -s0 * c[1], -s0 * c[2];
    k1 << 0.0, -1.0, -c[0], -c[1], -c[2];
    const double g00 = k0.dot(gram * k0);
    const double g01 = k0.dot(gram * k1);
    const double g11 = k1.dot(gram * k1);
    if (g11 <= 0.0) return g00;
    double sigma = -g01 / g11;
    if (s0 + sigma < 0.0) sigma = -s0;
    return g00 + 2.0 * sigma * g01 + sigma * sigma * g11;
  }
};

// Grid search followed by compass search in (u cos chi, u sin chi).
std::pair<double, double> minimize_pair(const PairCost& f, double& best) {
  constexpr double kPi = 3.14159265358979323846;
  double bx = 0.0, by = 0.0;
  best = f(0.0, 0.0);
  for (int iu = 1; iu <= 12; ++iu) {
    const double u = iu * kPi / 12.0;
    for (int ic = 0; ic < 12; ++ic) {
      const double chi = ic * kPi / 6.0;
      const double x = u * std::cos(chi), y = u * std::sin(chi);
      const double v = f(x, y);
      if (v < best) {
        best = v;
        bx = x;
        by = y;
      }
    }
  }
  double h = kPi / 24.0;
  while (h > 1e-13) {
    bool moved = false;
    const std::array<std::pair<double, double>, 4> dirs{{{h, 0.0}, {-h, 0.0}, {0.0, h}, {0.0, -h}}};
    for (const auto& [dx, dy] : dirs) {
      const double v = f(bx + dx, by + dy);
      if (v < best) {
        best = v;
        bx += dx;
        by += dy;
        moved = true;
        break;
      }
    }
    if (!moved) h *= 0.5;
  }
  return {bx, by};
}

constexpr double kAdmitBelowGain = 1e-2;

class Optimizer {
 public:
  static constexpr std::size_t kMaxNewDirections = 4;

  Optimizer(const CostModel& model, const ReconstructionOptions& opts, std::size_t cap)
      : model_(model), opts_(opts), cap_(cap), n_(model.size()) {}

  CMatrix v;
  RVector p;
  CMatrix rho;
  CostModel::Eval ev;

  void refresh() {
    rho = build_rho(v, p);
    ev = model_.evaluate(rho);
  }

  CMatrix gradient() const { return (-2.0 * ev.s) * ev.h.conjugate(); }

  void eigenvalue_step(bool admit) {
    if (ev.s <= 0.0) return;
    CMatrix g = gradient();
    auto pos = support_of(p);
    std::vector<Eigen::Index> zero;
    for (Eigen::Index i = 0; i < n_; ++i) {
      if (!(p(i) > 0.0)) zero.push_back(i);
    }
    std::vector<Eigen::Index> support = pos;
    if (admit && !zero.empty() && pos.size() < cap_) {
      // Rotate the null block to diagonalize the gradient there; its most
      // negative directions are the candidates to enter the support.
      const CMatrix z = gather(v, zero);
      Eigen::SelfAdjointEigenSolver<CMatrix> es(z.adjoint() * g * z);
      const CMatrix zr = z * es.eigenvectors();
      for (std::size_t c = 0; c < zero.size(); ++c) v.col(zero[c]) = zr.col(static_cast<Eigen::Index>(c));
      // Optimality on the simplex: every used direction has the same
      // gradient lambda and unused ones have gradient >= lambda. Admit a few
      // of the most violating null directions.
      double lambda = 0.0;
      for (const auto i : pos) lambda += p(i) * (v.col(i).adjoint() * g * v.col(i))(0).real();
      const std::size_t extra = std::min({cap_ - pos.size(), zero.size(), kMaxNewDirections});
      for (std::size_t c = 0; c < extra; ++c) {
        if (es.eigenvalues()(static_cast<Eigen::Index>(c)) < lambda) support.push_back(zero[c]);
      }
    }
    const CMatrix vs = gather(v, support);
    const auto m = static_cast<Eigen::Index>(support.size());
    RVector ps(m);
    for (Eigen::Index c = 0; c < m; ++c) ps(c) = p(support[static_cast<std::size_t>(c)]);

    if (const auto k = model_.p_hessian(vs)) {
      solve_weights(vs, support, ps, g, *k);
      return;
    }
    if (step_ <= 0.0) step_ = 1.0 / (2.0 * ev.s * ev.s * model_.detuning_count());
    for (int inner = 0; inner < 8; ++inner) {
      const RVector grad = (vs.conjugate().array() * (g * vs).array()).colwise().sum().real().transpose();
      bool accepted = false;
      double t = step_;
      for (int bt = 0; bt < 40; ++bt) {
        const RVector q = project_simplex(ps - t * grad);
        const double decrease = grad.dot(q - ps);
        if ((q - ps).cwiseAbs().maxCoeff() == 0.0 || decrease >= 0.0) break;
        RVector trial = p;
        for (Eigen::Index c = 0; c < m; ++c) trial(support[static_cast<std::size_t>(c)]) = q(c);
        const CMatrix trial_rho = build_rho(v, trial);
        auto trial_ev = model_.evaluate(trial_rho);
        if (trial_ev.cost <= ev.cost + 1e-4 * decrease) {
          p = trial;
          ps = q;
          rho = trial_rho;
          const double before = ev.cost;
          ev = std::move(trial_ev);
          accepted = true;
          step_ = bt == 0 ? 2.0 * t : t;
          if (before - ev.cost <= 0.1 * opts_.cost_tolerance * before) return;
          break;
        }
        t *= 0.5;
      }
      if (!accepted) {
        step_ = std::max(t, step_ * 0.25);
        return;
      }
      if (ev.s <= 0.0) return;
      g = gradient();
    }
  }

  // With s and the eigenvectors fixed, C is quadratic in the weights:
  //   C(ps + x) = C + grad.x + s^2 x^T K x.
  // Minimized exactly over the simplex by a primal active-set method.
  void solve_weights(const CMatrix& vs, const std::vector<Eigen::Index>& support, const RVector& ps, const CMatrix& g,
                     const RMatrix& k) {
    const RVector grad = (vs.conjugate().array() * (g * vs).array()).colwise().sum().real().transpose();
    RMatrix h = 2.0 * ev.s * ev.s * k;
    const auto m = h.rows();
    h.diagonal().array() += 1e-13 * h.diagonal().maxCoeff();
    RVector x = ps;
    std::vector<char> free(static_cast<std::size_t>(m));
    for (Eigen::Index i = 0; i < m; ++i) free[static_cast<std::size_t>(i)] = 1;
    auto model = [&](const RVector& y) {
      const RVector dx = y - ps;
      return grad.dot(dx) + 0.5 * dx.dot(h * dx);
    };
    for (Eigen::Index it = 0; it < 6 * m + 20; ++it) {
      std::vector<Eigen::Index> f;
      for (Eigen::Index i = 0; i < m; ++i) {
        if (free[static_cast<std::size_t>(i)]) f.push_back(i);
      }
      const auto nf = static_cast<Eigen::Index>(f.size());
      const RVector r = grad + h * (x - ps);
      RMatrix kkt = RMatrix::Zero(nf + 1, nf + 1);
      RVector rhs = RVector::Zero(nf + 1);
      for (Eigen::Index a = 0; a < nf; ++a) {
        for (Eigen::Index b = 0; b < nf; ++b) kkt(a, b) = h(f[static_cast<std::size_t>(a)], f[static_cast<std::size_t>(b)]);
        kkt(a, nf) = kkt(nf, a) = 1.0;
        rhs(a) = -r(f[static_cast<std::size_t>(a)]);
      }
      const RVector sol = kkt.completeOrthogonalDecomposition().solve(rhs);
      const double mu = sol(nf);
      RVector d = RVector::Zero(m);
      for (Eigen::Index a = 0; a < nf; ++a) d(f[static_cast<std::size_t>(a)]) = sol(a);
      d.array() -= d.sum() / static_cast<double>(std::max<Eigen::Index>(nf, 1)) *
                   RVector::NullaryExpr(m, [&](Eigen::Index i) { return free[static_cast<std::size_t>(i)] ? 1.0 : 0.0; }).array();
      if (d.cwiseAbs().maxCoeff() <= 1e-15 * std::max(1.0, x.cwiseAbs().maxCoeff())) {
        // Stationary on the free set: release the bound with the most negative multiplier.
        Eigen::Index enter = -1;
        double worst = -1e-14 * std::max(1.0, r.cwiseAbs().maxCoeff());
        for (Eigen::Index i = 0; i < m; ++i) {
          if (!free[static_cast<std::size_t>(i)] && r(i) + mu < worst) {
            worst = r(i) + mu;
            enter = i;
          }
        }
        if (enter < 0) break;
        free[static_cast<std::size_t>(enter)] = 1;
        continue;
      }
      double alpha = 1.0;
      Eigen::Index block = -1;
      for (Eigen::Index i = 0; i < m; ++i) {
        if (d(i) < 0.0 && x(i) + alpha * d(i) < 0.0) {
          alpha = -x(i) / d(i);
          block = i;
        }
      }
      x += alpha * d;
      if (block >= 0) {
        x(block) = 0.0;
        free[static_cast<std::size_t>(block)] = 0;
      }
      x = x.cwiseMax(0.0);
      x /= x.sum();
    }
    const double fx = model(x);
    if (!(fx < 0.0)) return;
    RVector trial = p;
    for (std::size_t c = 0; c < support.size(); ++c) trial(support[c]) = x(static_cast<Eigen::Index>(c));
    const CMatrix trial_rho = build_rho(v, trial);
    auto trial_ev = model_.evaluate(trial_rho);
    if (trial_ev.cost < ev.cost) {
      p = trial;
      rho = trial_rho;
      ev = std::move(trial_ev);
    }
  }

  void eigenvector_step() {
    if (ev.s <= 0.0) return;
    const CMatrix g = gradient();
    auto pos = support_of(p);
    std::vector<Eigen::Index> zero;
    for (Eigen::Index i = 0; i < n_; ++i) {
      if (!(p(i) > 0.0)) zero.push_back(i);
    }
    const CMatrix vp = gather(v, pos);
    const CMatrix gvp = g * vp;
    const CMatrix proj = vp.adjoint() * gvp;

    struct Candidate {
      double slope;
      Eigen::Index a;
      Eigen::Index b;  // -1: direction from the null block
    };
    std::vector<Candidate> cands;
    for (std::size_t i = 0; i < pos.size(); ++i) {
      for (std::size_t j = i + 1; j < pos.size(); ++j) {
        const auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);
        const double slope = 2.0 * std::abs(p(pos[i]) - p(pos[j])) * std::abs(proj(jj, ii));
        if (slope > 0.0) cands.push_back({slope, pos[i], pos[j]});
      }
      if (!zero.empty()) {
        const auto ii = static_cast<Eigen::Index>(i);
        const CVector perp = gvp.col(ii) - vp * proj.col(ii);
        const double slope = 2.0 * p(pos[i]) * perp.norm();
        if (slope > 0.0) cands.push_back({slope, pos[i], -1});
      }
    }
    std::sort(cands.begin(), cands.end(), [](const Candidate& x, const Candidate& y) { return x.slope > y.slope; });
    if (cands.size() > opts_.max_pairs_per_iteration) cands.resize(opts_.max_pairs_per_iteration);

    for (const auto& c : cands) {
      Eigen::Index ia = c.a, ib = c.b;
      if (ib < 0) {
        if (!align_null_block(g, ia, zero)) continue;
        ib = zero.front();
      }
      if (p(ia) < p(ib)) std::swap(ia, ib);
      rotate_pair(ia, ib);
      if (ev.s <= 0.0) return;
    }
  }

 private:
  // Householder reflection inside the null block so that its first column
  // points along the projected gradient of column ia.
  bool align_null_block(const CMatrix& g, Eigen::Index ia, const std::vector<Eigen::Index>& zero) {
    const CMatrix z = gather(v, zero);
    const CVector gv = g * v.col(ia);
    const CVector c = z.adjoint() * gv;
    const double norm = c.norm();
    if (!(norm > 0.0)) return false;
    const CVector cn = c / norm;
    const Complex phase = std::abs(cn(0)) > 0.0 ? cn(0) / std::abs(cn(0)) : Complex(1.0, 0.0);
    CVector u = cn;
    u(0) += phase;  // u = cn - beta e1 with beta = -phase
    const double uu = u.squaredNorm();
    CMatrix zr = z;
    if (uu > 0.0) zr -= (2.0 / uu) * (z * u) * u.adjoint();
    for (std::size_t k = 0; k < zero.size(); ++k) v.col(zero[k]) = zr.col(static_cast<Eigen::Index>(k));
    return true;
  }

  void rotate_pair(Eigen::Index ia, Eigen::Index ib) {
    const double d = 0.5 * (p(ia) - p(ib));
    if (!(d > 0.0)) return;
    const CVector a = v.col(ia), b = v.col(ib);
    const Complex i1(0.0, 1.0);
    const CMatrix ab = a * b.adjoint(), ba = b * a.adjoint();
    const std::array<CMatrix, 3> basis{d * (a * a.adjoint() - b * b.adjoint()), d * (ab + ba), (i1 * d) * (ba - ab)};

    PairCost f;
    f.s0 = ev.s;
    auto& gm = f.gram;
    gm(0, 0) = ev.cost;
    gm(0, 1) = gm(1, 0) = CostModel::lin(ev.h, rho);
    gm(1, 1) = ev.mm;
    for (int x = 0; x < 3; ++x) {
      gm(0, 2 + x) = gm(2 + x, 0) = CostModel::lin(ev.h, basis[x]);
      gm(1, 2 + x) = gm(2 + x, 1) = model_.quad(rho, basis[x]);
      for (int y = x; y < 3; ++y) gm(2 + x, 2 + y) = gm(2 + y, 2 + x) = model_.quad(basis[x], basis[y]);
    }
    const double f0 = f(0.0, 0.0);
    double best = f0;
    const auto [x1, x2] = minimize_pair(f, best);
    if (!(best < f0)) return;

    const double u = std::hypot(x1, x2);
    const double chi = std::atan2(x2, x1);
    const double th = 0.5 * u;
    const Complex e(std::cos(chi), std::sin(chi));
    CVector a2 = std::cos(th) * a + (e * std::sin(th)) * b;
    CVector b2 = -(std::conj(e) * std::sin(th)) * a + std::cos(th) * b;
    const CMatrix v_old_a = v.col(ia), v_old_b = v.col(ib);
    v.col(ia) = a2;
    v.col(ib) = b2;
    const double half = std::sin(th);
    CMatrix trial_rho = rho + (-2.0 * half * half) * basis[0] +
                        std::sin(u) * (std::cos(chi) * basis[1] + std::sin(chi) * basis[2]);
    trial_rho = 0.5 * (trial_rho + trial_rho.adjoint()).eval();
    auto trial_ev = model_.evaluate(trial_rho);
    if (trial_ev.cost < ev.cost) {
      rho = trial_rho;
      ev = std::move(trial_ev);
    } else {
      v.col(ia) = v_old_a;
      v.col(ib) = v_old_b;
    }
  }

  const CostModel& model_;
  const ReconstructionOptions& opts_;
  std::size_t cap_;
  Eigen::Index n_;
  double step_ = 0.0;
};

TemporalModeFunction primary_mode_of(const TimeGrid& grid, const Eigensystem& es) {
  // rho = sum p v v^dagger with rho_mn = conj(phi_m) phi_n, so phi = conj(v).
  CVector phi = es.eigenvectors.col(0).conjugate();
  Eigen::Index imax = 0;
  phi.cwiseAbs().maxCoeff(&imax);
  const Complex ref = phi(imax);
  if (std::abs(ref) > 0.0) phi *= std::abs(ref) / ref;
  return TemporalModeFunction::normalized(grid, phi);
}

}  // namespace

const char* to_string(ReconstructionStatus status) {
  switch (status) {
    case ReconstructionStatus::converged:
      return "converged";
    case ReconstructionStatus::iteration_limit:
      return "iteration_limit";
  }
  return "unknown";
}

std::pair<double, double> reconstruction_cost(const ReducedAutocorrelationSet& set, const CMatrix& rho, double shift) {
  if (set.empty()) throw InvalidInput("reconstruction_cost: empty set");
  const CostModel model(set, shift);
  const auto ev = model.evaluate(rho);
  return {ev.cost, ev.s};
}

ReconstructionReport iterative_reconstruct(const ReducedAutocorrelationSet& set, const ReconstructionOptions& opts) {
  opts.validate();
  if (set.empty()) throw InvalidInput("iterative_reconstruct: no detunings");
  const TimeGrid& grid = set.grid();
  const auto n = static_cast<Eigen::Index>(grid.bin_count());
  const std::size_t cap = std::min<std::size_t>(opts.rank_cap.value_or(static_cast<std::size_t>(n)),
                                                static_cast<std::size_t>(n));

  const LinearInversion lin = linear_invert(set, opts);
  const CostModel model(set, opts.virtual_shift);
  Optimizer opt(model, opts, cap);

  // Start: PSD part of the linear estimate, top `cap` modes, unit trace.
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (lin.rho + lin.rho.adjoint()));
  opt.v = es.eigenvectors().rowwise().reverse();
  const RVector lam = es.eigenvalues().reverse();
  opt.p = RVector::Zero(n);
  const double floor = 1e-12 * std::max(0.0, lam(0));
  for (std::size_t i = 0; i < cap; ++i) {
    const double l = lam(static_cast<Eigen::Index>(i));
    opt.p(static_cast<Eigen::Index>(i)) = l > floor ? l : 0.0;
  }
  std::vector<std::string> warnings = set.warnings();
  if (!(opt.p.sum() > 0.0)) {
    warnings.emplace_back("linear inversion has no positive part; starting from the maximally mixed state");
    opt.v = CMatrix::Identity(n, n);
    opt.p.head(static_cast<Eigen::Index>(cap)).setConstant(1.0);
  }
  opt.p /= opt.p.sum();
  std::mt19937_64 rng(opts.rng_seed);
  if (opts.init_perturbation > 0.0) {
    // Jitter the retained weights and rotate the basis slightly.
    const double eps = opts.init_perturbation;
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (const auto i : support_of(opt.p)) opt.p(i) *= 1.0 + eps * unit(rng);
    opt.p /= opt.p.sum();
    opt.v = opt.v * random_unitary(n, eps, rng);
  }
  opt.refresh();

  ReconstructionReport report{TemporalDensityMatrix(grid, opt.rho), TemporalModeFunction::normalized(grid, CVector::Ones(n)),
                              RVector(), 0.0, {}, 0.0, lin.estimated_efficiency, lin.rank,
                              lin.rank_deficient_offdiagonal, set.flagged_count(), 0,
                              ReconstructionStatus::iteration_limit, opts.virtual_shift, warnings};
  report.cost_history.push_back(opt.ev.cost);

  // New directions enter the support only once the current one stops
  // paying off; admitting them early leaves small spurious weights that the
  // rotations then have to work around.
  bool admit = false;
  for (std::size_t it = 1; it <= opts.max_iterations; ++it) {
    const CMatrix saved_v = opt.v;
    const RVector saved_p = opt.p;
    const double prev = report.cost_history.back();

    opt.eigenvalue_step(admit);
    opt.eigenvector_step();
    if (it % 10 == 0) reorthonormalize(opt.v);
    opt.refresh();

    const auto check = check_density_matrix(opt.rho);
    if (!check.ok()) throw std::logic_error("reconstruction produced an invalid density matrix: " + check.describe());

    report.iterations = it;
    if (opt.ev.cost > prev) {
      // Only rounding can raise the cost here; keep the previous state.
      opt.v = saved_v;
      opt.p = saved_p;
      opt.refresh();
      report.status = ReconstructionStatus::converged;
      break;
    }
    report.cost_history.push_back(opt.ev.cost);
    if (opt.ev.cost == 0.0) {
      report.status = ReconstructionStatus::converged;
      break;
    }
    const double gain = (prev - opt.ev.cost) / prev;
    if (gain < opts.cost_tolerance) {
      if (admit) {
        report.status = ReconstructionStatus::converged;
        break;
      }
      admit = true;
    } else {
      admit = gain < kAdmitBelowGain;
    }
  }

  CMatrix rho = opt.rho;
  rho /= rho.trace().real();
  report.rho_hat = TemporalDensityMatrix(grid, rho);
  const Eigensystem sys = eigendecompose(report.rho_hat);
  report.eigenvalues = sys.eigenvalues;
  report.primary_mode = primary_mode_of(grid, sys);
  report.final_cost = report.cost_history.back();
  report.estimated_efficiency = opt.ev.s;
  if (report.estimated_efficiency == 0.0) {
    report.warnings.emplace_back("fitted scale is zero: data are uncorrelated with every admissible model");
  }
  return report;
}

ReconstructionReport reconstruct_with_virtual_shift(const ReducedAutocorrelationSet& set, double shift,
                                                    ReconstructionOptions opts) {
  opts.virtual_shift = shift;
  return iterative_reconstruct(set, opts);
}

}  // namespace phtomo
