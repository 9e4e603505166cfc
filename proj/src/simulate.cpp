#include "commspec/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "commspec/errors.hpp"

namespace commspec {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr double kSqrt3 = 1.7320508075688772;

void snap_zeros(std::vector<double>& vals) {
  double radius = 0.0;
  for (double v : vals) radius = std::max(radius, std::abs(v));
  const double tol =
      8.0 * static_cast<double>(vals.size()) * std::numeric_limits<double>::epsilon() * radius;
  for (double& v : vals)
    if (std::abs(v) <= tol) v = 0.0;
}

std::vector<BivariateAtom> draw_pairs(const BivariateSpectralMeasure& H, int p,
                                      std::mt19937_64& rng) {
  std::vector<double> w;
  for (const auto& a : H.atoms()) w.push_back(a.w);
  std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
  std::vector<BivariateAtom> out(static_cast<std::size_t>(p));
  for (auto& e : out) {
    const auto& a = H.atoms()[pick(rng)];
    e = {a.l1, a.l2, 1.0 / p};
  }
  return out;
}

Eigen::VectorXd sqrt_coord(const std::vector<BivariateAtom>& E, int which) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(E.size()));
  for (std::size_t i = 0; i < E.size(); ++i) v[i] = std::sqrt(which == 0 ? E[i].l1 : E[i].l2);
  return v;
}

Eigen::MatrixXd rotate(const Eigen::MatrixXd& P, const Eigen::VectorXd& d) {
  return P * d.asDiagonal() * P.transpose();
}

}  // namespace

std::string to_string(InnovationKind k) {
  switch (k) {
    case InnovationKind::gaussian: return "gaussian";
    case InnovationKind::uniform: return "uniform";
    case InnovationKind::mixed: return "mixed";
  }
  return "gaussian";
}

std::string to_string(ScalingKind k) {
  switch (k) {
    case ScalingKind::identity: return "identity";
    case ScalingKind::commuting_diag: return "diag";
    case ScalingKind::householder: return "householder";
    case ScalingKind::haar: return "haar";
  }
  return "identity";
}

InnovationKind parse_innovation_kind(const std::string& s) {
  if (s == "gaussian") return InnovationKind::gaussian;
  if (s == "uniform") return InnovationKind::uniform;
  if (s == "mixed") return InnovationKind::mixed;
  throw DomainError("unknown innovation kind '" + s + "'");
}

ScalingKind parse_scaling_kind(const std::string& s) {
  if (s == "identity") return ScalingKind::identity;
  if (s == "diag" || s == "commuting_diag") return ScalingKind::commuting_diag;
  if (s == "householder" || s == "householder_lowrank") return ScalingKind::householder;
  if (s == "haar" || s == "haar_noncommuting") return ScalingKind::haar;
  throw DomainError("unknown scaling kind '" + s + "'");
}

std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t replicate, StreamRole role) {
  const std::uint64_t a = splitmix64(seed);
  const std::uint64_t b = splitmix64(a ^ splitmix64(replicate + 0x632BE59BD9B4E019ULL));
  const std::uint64_t c = splitmix64(b ^ static_cast<std::uint64_t>(role));
  std::seed_seq seq{static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  return std::mt19937_64(seq);
}

Eigen::MatrixXd gen_innovations(int p, int n, InnovationKind kind, std::mt19937_64& rng) {
  if (p < 1 || n < 1) throw DomainError("gen_innovations: need p, n >= 1");
  Eigen::MatrixXd Z(p, n);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(-kSqrt3, kSqrt3);
  std::bernoulli_distribution coin(0.5);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < p; ++i) {
      switch (kind) {
        case InnovationKind::gaussian: Z(i, j) = gauss(rng); break;
        case InnovationKind::uniform: Z(i, j) = unif(rng); break;
        case InnovationKind::mixed: Z(i, j) = coin(rng) ? gauss(rng) : unif(rng); break;
      }
    }
  }
  return Z;
}

Eigen::MatrixXd gen_innovations(int p, int n, const InnovationSpec& spec) {
  auto rng = make_stream(spec.seed, 0, StreamRole::z1);
  return gen_innovations(p, n, spec.kind, rng);
}

Eigen::MatrixXd haar_orthogonal(int p, std::mt19937_64& rng) {
  const Eigen::MatrixXd V = gen_innovations(p, p, InnovationKind::gaussian, rng);
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(p, p);
  M.selfadjointView<Eigen::Lower>().rankUpdate(V.transpose());
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
      M.selfadjointView<Eigen::Lower>().toDenseMatrix());
  const Eigen::VectorXd ev = es.eigenvalues();
  if (!(ev.minCoeff() > 1e-12 * ev.maxCoeff()))
    throw SingularError("haar_orthogonal: V^T V is singular");
  const Eigen::MatrixXd& Q = es.eigenvectors();
  const Eigen::MatrixXd inv_sqrt = Q * ev.cwiseSqrt().cwiseInverse().asDiagonal() * Q.transpose();
  return inv_sqrt * V.transpose();
}

Eigen::MatrixXd householder_orthogonal(int p, int k, std::mt19937_64& rng) {
  if (k < 1 || k > p) throw DomainError("householder: need 1 <= k <= p");
  const Eigen::MatrixXd G = gen_innovations(p, k, InnovationKind::gaussian, rng);
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
  const Eigen::MatrixXd U = qr.householderQ() * Eigen::MatrixXd::Identity(p, k);
  Eigen::MatrixXd P = Eigen::MatrixXd::Identity(p, p);
  P.noalias() -= 2.0 * U * U.transpose();
  return P;
}

ScalingPair build_scaling(const ScalingSpec& spec, int p, std::uint64_t seed,
                          std::uint64_t replicate) {
  if (p < 1) throw DomainError("build_scaling: need p >= 1");
  if (spec.kind == ScalingKind::identity)
    return {Eigen::MatrixXd::Identity(p, p), Eigen::MatrixXd::Identity(p, p)};
  if (!spec.H) throw DomainError("build_scaling: this scaling kind needs H");
  auto rng = make_stream(seed, replicate, StreamRole::scaling);
  const auto E = draw_pairs(*spec.H, p, rng);
  const Eigen::VectorXd d1 = sqrt_coord(E, 0), d2 = sqrt_coord(E, 1);
  if (spec.kind == ScalingKind::commuting_diag)
    return {Eigen::MatrixXd(d1.asDiagonal()), Eigen::MatrixXd(d2.asDiagonal())};

  const int k = spec.k > 0 ? spec.k : static_cast<int>(std::ceil(std::sqrt(double(p))));
  auto basis = [&](StreamRole role) -> Eigen::MatrixXd {
    for (std::uint64_t attempt = 0;; ++attempt) {
      auto r = make_stream(seed + attempt * 0x9E3779B97F4A7C15ULL, replicate, role);
      try {
        if (spec.kind == ScalingKind::householder) return householder_orthogonal(p, k, r);
        return haar_orthogonal(p, r);
      } catch (const SingularError&) {
        if (attempt >= 3) throw;
      }
    }
  };
  const Eigen::MatrixXd P1 = basis(StreamRole::basis1);
  const Eigen::MatrixXd P2 = basis(StreamRole::basis2);
  return {rotate(P1, d1), rotate(P2, d2)};
}

Eigen::MatrixXd commutator(const Eigen::MatrixXd& X1, const Eigen::MatrixXd& X2) {
  if (X1.rows() != X2.rows() || X1.cols() != X2.cols())
    throw DomainError("commutator: dimension mismatch");
  const Eigen::MatrixXd A = X1 * X2.transpose() / static_cast<double>(X1.cols());
  return A - A.transpose();
}

Eigen::MatrixXd anticommutator(const Eigen::MatrixXd& X1, const Eigen::MatrixXd& X2) {
  if (X1.rows() != X2.rows() || X1.cols() != X2.cols())
    throw DomainError("anticommutator: dimension mismatch");
  const Eigen::MatrixXd A = X1 * X2.transpose() / static_cast<double>(X1.cols());
  return A + A.transpose();
}

Eigen::MatrixXcd commutator(const Eigen::MatrixXcd& X1, const Eigen::MatrixXcd& X2) {
  if (X1.rows() != X2.rows() || X1.cols() != X2.cols())
    throw DomainError("commutator: dimension mismatch");
  const Eigen::MatrixXcd A = X1 * X2.adjoint() / static_cast<double>(X1.cols());
  return A - A.adjoint();
}

Eigen::MatrixXcd anticommutator(const Eigen::MatrixXcd& X1, const Eigen::MatrixXcd& X2) {
  if (X1.rows() != X2.rows() || X1.cols() != X2.cols())
    throw DomainError("anticommutator: dimension mismatch");
  const Eigen::MatrixXcd A = X1 * X2.adjoint() / static_cast<double>(X1.cols());
  return A + A.adjoint();
}

double skew_defect(const Eigen::MatrixXd& S) {
  const double nrm = S.norm();
  if (nrm == 0.0) return 0.0;
  return (S + S.transpose()).norm() / nrm;
}

ImagSpectrum eigenvalues_skew(const Eigen::MatrixXcd& S) {
  if (S.rows() != S.cols()) throw DomainError("eigenvalues_skew: matrix must be square");
  const double nrm = S.norm();
  if ((S + S.adjoint()).norm() > 1e-8 * nrm)
    throw DomainError("eigenvalues_skew: matrix is not skew-Hermitian");
  if (S.rows() == 0) return ImagSpectrum{};
  const Eigen::MatrixXcd H = cplx(0.0, -1.0) * S;
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H, Eigen::EigenvaluesOnly);
  std::vector<double> vals(es.eigenvalues().data(),
                           es.eigenvalues().data() + es.eigenvalues().size());
  snap_zeros(vals);
  return ImagSpectrum(std::move(vals));
}

ImagSpectrum eigenvalues_skew(const Eigen::MatrixXd& S) {
  return eigenvalues_skew(Eigen::MatrixXcd(S.cast<cplx>()));
}

std::vector<double> eigenvalues_sym(const Eigen::MatrixXd& S) {
  if (S.rows() != S.cols()) throw DomainError("eigenvalues_sym: matrix must be square");
  if (S.rows() == 0) return {};
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
  std::vector<double> vals(es.eigenvalues().data(),
                           es.eigenvalues().data() + es.eigenvalues().size());
  snap_zeros(vals);
  return vals;
}

void ExperimentConfig::validate() const {
  if (p < 2 || n < 2) throw DomainError("experiment: need p, n >= 2");
  if (!(rho > -1.0 && rho < 1.0)) throw DomainError("experiment: rho must lie in (-1, 1)");
  if (scaling.kind != ScalingKind::identity && !scaling.H)
    throw DomainError("experiment: scaling kind '" + to_string(scaling.kind) + "' needs H");
}

SpectrumSample run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  auto rz = make_stream(cfg.seed, cfg.replicate, StreamRole::z1);
  auto rv = make_stream(cfg.seed, cfg.replicate, StreamRole::z2);
  Eigen::MatrixXd X1 = gen_innovations(cfg.p, cfg.n, cfg.innovation, rz);
  Eigen::MatrixXd X2 = gen_innovations(cfg.p, cfg.n, cfg.innovation, rv);
  if (cfg.rho != 0.0) X2 = cfg.rho * X1 + std::sqrt(1.0 - cfg.rho * cfg.rho) * X2;

  if (cfg.scaling.kind == ScalingKind::commuting_diag) {
    const ScalingPair sc = build_scaling(cfg.scaling, cfg.p, cfg.seed, cfg.replicate);
    X1 = sc.S1half.diagonal().asDiagonal() * X1;
    X2 = sc.S2half.diagonal().asDiagonal() * X2;
  } else if (cfg.scaling.kind != ScalingKind::identity) {
    const ScalingPair sc = build_scaling(cfg.scaling, cfg.p, cfg.seed, cfg.replicate);
    X1 = sc.S1half * X1;
    X2 = sc.S2half * X2;
  }

  const double inv_n = 1.0 / static_cast<double>(cfg.n);
  const Eigen::MatrixXd A = X1 * X2.transpose() * inv_n;
  const Eigen::MatrixXd B = X2 * X1.transpose() * inv_n;

  SpectrumSample out;
  out.p = cfg.p;
  out.n = cfg.n;
  out.config = cfg;
  if (cfg.anti) {
    Eigen::MatrixXd S = A + B;
    S = 0.5 * (S + S.transpose()).eval();
    out.spectrum = ImagSpectrum(eigenvalues_sym(S));
  } else {
    Eigen::MatrixXd S = A - B;
    out.raw_skew_defect = skew_defect(S);
    S = 0.5 * (S - S.transpose()).eval();
    out.spectrum = eigenvalues_skew(S);
  }
  return out;
}

int n_from_c(int p, double c) {
  if (!(c > 0.0)) throw DomainError("need c > 0");
  return std::max(1, static_cast<int>(std::lround(static_cast<double>(p) / c)));
}

}  // namespace commspec
