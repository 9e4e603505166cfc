#include "commspec/hypotest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "commspec/errors.hpp"
#include "commspec/parallel.hpp"
#include "commspec/simulate.hpp"

namespace commspec {
namespace {

struct Companion {
  cplx v;
  cplx dFdv;
};

// Solves z = -1/v + c sum w t / (1 + t v) for v in C+ by fixed-point
// iteration from `v0`, followed by a Newton polish.
Companion solve_companion(const std::vector<double>& t, const std::vector<double>& w, double c,
                          cplx z, cplx v0) {
  auto tail = [&](cplx v) {
    cplx acc = 0.0;
    for (std::size_t k = 0; k < t.size(); ++k)
      if (w[k] > 0.0) acc += w[k] * t[k] / (1.0 + t[k] * v);
    return acc;
  };
  auto deriv = [&](cplx v) {
    cplx acc = 0.0;
    for (std::size_t k = 0; k < t.size(); ++k)
      if (w[k] > 0.0) {
        const cplx d = 1.0 + t[k] * v;
        acc += w[k] * t[k] * t[k] / (d * d);
      }
    return -1.0 / (v * v) + c * acc;
  };
  cplx v = (v0.imag() > 0.0) ? v0 : -1.0 / z;
  for (int it = 0; it < 5000; ++it) {
    const cplx next = -1.0 / (z - c * tail(v));
    const double step = std::abs(next - v);
    v = next;
    if (step <= 1e-13 * std::max(1.0, std::abs(v))) break;
  }
  for (int it = 0; it < 3; ++it) {
    const cplx F = z + 1.0 / v - c * tail(v);
    const cplx d = deriv(v);
    if (std::abs(d) == 0.0) break;
    const cplx next = v - F / d;
    if (!(next.imag() > 0.0)) break;
    v = next;
  }
  return {v, deriv(v)};
}

cplx m_from_v(cplx v, double c, cplx z) { return (v + (1.0 - c) / z) / c; }

std::string cache_path(const std::string& dir, int p, int n, std::uint64_t hash, int B,
                       std::uint64_t seed) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "null_p%d_n%d_%016llx_B%d_s%llu.csv", p, n,
                static_cast<unsigned long long>(hash), B, static_cast<unsigned long long>(seed));
  return (std::filesystem::path(dir) / buf).string();
}

std::optional<std::vector<double>> load_cache(const std::string& path, int B) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  std::vector<double> vals;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      vals.push_back(std::stod(line));
    } catch (const std::exception&) {
      return std::nullopt;
    }
  }
  if (static_cast<int>(vals.size()) != B) return std::nullopt;
  return vals;
}

void store_cache(const std::string& path, const std::vector<double>& vals) {
  std::filesystem::create_directories(std::filesystem::path(path).parent_path());
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    out.precision(17);
    for (double v : vals) out << v << '\n';
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace

void PairedSample::validate() const {
  if (X1.rows() != X2.rows() || X1.cols() != X2.cols())
    throw DomainError("paired sample dimension mismatch: X1 is " + std::to_string(X1.rows()) + "x" +
                      std::to_string(X1.cols()) + " but X2 is " + std::to_string(X2.rows()) +
                      "x" + std::to_string(X2.cols()));
  if (X1.rows() < 1 || X1.cols() < 1) throw DomainError("paired sample: empty matrices");
}

UnivariateSpectralMeasure EstimatedPSD::measure() const {
  std::vector<UnivariateAtom> atoms;
  double total = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k)
    if (weights[k] > 0.0) {
      atoms.push_back({grid[k], weights[k]});
      total += weights[k];
    }
  for (auto& a : atoms) a.w /= total;
  return UnivariateSpectralMeasure(std::move(atoms));
}

void TestConfig::validate() const {
  if (B < 1) throw DomainError("test: B must be at least 1");
  if (psd_grid_points < 2) throw DomainError("test: psd grid needs at least 2 points");
}

double spectral_stat(const ImagSpectrum& spec) {
  if (spec.empty()) throw DomainError("spectral_stat: empty spectrum");
  return std::sqrt(spec.second_moment());
}

double frobenius_stat(const Eigen::MatrixXd& S) {
  return S.norm() / std::sqrt(static_cast<double>(S.rows()));
}

std::vector<double> mc_null(int p, int n, const NullSigma& sigma, int B, std::uint64_t seed,
                            int threads) {
  if (B < 1) throw DomainError("mc_null: B must be at least 1");
  if (p < 1 || n < 1) throw DomainError("mc_null: need p, n >= 1");
  std::optional<Eigen::MatrixXd> fixed_half;
  std::optional<Eigen::VectorXd> diag_half;
  if (const auto* m = std::get_if<Eigen::MatrixXd>(&sigma)) {
    if (m->rows() != p || m->cols() != p) throw DomainError("mc_null: Sigma^{1/2} must be p x p");
    fixed_half = *m;
  } else {
    const UnivariateSpectralMeasure H = std::holds_alternative<UnivariateSpectralMeasure>(sigma)
                                            ? std::get<UnivariateSpectralMeasure>(sigma)
                                            : std::get<EstimatedPSD>(sigma).measure();
    const auto ev = H.allocate(static_cast<std::size_t>(p));
    diag_half = Eigen::VectorXd(p);
    for (int i = 0; i < p; ++i) (*diag_half)[i] = std::sqrt(ev[static_cast<std::size_t>(i)]);
  }
  const bool rotate = std::holds_alternative<EstimatedPSD>(sigma);

  std::vector<double> out(static_cast<std::size_t>(B));
  parallel_for(out.size(), threads, [&](std::size_t b) {
    auto r1 = make_stream(seed, b, StreamRole::z1);
    auto r2 = make_stream(seed, b, StreamRole::z2);
    Eigen::MatrixXd X1 = gen_innovations(p, n, InnovationKind::gaussian, r1);
    Eigen::MatrixXd X2 = gen_innovations(p, n, InnovationKind::gaussian, r2);
    if (fixed_half) {
      X1 = *fixed_half * X1;
      X2 = *fixed_half * X2;
    } else if (rotate) {
      auto rb = make_stream(seed, b, StreamRole::basis1);
      const Eigen::MatrixXd P = haar_orthogonal(p, rb);
      const Eigen::MatrixXd half = P * diag_half->asDiagonal() * P.transpose();
      X1 = half * X1;
      X2 = half * X2;
    } else {
      X1 = diag_half->asDiagonal() * X1;
      X2 = diag_half->asDiagonal() * X2;
    }
    out[b] = spectral_stat(eigenvalues_skew(commutator(X1, X2)));
  });
  std::sort(out.begin(), out.end());
  return out;
}

double p_value(double T_obs, const std::vector<double>& nulls) {
  if (nulls.empty()) throw DomainError("p_value: empty null sample");
  const auto count = std::count_if(nulls.begin(), nulls.end(), [T_obs](double t) { return t <= T_obs; });
  return static_cast<double>(count) / static_cast<double>(nulls.size());
}

double theoretical_shrinkage(double rho) {
  if (!(std::abs(rho) < 1.0)) throw DomainError("theoretical_shrinkage: need |rho| < 1");
  return std::sqrt(1.0 - rho * rho);
}

std::vector<double> sample_cov_eigs(const Eigen::MatrixXd& X) {
  if (X.cols() < 1) throw DomainError("sample_cov_eigs: no observations");
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(X.rows(), X.rows());
  S.selfadjointView<Eigen::Lower>().rankUpdate(X, 1.0 / static_cast<double>(X.cols()));
  std::vector<double> ev = eigenvalues_sym(S.selfadjointView<Eigen::Lower>().toDenseMatrix());
  for (double& v : ev) v = std::max(0.0, v);
  return ev;
}

std::vector<double> default_psd_grid(const std::vector<double>& eigs, int points) {
  if (points < 2) throw DomainError("psd grid: need at least 2 points");
  const double top = eigs.empty() ? 0.0 : *std::max_element(eigs.begin(), eigs.end());
  if (!(top > 0.0)) return {0.0};
  std::vector<double> g(static_cast<std::size_t>(points));
  for (int k = 0; k < points; ++k) g[k] = 3.0 * top * k / (points - 1);
  return g;
}

std::vector<double> project_simplex(const std::vector<double>& v) {
  std::vector<double> u(v);
  std::sort(u.begin(), u.end(), std::greater<>());
  double cum = 0.0, theta = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    cum += u[k];
    const double t = (cum - 1.0) / static_cast<double>(k + 1);
    if (u[k] - t > 0.0) theta = t;
  }
  std::vector<double> out(v.size());
  for (std::size_t k = 0; k < v.size(); ++k) out[k] = std::max(0.0, v[k] - theta);
  return out;
}

cplx mp_stieltjes(const std::vector<double>& grid, const std::vector<double>& weights, double c,
                  cplx z) {
  if (!(z.imag() > 0.0)) throw DomainError("mp_stieltjes: need Im z > 0");
  if (!(c > 0.0)) throw DomainError("mp_stieltjes: need c > 0");
  return m_from_v(solve_companion(grid, weights, c, z, -1.0 / z).v, c, z);
}

EstimatedPSD estimate_psd(const std::vector<double>& eigs, double c_n,
                          const std::vector<double>& grid, const PsdFitOptions& opt) {
  if (!(c_n > 0.0)) throw DomainError("estimate_psd: need c_n > 0");
  if (eigs.empty()) throw DomainError("estimate_psd: no eigenvalues");
  if (grid.empty()) throw DomainError("estimate_psd: empty grid");
  for (double e : eigs)
    if (e < 0.0) throw DomainError("estimate_psd: eigenvalues must be nonnegative");

  EstimatedPSD out;
  out.grid = grid;
  const double lo = *std::min_element(eigs.begin(), eigs.end());
  const double hi = *std::max_element(eigs.begin(), eigs.end());
  if (!(hi > 0.0)) {
    // All eigenvalues zero: the population spectrum is the point mass at 0.
    const auto it = std::min_element(grid.begin(), grid.end(),
                                     [](double a, double b) { return std::abs(a) < std::abs(b); });
    out.weights.assign(grid.size(), 0.0);
    out.weights[static_cast<std::size_t>(it - grid.begin())] = 1.0;
    return out;
  }

  const double range = std::max(hi - lo, 1e-3 * hi);
  const int J = std::max(1, opt.eval_points);
  std::vector<cplx> zs(J), target(J);
  for (int j = 0; j < J; ++j) {
    const double x = J == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * j / (J - 1);
    zs[j] = cplx(x, 0.1 * range);
    cplx acc = 0.0;
    for (double e : eigs) acc += 1.0 / (e - zs[j]);
    target[j] = acc / static_cast<double>(eigs.size());
  }

  const std::size_t K = grid.size();
  std::vector<cplx> vs(J, 0.0);
  auto loss = [&](const std::vector<double>& w, std::vector<cplx>& v, std::vector<double>* grad) {
    double L = 0.0;
    if (grad) grad->assign(K, 0.0);
    for (int j = 0; j < J; ++j) {
      const Companion cmp = solve_companion(grid, w, c_n, zs[j], v[j]);
      v[j] = cmp.v;
      const cplx diff = m_from_v(cmp.v, c_n, zs[j]) - target[j];
      L += std::norm(diff);
      if (grad)
        for (std::size_t k = 0; k < K; ++k) {
          const cplx dm = grid[k] / ((1.0 + grid[k] * cmp.v) * cmp.dFdv);
          (*grad)[k] += 2.0 * (std::conj(diff) * dm).real();
        }
    }
    return L;
  };

  std::vector<double> w(K, 1.0 / static_cast<double>(K));
  std::vector<double> g;
  double L = loss(w, vs, &g);
  double step = 1.0;
  out.converged = false;
  int it = 0;
  for (; it < opt.max_iter; ++it) {
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls) {
      std::vector<double> trial(K);
      for (std::size_t k = 0; k < K; ++k) trial[k] = w[k] - step * g[k];
      trial = project_simplex(trial);
      double lin = 0.0, sq = 0.0;
      for (std::size_t k = 0; k < K; ++k) {
        const double d = trial[k] - w[k];
        lin += g[k] * d;
        sq += d * d;
      }
      if (sq == 0.0) {
        out.converged = true;
        break;
      }
      std::vector<cplx> vt = vs;
      const double Lt = loss(trial, vt, nullptr);
      if (Lt <= L + lin + sq / (2.0 * step)) {
        const double max_move = std::sqrt(sq);
        w = std::move(trial);
        vs = std::move(vt);
        L = loss(w, vs, &g);
        step *= 2.0;
        accepted = true;
        if (max_move < 1e-10) out.converged = true;
        break;
      }
      step *= 0.5;
    }
    if (out.converged || !accepted) {
      out.converged = true;
      break;
    }
  }
  out.weights = std::move(w);
  out.fit_residual = std::sqrt(L / J);
  out.iterations = it;
  return out;
}

std::uint64_t fnv1a(const void* data, std::size_t bytes, std::uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < bytes; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t sigma_hash(const NullSigma& sigma) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const std::uint64_t tag = sigma.index();
  h = fnv1a(&tag, sizeof tag, h);
  if (const auto* m = std::get_if<Eigen::MatrixXd>(&sigma)) {
    h = fnv1a(m->data(), sizeof(double) * static_cast<std::size_t>(m->size()), h);
  } else {
    const UnivariateSpectralMeasure H = std::holds_alternative<UnivariateSpectralMeasure>(sigma)
                                            ? std::get<UnivariateSpectralMeasure>(sigma)
                                            : std::get<EstimatedPSD>(sigma).measure();
    for (const auto& a : H.atoms()) {
      h = fnv1a(&a.l, sizeof a.l, h);
      h = fnv1a(&a.w, sizeof a.w, h);
    }
  }
  return h;
}

TestResult run_test(const PairedSample& sample, const TestConfig& cfg) {
  sample.validate();
  cfg.validate();
  TestResult res;
  res.config = cfg;
  res.T_obs = spectral_stat(eigenvalues_skew(commutator(sample.X1, sample.X2)));

  const int p = sample.p(), n = sample.n();
  NullSigma sigma = UnivariateSpectralMeasure::point(1.0);
  if (cfg.sigma_mode == SigmaMode::known) {
    if (cfg.sigma_half) {
      if (cfg.sigma_half->rows() != p || cfg.sigma_half->cols() != p)
        throw DomainError("test: Sigma^{1/2} must be " + std::to_string(p) + "x" +
                          std::to_string(p));
      sigma = *cfg.sigma_half;
    } else if (cfg.sigma_spectrum) {
      sigma = *cfg.sigma_spectrum;
    }
  } else {
    const double c_n = static_cast<double>(p) / n;
    const auto e1 = sample_cov_eigs(sample.X1);
    std::vector<double> all = e1;
    std::vector<double> e2;
    if (cfg.pooled) {
      e2 = sample_cov_eigs(sample.X2);
      all.insert(all.end(), e2.begin(), e2.end());
    }
    const auto grid = default_psd_grid(all, cfg.psd_grid_points);
    EstimatedPSD est = estimate_psd(e1, c_n, grid);
    if (cfg.pooled) {
      const EstimatedPSD est2 = estimate_psd(e2, c_n, grid);
      for (std::size_t k = 0; k < est.weights.size(); ++k)
        est.weights[k] = 0.5 * (est.weights[k] + est2.weights[k]);
      est.fit_residual = 0.5 * (est.fit_residual + est2.fit_residual);
      est.converged = est.converged && est2.converged;
      est.iterations = std::max(est.iterations, est2.iterations);
    }
    res.psd = est;
    sigma = est;
  }

  std::optional<std::string> path;
  if (!cfg.cache_dir.empty())
    path = cache_path(cfg.cache_dir, p, n, sigma_hash(sigma), cfg.B, cfg.seed);
  std::optional<std::vector<double>> cached;
  if (path) cached = load_cache(*path, cfg.B);
  if (cached) {
    res.nulls = std::move(*cached);
  } else {
    res.nulls = mc_null(p, n, sigma, cfg.B, cfg.seed, cfg.threads);
    if (path) store_cache(*path, res.nulls);
  }
  res.p_value = p_value(res.T_obs, res.nulls);
  return res;
}

}  // namespace commspec
