#include "commspec/fpsolve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "commspec/errors.hpp"

namespace commspec {
namespace {

constexpr double kPoleTol = 1e-14;

struct System {
  double c;
  cplx z;
  std::vector<BivariateAtom> atoms;
  bool active1;
  bool active2;
};

struct Eval {
  cplx f1, f2;
  // Jacobian of the right-hand side, row k = component, column j = d/dh_j.
  cplx j11, j12, j21, j22;
};

System make_system(const ModelSpec& model, cplx z) {
  model.validate();
  const BivariateSpectralMeasure H = model.bivariate();
  return {model.c, z, H.atoms(), H.mean1() > 0.0, H.mean2() > 0.0};
}

Eval evaluate(const System& s, cplx h1, cplx h2, bool jacobian) {
  const double c = s.c;
  const cplx P = 1.0 + c * c * h1 * h2;
  if (std::abs(P) < kPoleTol) throw PoleError("fixed point: 1 + c^2 h1 h2 vanished");
  const cplx iP = 1.0 / P;
  const cplx rho1 = c * h2 * iP;
  const cplx rho2 = c * h1 * iP;
  const cplx iP2 = iP * iP;
  const cplx dr1_dh1 = -c * c * c * h2 * h2 * iP2;
  const cplx dr1_dh2 = c * iP2;
  const cplx dr2_dh1 = c * iP2;
  const cplx dr2_dh2 = -c * c * c * h1 * h1 * iP2;
  Eval e{0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
  for (const auto& a : s.atoms) {
    if (a.l1 == 0.0 && a.l2 == 0.0) continue;
    const cplx D = -s.z + a.l1 * rho1 + a.l2 * rho2;
    if (std::abs(D) < kPoleTol) throw PoleError("fixed point: denominator vanished");
    const cplx iD = 1.0 / D;
    e.f1 += a.w * a.l1 * iD;
    e.f2 += a.w * a.l2 * iD;
    if (jacobian) {
      const cplx iD2 = iD * iD;
      const cplx dD1 = a.l1 * dr1_dh1 + a.l2 * dr2_dh1;
      const cplx dD2 = a.l1 * dr1_dh2 + a.l2 * dr2_dh2;
      e.j11 -= a.w * a.l1 * dD1 * iD2;
      e.j12 -= a.w * a.l1 * dD2 * iD2;
      e.j21 -= a.w * a.l2 * dD1 * iD2;
      e.j22 -= a.w * a.l2 * dD2 * iD2;
    }
  }
  return e;
}

double residual_of(cplx h1, cplx h2, const Eval& e) {
  return std::max(std::abs(h1 - e.f1) / std::max(1.0, std::abs(h1)),
                  std::abs(h2 - e.f2) / std::max(1.0, std::abs(h2)));
}

bool admissible(const System& s, cplx h1, cplx h2) {
  if (!std::isfinite(h1.real()) || !std::isfinite(h1.imag()) || !std::isfinite(h2.real()) ||
      !std::isfinite(h2.imag()))
    return false;
  if (s.active1 && !(h1.real() > 0.0)) return false;
  if (s.active2 && !(h2.real() > 0.0)) return false;
  return true;
}

struct Trial {
  bool ok = false;
  Eval e{};
  double r = std::numeric_limits<double>::infinity();
};

Trial try_point(const System& s, cplx h1, cplx h2, bool jacobian) {
  Trial t;
  if (!admissible(s, h1, h2)) return t;
  try {
    t.e = evaluate(s, h1, h2, jacobian);
  } catch (const PoleError&) {
    return t;
  }
  t.r = residual_of(h1, h2, t.e);
  t.ok = std::isfinite(t.r);
  return t;
}

// Hybrid iteration: a Newton step on G(h) = h - F(h) is taken whenever it
// lowers the residual and stays in the right half-plane; otherwise a damped
// Picard step is taken. Restarts with halved damping on leaving C_R.
HPair iterate(const System& s, cplx h1_init, cplx h2_init, const SolverConfig& cfg) {
  HPair out;
  out.z = s.z;
  if (!s.active1 && !s.active2) return out;

  double best = std::numeric_limits<double>::infinity();
  double alpha = cfg.damping;
  int total = 0;
  for (int restart = 0; restart < 12 && total < cfg.max_iter; ++restart) {
    cplx h1 = s.active1 ? h1_init : 0.0;
    cplx h2 = s.active2 ? h2_init : 0.0;
    Trial cur = try_point(s, h1, h2, true);
    if (!cur.ok) {
      const double m = 1.0 / std::abs(s.z.real());
      h1 = s.active1 ? cplx(m, 0.0) : 0.0;
      h2 = s.active2 ? cplx(m, 0.0) : 0.0;
      cur = try_point(s, h1, h2, true);
      if (!cur.ok) break;
    }
    int increases = 0;
    bool left_domain = false;
    while (total < cfg.max_iter) {
      ++total;
      best = std::min(best, cur.r);
      if (cur.r <= cfg.tol) {
        out.h1 = h1;
        out.h2 = h2;
        out.residual = cur.r;
        out.iterations = total;
        return out;
      }
      // Newton candidate with backtracking.
      const cplx g1 = h1 - cur.e.f1, g2 = h2 - cur.e.f2;
      const cplx a11 = (s.active1 ? 1.0 : 0.0) - cur.e.j11, a12 = -cur.e.j12;
      const cplx a21 = -cur.e.j21, a22 = (s.active2 ? 1.0 : 0.0) - cur.e.j22;
      cplx d1 = 0.0, d2 = 0.0;
      bool have_step = false;
      if (s.active1 && s.active2) {
        const cplx det = a11 * a22 - a12 * a21;
        if (std::abs(det) > 0.0) {
          d1 = -(a22 * g1 - a12 * g2) / det;
          d2 = -(-a21 * g1 + a11 * g2) / det;
          have_step = true;
        }
      } else if (s.active1 && std::abs(a11) > 0.0) {
        d1 = -g1 / a11;
        have_step = true;
      } else if (s.active2 && std::abs(a22) > 0.0) {
        d2 = -g2 / a22;
        have_step = true;
      }
      bool stepped = false;
      if (have_step) {
        double t = 1.0;
        for (int ls = 0; ls < 6; ++ls, t *= 0.5) {
          Trial nt = try_point(s, h1 + t * d1, h2 + t * d2, true);
          if (nt.ok && nt.r < cur.r) {
            h1 += t * d1;
            h2 += t * d2;
            cur = nt;
            stepped = true;
            increases = 0;
            break;
          }
        }
      }
      if (stepped) continue;
      // Damped Picard step.
      const cplx p1 = (1.0 - alpha) * h1 + alpha * cur.e.f1;
      const cplx p2 = (1.0 - alpha) * h2 + alpha * cur.e.f2;
      Trial pt = try_point(s, p1, p2, true);
      if (!pt.ok) {
        left_domain = true;
        break;
      }
      increases = pt.r > cur.r ? increases + 1 : 0;
      if (increases >= 5) {
        alpha *= 0.5;
        increases = 0;
      }
      h1 = p1;
      h2 = p2;
      cur = pt;
    }
    if (!left_domain) break;
    alpha *= 0.5;
  }
  throw ConvergenceError("fixed-point solver did not converge at z = (" +
                             std::to_string(s.z.real()) + ", " + std::to_string(s.z.imag()) +
                             ")",
                         best);
}

std::pair<cplx, cplx> start_value(const System& s) {
  double m1 = 0.0, m2 = 0.0;
  for (const auto& a : s.atoms) {
    m1 += a.w * a.l1;
    m2 += a.w * a.l2;
  }
  return {m1 / (-s.z), m2 / (-s.z)};
}

HPair solve_direct(const ModelSpec& model, cplx z, const SolverConfig& cfg) {
  const System s = make_system(model, z);
  const auto [a, b] = start_value(s);
  return iterate(s, a, b, cfg);
}

// Continuation from (u_from, h_from) to Re z = -u_to at fixed Im z = x,
// bisecting in log(u) when a step fails.
HPair continue_to(const ModelSpec& model, double x, double u_from, const HPair& h_from,
                  double u_to, const SolverConfig& cfg, int depth = 0) {
  try {
    const System s = make_system(model, cplx(-u_to, x));
    return iterate(s, h_from.h1, h_from.h2, cfg);
  } catch (const ConvergenceError&) {
    if (depth >= 8) throw;
  }
  const double mid = std::sqrt(u_from * u_to);
  const HPair hm = continue_to(model, x, u_from, h_from, mid, cfg, depth + 1);
  return continue_to(model, x, mid, hm, u_to, cfg, depth + 1);
}

}  // namespace

void SolverConfig::validate() const {
  if (!(tol > 0.0)) throw DomainError("SolverConfig: tol must be positive");
  if (!(damping > 0.0 && damping <= 1.0)) throw DomainError("SolverConfig: damping in (0,1]");
  if (max_iter < 1) throw DomainError("SolverConfig: max_iter must be positive");
  if (!(path_start_u > 0.0)) throw DomainError("SolverConfig: path_start_u must be positive");
  if (path_steps < 1) throw DomainError("SolverConfig: path_steps must be positive");
}

ModelSpec ModelSpec::identity(double c) {
  ModelSpec m;
  m.c = c;
  m.H = UnivariateSpectralMeasure::point(1.0);
  m.mode = ModelMode::identity;
  m.validate();
  return m;
}

ModelSpec ModelSpec::equal(double c, UnivariateSpectralMeasure H) {
  ModelSpec m;
  m.c = c;
  m.H = std::move(H);
  m.mode = ModelMode::equal;
  m.validate();
  return m;
}

ModelSpec ModelSpec::general(double c, BivariateSpectralMeasure H) {
  ModelSpec m;
  m.c = c;
  m.H = std::move(H);
  m.mode = ModelMode::general;
  m.validate();
  return m;
}

void ModelSpec::validate() const {
  if (!(c > 0.0) || !std::isfinite(c)) throw DomainError("ModelSpec: c must be positive");
  if (mode != ModelMode::general && !std::holds_alternative<UnivariateSpectralMeasure>(H))
    throw DomainError("ModelSpec: equal/identity modes need a univariate H");
}

BivariateSpectralMeasure ModelSpec::bivariate() const {
  if (const auto* b = std::get_if<BivariateSpectralMeasure>(&H)) return *b;
  return BivariateSpectralMeasure::diagonal(std::get<UnivariateSpectralMeasure>(H));
}

double ModelSpec::zero_mass() const {
  if (const auto* b = std::get_if<BivariateSpectralMeasure>(&H)) return b->zero_mass();
  return std::get<UnivariateSpectralMeasure>(H).zero_mass();
}

std::pair<cplx, cplx> rho(cplx z1, cplx z2) {
  const cplx den = 1.0 + z1 * z2;
  if (std::abs(den) < kPoleTol) throw PoleError("rho: 1 + z1 z2 = 0");
  return {z2 / den, z1 / den};
}

cplx sigma_fn(cplx z) {
  const cplx den = 1.0 + z * z;
  if (std::abs(den) < kPoleTol) throw PoleError("sigma: 1 + z^2 = 0");
  return 2.0 * z / den;
}

std::pair<cplx, cplx> h_rhs(const ModelSpec& model, cplx z, cplx h1, cplx h2) {
  const System s = make_system(model, z);
  const Eval e = evaluate(s, h1, h2, false);
  return {e.f1, e.f2};
}

HPair solve_h_general(const ModelSpec& model, cplx z, const SolverConfig& cfg) {
  cfg.validate();
  if (!(z.real() < 0.0)) throw DomainError("solve_h: need Re z < 0");
  try {
    return solve_direct(model, z, cfg);
  } catch (const ConvergenceError&) {
    return solve_ladder(model, z.imag(), {-z.real()}, cfg).front();
  }
}

HPair solve_h_from(const ModelSpec& model, cplx z, cplx h1, cplx h2, const SolverConfig& cfg) {
  cfg.validate();
  if (!(z.real() < 0.0)) throw DomainError("solve_h: need Re z < 0");
  return iterate(make_system(model, z), h1, h2, cfg);
}

HPair solve_h_equal(const ModelSpec& model, cplx z, const SolverConfig& cfg) {
  if (model.mode == ModelMode::general)
    throw DomainError("solve_h_equal: model must be in equal or identity mode");
  return solve_h_general(model, z, cfg);
}

cplx stieltjes_from_h(const HPair& h, double c, cplx z) {
  if (z == 0.0) throw PoleError("stieltjes_from_h: z = 0");
  const cplx P = 1.0 + c * c * h.h1 * h.h2;
  if (std::abs(P) < kPoleTol) throw PoleError("stieltjes_from_h: 1 + c^2 h1 h2 = 0");
  return (2.0 / c - 1.0) / z - 2.0 / (c * z) / P;
}

cplx stieltjes_integral(const ModelSpec& model, const HPair& h, cplx z) {
  const double c = model.c;
  const auto [r1, r2] = rho(c * h.h1, c * h.h2);
  const BivariateSpectralMeasure H = model.bivariate();
  cplx s = 0.0;
  for (const auto& a : H.atoms()) {
    const cplx D = -z + a.l1 * r1 + a.l2 * r2;
    if (std::abs(D) < kPoleTol) throw PoleError("stieltjes_integral: denominator vanished");
    s += a.w / D;
  }
  return s;
}

std::vector<HPair> solve_ladder(const ModelSpec& model, double x, const std::vector<double>& eps,
                                const SolverConfig& cfg) {
  cfg.validate();
  model.validate();
  if (eps.empty()) return {};
  for (std::size_t k = 0; k < eps.size(); ++k) {
    if (!(eps[k] > 0.0)) throw DomainError("solve_ladder: eps must be positive");
    if (k > 0 && !(eps[k] < eps[k - 1])) throw DomainError("solve_ladder: eps must decrease");
  }
  std::vector<HPair> out;
  out.reserve(eps.size());
  double u = std::max(cfg.path_start_u, eps.front());
  HPair h = solve_direct(model, cplx(-u, x), cfg);
  const auto first_below = std::find_if(eps.begin(), eps.end(), [u](double e) { return e < u; });
  const double ratio =
      first_below == eps.end() ? 0.5 : std::pow(*first_below / u, 1.0 / cfg.path_steps);
  for (double target : eps) {
    while (u > target) {
      const double next = std::max(target, u * ratio);
      h = continue_to(model, x, u, h, next, cfg);
      u = next;
    }
    out.push_back(h);
  }
  return out;
}

std::vector<HPair> solve_path(const ModelSpec& model, const std::vector<cplx>& targets,
                              const SolverConfig& cfg) {
  if (targets.empty()) throw DomainError("solve_path: no targets");
  std::vector<HPair> out;
  out.reserve(targets.size());
  for (std::size_t k = 0; k < targets.size(); ++k) {
    const cplx t = targets[k];
    if (!(t.real() < 0.0)) throw DomainError("solve_path: targets must lie in C_L");
    try {
      out.push_back(solve_ladder(model, t.imag(), {-t.real()}, cfg).front());
    } catch (const ConvergenceError& e) {
      throw ConvergenceError("solve_path: target " + std::to_string(k) + ": " + e.what(),
                             e.best_residual());
    }
  }
  return out;
}

cplx stieltjes_at(const ModelSpec& model, cplx z, const SolverConfig& cfg) {
  return stieltjes_from_h(solve_h_general(model, z, cfg), model.c, z);
}

cplx anti_stieltjes(const ModelSpec& model, cplx z, const SolverConfig& cfg) {
  if (!(z.imag() > 0.0)) throw DomainError("anti_stieltjes: need Im z > 0");
  const cplx w = cplx(0.0, 1.0) * z;
  const HPair h = solve_ladder(model, w.imag(), {-w.real()}, cfg).front();
  if (std::abs(1.0 + model.c * model.c * h.h1 * h.h2) < kPoleTol)
    throw PoleError("anti_stieltjes: 1 + c^2 h1 h2 = 0");
  return (2.0 / model.c - 1.0) / z - 2.0 / (model.c * z) / (1.0 + model.c * model.c * h.h1 * h.h2);
}

}  // namespace commspec
