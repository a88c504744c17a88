#include "stocp/solver.hpp"

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <limits>

namespace stocp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Stacked {
  SpMat A;           // [Aeq; box selector rows; S; a^T]
  std::vector<int> box_var;  // variable index per box row
  int m_eq = 0, m_box = 0, m_quad = 0;  // quad = S rows + 1 when present
  int rows() const { return m_eq + m_box + m_quad; }
};

Stacked stack_constraints(const Qcqp& p) {
  Stacked st;
  st.m_eq = static_cast<int>(p.Aeq.rows());
  for (int j = 0; j < p.n; ++j)
    if (std::isfinite(p.lb(j)) || std::isfinite(p.ub(j))) st.box_var.push_back(j);
  st.m_box = static_cast<int>(st.box_var.size());
  st.m_quad = p.has_quad ? static_cast<int>(p.S.rows()) + 1 : 0;

  std::vector<Eigen::Triplet<double>> trips;
  for (int k = 0; k < p.Aeq.outerSize(); ++k)
    for (SpMat::InnerIterator it(p.Aeq, k); it; ++it)
      trips.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
  for (int i = 0; i < st.m_box; ++i) trips.emplace_back(st.m_eq + i, st.box_var[i], 1.0);
  if (p.has_quad) {
    const int base = st.m_eq + st.m_box;
    for (int k = 0; k < p.S.outerSize(); ++k)
      for (SpMat::InnerIterator it(p.S, k); it; ++it)
        trips.emplace_back(base + static_cast<int>(it.row()), static_cast<int>(it.col()),
                           it.value());
    const int arow = base + static_cast<int>(p.S.rows());
    for (int j = 0; j < p.n; ++j)
      if (p.a(j) != 0.0) trips.emplace_back(arow, j, p.a(j));
  }
  SpMat A(st.rows(), p.n);
  A.setFromTriplets(trips.begin(), trips.end());
  st.A = A;
  return st;
}

// Projection multiplier for the set {(y, t) : |y/ey - c|^2 + t/et <= dd},
// parameterized by the scalar nu >= 0 (bisection; the vector update happens
// once afterwards).
double quad_projection_multiplier(double r0sq, double t0_over_et, double dd, double ey,
                                  double et) {
  const double val = r0sq + t0_over_et - dd;
  if (val <= 0.0) return 0.0;
  double lo = 0.0, hi = et * et * val;
  for (int it = 0; it < 200; ++it) {
    const double nu = 0.5 * (lo + hi);
    const double den = 1.0 + 2.0 * nu / (ey * ey);
    const double phi = r0sq / (den * den) - nu / (et * et) + t0_over_et - dd;
    if (phi > 0.0) lo = nu; else hi = nu;
    if (hi - lo <= 1e-16 * (1.0 + hi)) break;
  }
  return 0.5 * (lo + hi);
}

struct ScaledProblem {
  SpMat P, A;
  Vec q;
  Vec D, E;     // x = D xhat, z = E^{-1} zhat
  double cost = 1.0;
  // quad block scales (uniform within the block)
  double ey = 1.0, et = 1.0;
};

ScaledProblem scale_problem(const Qcqp& p, const Stacked& st, const SolverOptions& opts) {
  ScaledProblem sc;
  sc.D = Vec::Ones(p.n);
  sc.E = Vec::Ones(st.rows());
  sc.P = p.P;
  sc.A = st.A;
  sc.q = p.q;
  if (!opts.scaling) return sc;

  const int m = st.rows();
  for (int pass = 0; pass < opts.scaling_iters; ++pass) {
    Vec cnorm = Vec::Zero(p.n);
    for (int k = 0; k < sc.P.outerSize(); ++k)
      for (SpMat::InnerIterator it(sc.P, k); it; ++it) {
        cnorm(it.col()) = std::max(cnorm(it.col()), std::abs(it.value()));
        cnorm(it.row()) = std::max(cnorm(it.row()), std::abs(it.value()));
      }
    Vec rnorm = Vec::Zero(std::max(m, 1));
    for (int k = 0; k < sc.A.outerSize(); ++k)
      for (SpMat::InnerIterator it(sc.A, k); it; ++it) {
        cnorm(it.col()) = std::max(cnorm(it.col()), std::abs(it.value()));
        rnorm(it.row()) = std::max(rnorm(it.row()), std::abs(it.value()));
      }
    // Uniform scale across the trust-region y-rows keeps the ball isotropic.
    if (st.m_quad > 0) {
      const int base = st.m_eq + st.m_box;
      double blk = 0.0;
      for (int i = base; i < base + st.m_quad - 1; ++i) blk = std::max(blk, rnorm(i));
      for (int i = base; i < base + st.m_quad - 1; ++i) rnorm(i) = blk;
    }
    Vec dscale(p.n), escale(std::max(m, 1));
    for (int j = 0; j < p.n; ++j) dscale(j) = cnorm(j) > 0.0 ? 1.0 / std::sqrt(cnorm(j)) : 1.0;
    for (int i = 0; i < m; ++i) escale(i) = rnorm(i) > 0.0 ? 1.0 / std::sqrt(rnorm(i)) : 1.0;

    sc.D.array() *= dscale.array();
    if (m > 0) sc.E.array() *= escale.head(m).array();
    sc.P = dscale.asDiagonal() * sc.P * dscale.asDiagonal();
    if (m > 0) sc.A = escale.head(m).asDiagonal() * sc.A * dscale.asDiagonal();
    sc.q = dscale.asDiagonal() * sc.q;
  }
  // Cost normalization.
  Vec pcol = Vec::Zero(p.n);
  for (int k = 0; k < sc.P.outerSize(); ++k)
    for (SpMat::InnerIterator it(sc.P, k); it; ++it)
      pcol(it.col()) = std::max(pcol(it.col()), std::abs(it.value()));
  const double c0 = std::max(pcol.size() > 0 ? pcol.mean() : 0.0, sc.q.lpNorm<Eigen::Infinity>());
  sc.cost = c0 > 0.0 ? 1.0 / c0 : 1.0;
  sc.P *= sc.cost;
  sc.q *= sc.cost;

  if (st.m_quad > 0) {
    const int base = st.m_eq + st.m_box;
    sc.ey = sc.E(base);  // uniform within the block by construction
    sc.et = sc.E(base + st.m_quad - 1);
  }
  return sc;
}

struct RhoVec {
  Vec r;      // per-row penalty
  Vec r_inv;
};

RhoVec make_rho(const Stacked& st, double rho, double eq_scale) {
  RhoVec rv;
  rv.r = Vec::Constant(st.rows(), rho);
  for (int i = 0; i < st.m_eq; ++i) rv.r(i) = std::min(rho * eq_scale, 1e6);
  rv.r_inv = rv.r.size() > 0 ? Vec(rv.r.cwiseInverse()) : Vec();
  return rv;
}

struct Residuals {
  double pri = 0.0, dua = 0.0;
};

}  // namespace

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "OPTIMAL";
    case SolveStatus::MaxIter: return "MAX_ITER";
    case SolveStatus::Infeasible: return "INFEASIBLE";
  }
  return "?";
}

namespace {

// Euclidean projection of the scaled constraint value onto the scaled set;
// fills the unscaled trust multiplier when asked.
void project_set(const Qcqp& p, const Stacked& st, const ScaledProblem& sc, const Vec& in,
                 Vec& out, double* nu_scaled = nullptr) {
  out.resize(in.size());
  for (int i = 0; i < st.m_eq; ++i) out(i) = p.beq(i) * sc.E(i);
  for (int i = 0; i < st.m_box; ++i) {
    const int row = st.m_eq + i;
    const int j = st.box_var[i];
    const double lo = std::isfinite(p.lb(j)) ? p.lb(j) * sc.E(row) : -kInf;
    const double hi = std::isfinite(p.ub(j)) ? p.ub(j) * sc.E(row) : kInf;
    out(row) = std::min(std::max(in(row), lo), hi);
  }
  if (st.m_quad > 0) {
    const int base = st.m_eq + st.m_box;
    const int py = st.m_quad - 1;
    const double dd = p.d - p.k0;
    const auto y0 = in.segment(base, py);
    const double t0 = in(base + py);
    const double r0sq = (y0 / sc.ey - p.c).squaredNorm();
    const double nu = quad_projection_multiplier(r0sq, t0 / sc.et, dd, sc.ey, sc.et);
    if (nu_scaled) *nu_scaled = nu;
    if (nu == 0.0) {
      out.segment(base, py) = y0;
      out(base + py) = t0;
    } else {
      const double den = 1.0 + 2.0 * nu / (sc.ey * sc.ey);
      out.segment(base, py) = (y0 + (2.0 * nu / sc.ey) * p.c) / den;
      out(base + py) = t0 - nu / sc.et;
    }
  }
}

Residuals compute_residuals(const Qcqp& p, const Stacked& st, const ScaledProblem& sc,
                            const Vec& xhat, const Vec& zhat, const Vec& yhat, Vec& x_out,
                            Vec& y_out) {
  x_out = sc.D.asDiagonal() * xhat;
  const int m = st.rows();
  Vec z(m);
  for (int i = 0; i < m; ++i) z(i) = zhat(i) / sc.E(i);
  y_out.resize(m);
  for (int i = 0; i < m; ++i) y_out(i) = yhat(i) * sc.E(i) / sc.cost;

  Residuals res;
  if (m > 0) {
    const Vec ax = st.A * x_out;
    res.pri = (ax - z).lpNorm<Eigen::Infinity>();
    res.dua = (p.P * x_out + p.q + st.A.transpose() * y_out).lpNorm<Eigen::Infinity>();
  } else {
    res.dua = (p.P * x_out + p.q).lpNorm<Eigen::Infinity>();
  }
  return res;
}

// Support function of the constraint set in an unscaled direction; +inf when
// the direction is not in the domain (then no certificate).
double support_function(const Qcqp& p, const Stacked& st, const Vec& dy, bool& finite) {
  finite = true;
  double s = 0.0;
  for (int i = 0; i < st.m_eq; ++i) s += p.beq(i) * dy(i);
  for (int i = 0; i < st.m_box; ++i) {
    const int row = st.m_eq + i;
    const int j = st.box_var[i];
    const double d = dy(row);
    if (d > 0.0) {
      if (!std::isfinite(p.ub(j))) { finite = false; return 0.0; }
      s += p.ub(j) * d;
    } else if (d < 0.0) {
      if (!std::isfinite(p.lb(j))) { finite = false; return 0.0; }
      s += p.lb(j) * d;
    }
  }
  if (st.m_quad > 0) {
    const int base = st.m_eq + st.m_box;
    const int py = st.m_quad - 1;
    const auto eta = dy.segment(base, py);
    const double tau = dy(base + py);
    const double tiny = 1e-14 * std::max(1.0, dy.lpNorm<Eigen::Infinity>());
    if (tau > tiny) {
      s += p.c.dot(eta) + tau * (p.d - p.k0) + eta.squaredNorm() / (4.0 * tau);
    } else if (eta.lpNorm<Eigen::Infinity>() > tiny) {
      finite = false;
      return 0.0;
    }
  }
  return s;
}

struct PolishResult {
  bool ok = false;
  Vec x, y;
  double nu = 0.0;
};

// Equality-constrained re-solve on the detected active set. The trust-region
// multiplier, when active, is pinned by bisection on the constraint value.
PolishResult polish(const Qcqp& p, const Stacked& st, const Vec& y_admm, double nu_admm,
                    const SolverOptions& opts) {
  PolishResult out;
  std::vector<int> act_lo, act_hi;
  for (int i = 0; i < st.m_box; ++i) {
    const double yi = y_admm(st.m_eq + i);
    if (yi < 0.0) act_lo.push_back(i);
    else if (yi > 0.0) act_hi.push_back(i);
  }
  const int m_act = st.m_eq + static_cast<int>(act_lo.size() + act_hi.size());
  const int dim = p.n + m_act;
  const double reg = opts.polish_reg;

  std::vector<Eigen::Triplet<double>> trips;
  for (int k = 0; k < p.P.outerSize(); ++k)
    for (SpMat::InnerIterator it(p.P, k); it; ++it)
      trips.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
  for (int j = 0; j < p.n; ++j) trips.emplace_back(j, j, reg);
  for (int k = 0; k < p.Aeq.outerSize(); ++k)
    for (SpMat::InnerIterator it(p.Aeq, k); it; ++it) {
      trips.emplace_back(p.n + static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
      trips.emplace_back(static_cast<int>(it.col()), p.n + static_cast<int>(it.row()), it.value());
    }
  int row = p.n + st.m_eq;
  Vec rhs_g(m_act);
  rhs_g.head(st.m_eq) = p.beq;
  for (int i : act_lo) {
    trips.emplace_back(row, st.box_var[i], 1.0);
    trips.emplace_back(st.box_var[i], row, 1.0);
    rhs_g(row - p.n) = p.lb(st.box_var[i]);
    ++row;
  }
  for (int i : act_hi) {
    trips.emplace_back(row, st.box_var[i], 1.0);
    trips.emplace_back(st.box_var[i], row, 1.0);
    rhs_g(row - p.n) = p.ub(st.box_var[i]);
    ++row;
  }
  for (int i = 0; i < m_act; ++i) trips.emplace_back(p.n + i, p.n + i, -reg);

  // Quadratic-constraint curvature enters through nu; assembled on demand.
  SpMat sts;
  Vec stc = Vec::Zero(p.n);
  if (p.has_quad) {
    sts = SpMat(p.S.transpose() * p.S);
    stc = p.S.transpose() * p.c;
  }

  auto factor_and_solve = [&](double nu, Vec& x, Vec& lam) -> bool {
    std::vector<Eigen::Triplet<double>> t2 = trips;
    if (p.has_quad && nu > 0.0)
      for (int k = 0; k < sts.outerSize(); ++k)
        for (SpMat::InnerIterator it(sts, k); it; ++it)
          t2.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()),
                          2.0 * nu * it.value());
    SpMat kkt(dim, dim);
    kkt.setFromTriplets(t2.begin(), t2.end());
    Eigen::SimplicialLDLT<SpMat> ldlt(kkt);
    if (ldlt.info() != Eigen::Success) return false;
    Vec rhs(dim);
    rhs.head(p.n) = -p.q;
    if (p.has_quad && nu > 0.0) rhs.head(p.n) += nu * (2.0 * stc - p.a);
    rhs.tail(m_act) = rhs_g;
    Vec sol = ldlt.solve(rhs);
    // one refinement step against the unregularized system
    Vec resid = rhs;
    resid.head(p.n) -= p.P * sol.head(p.n);
    if (p.has_quad && nu > 0.0) resid.head(p.n) -= 2.0 * nu * (sts * sol.head(p.n));
    if (m_act > 0) {
      Vec lam_part = sol.tail(m_act);
      Vec gx(m_act);
      gx.head(st.m_eq) = p.Aeq * sol.head(p.n);
      int rr = st.m_eq;
      for (int i : act_lo) gx(rr++) = sol(st.box_var[i]);
      for (int i : act_hi) gx(rr++) = sol(st.box_var[i]);
      resid.head(p.n) -= [&] {
        Vec v = Vec::Zero(p.n);
        v += p.Aeq.transpose() * lam_part.head(st.m_eq);
        int q2 = st.m_eq;
        for (int i : act_lo) v(st.box_var[i]) += lam_part(q2++);
        for (int i : act_hi) v(st.box_var[i]) += lam_part(q2++);
        return v;
      }();
      resid.tail(m_act) -= gx;
    }
    sol += ldlt.solve(resid);
    x = sol.head(p.n);
    lam = sol.tail(m_act);
    return x.allFinite() && lam.allFinite();
  };

  Vec x, lam;
  double nu = 0.0;
  const double dd = p.has_quad ? p.d - p.k0 : 0.0;
  if (!factor_and_solve(0.0, x, lam)) return out;
  if (p.has_quad) {
    const double g0 = (p.S * x - p.c).squaredNorm() + p.a.dot(x) - dd;
    const bool tr_active = g0 > 1e-12 * std::max(1.0, std::abs(dd)) || nu_admm > 1e-7;
    if (tr_active && g0 > 0.0) {
      double lo = 0.0, hi = std::max(1.0, 2.0 * nu_admm);
      Vec xh, lh;
      for (int grow = 0; grow < 60; ++grow) {
        if (!factor_and_solve(hi, xh, lh)) return out;
        if ((p.S * xh - p.c).squaredNorm() + p.a.dot(xh) - dd <= 0.0) break;
        lo = hi;
        hi *= 4.0;
      }
      for (int it = 0; it < 120; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (!factor_and_solve(mid, x, lam)) return out;
        const double g = (p.S * x - p.c).squaredNorm() + p.a.dot(x) - dd;
        if (g > 0.0) lo = mid; else hi = mid;
        if (hi - lo <= 1e-14 * (1.0 + hi)) break;
      }
      nu = 0.5 * (lo + hi);
      if (!factor_and_solve(nu, x, lam)) return out;
    }
  }

  // Feasibility of inactive bounds.
  for (int i = 0; i < st.m_box; ++i) {
    const int j = st.box_var[i];
    const double tol = 1e-9 * std::max(1.0, std::abs(x(j)));
    if (x(j) < p.lb(j) - tol || x(j) > p.ub(j) + tol) return out;
  }

  out.x = x;
  out.nu = nu;
  out.y = Vec::Zero(st.rows());
  out.y.head(st.m_eq) = lam.head(st.m_eq);
  int rr = st.m_eq;
  for (int i : act_lo) out.y(st.m_eq + i) = lam(rr++);
  for (int i : act_hi) out.y(st.m_eq + i) = lam(rr++);
  if (p.has_quad) {
    const int base = st.m_eq + st.m_box;
    out.y.segment(base, st.m_quad - 1) = 2.0 * nu * (p.S * x - p.c);
    out.y(base + st.m_quad - 1) = nu;
  }
  out.ok = true;
  return out;
}

}  // namespace

SubproblemSolution solve(const Qcqp& p, const SolverOptions& opts,
                         const std::optional<WarmStart>& warm) {
  const Stacked st = stack_constraints(p);
  const ScaledProblem sc = scale_problem(p, st, opts);
  const int m = st.rows();

  SubproblemSolution sol;
  sol.eq_rows = st.m_eq;
  sol.box_rows = st.m_box;
  sol.quad_rows = st.m_quad;

  double rho_base = opts.rho;
  RhoVec rho = make_rho(st, rho_base, opts.rho_eq_scale);
  int epoch = 0;

  auto factorize = [&](Eigen::SimplicialLDLT<SpMat>& ldlt) {
    SpMat k = sc.P;
    for (int j = 0; j < p.n; ++j) k.coeffRef(j, j) += opts.sigma;
    if (m > 0) {
      SpMat ra = rho.r.asDiagonal() * sc.A;
      SpMat ata = SpMat(sc.A.transpose() * ra);
      k = k + ata;
    }
    k.makeCompressed();
    ldlt.compute(k);
  };

  Eigen::SimplicialLDLT<SpMat> ldlt;
  factorize(ldlt);

  Vec xhat = Vec::Zero(p.n);
  Vec zhat = Vec::Zero(m);
  Vec yhat = Vec::Zero(m);
  if (warm) {
    xhat = warm->x.cwiseQuotient(sc.D);
    if (warm->y.size() == m && m > 0)
      for (int i = 0; i < m; ++i) yhat(i) = warm->y(i) * sc.cost / sc.E(i);
    if (m > 0) zhat = sc.A * xhat;
  }

  Vec x_unscaled, y_unscaled;
  double nu_scaled = 0.0;
  Residuals res;
  bool converged = false;
  bool infeasible = false;
  int iter = 0;
  Vec yhat_prev = yhat;
  int pinf_hits = 0;

  for (iter = 1; iter <= opts.max_iter; ++iter) {
    Vec rhs = opts.sigma * xhat - sc.q;
    if (m > 0) rhs += sc.A.transpose() * (rho.r.cwiseProduct(zhat) - yhat);
    const Vec xtilde = ldlt.solve(rhs);
    Vec v_old;
    if (opts.record_merit && m > 0) v_old = zhat + rho.r_inv.cwiseProduct(yhat);

    Vec xnew = opts.alpha * xtilde + (1.0 - opts.alpha) * xhat;
    if (m > 0) {
      const Vec ztilde = sc.A * xtilde;
      const Vec w = opts.alpha * ztilde + (1.0 - opts.alpha) * zhat +
                    rho.r_inv.cwiseProduct(yhat);
      Vec znew;
      project_set(p, st, sc, w, znew, &nu_scaled);
      yhat_prev = yhat;
      yhat = rho.r.cwiseProduct(w - znew);
      zhat = znew;
    }
    Vec xold = xhat;
    xhat = xnew;

    if (opts.record_merit) {
      double acc = opts.sigma * (xhat - xold).squaredNorm();
      if (m > 0) {
        const Vec v_new = zhat + rho.r_inv.cwiseProduct(yhat);
        acc += (v_new - v_old).cwiseProduct(rho.r.cwiseProduct(v_new - v_old)).sum();
      }
      sol.merit.push_back({epoch, std::sqrt(acc)});
    }

    if (iter % opts.check_interval == 0 || iter == opts.max_iter) {
      res = compute_residuals(p, st, sc, xhat, zhat, yhat, x_unscaled, y_unscaled);
      if (res.pri <= opts.eps_pri && res.dua <= opts.eps_dual) {
        converged = true;
        break;
      }
      // Primal infeasibility certificate: dual direction in the null space of
      // A^T with negative support on the constraint set.
      if (m > 0) {
        Vec dy(m);
        for (int i = 0; i < m; ++i) dy(i) = (yhat(i) - yhat_prev(i)) * sc.E(i) / sc.cost;
        const double dnorm = dy.lpNorm<Eigen::Infinity>();
        if (dnorm > 1e-14) {
          const double atd = (st.A.transpose() * dy).lpNorm<Eigen::Infinity>();
          bool finite = false;
          const double sup = support_function(p, st, dy, finite);
          if (atd <= opts.eps_prim_inf * dnorm && finite && sup < -opts.eps_prim_inf * dnorm) {
            if (++pinf_hits >= 2) {
              infeasible = true;
              break;
            }
          } else {
            pinf_hits = 0;
          }
        }
      }
      if (opts.adaptive_rho && m > 0) {
        const Vec ax = st.A * x_unscaled;
        Vec z(m);
        for (int i = 0; i < m; ++i) z(i) = zhat(i) / sc.E(i);
        const double pscale =
            std::max({ax.lpNorm<Eigen::Infinity>(), z.lpNorm<Eigen::Infinity>(), 1e-10});
        const double dscale = std::max({(p.P * x_unscaled).lpNorm<Eigen::Infinity>(),
                                        (st.A.transpose() * y_unscaled).lpNorm<Eigen::Infinity>(),
                                        p.q.lpNorm<Eigen::Infinity>(), 1e-10});
        const double ratio = (res.pri / pscale) / std::max(res.dua / dscale, 1e-16);
        if (ratio > 25.0 || ratio < 0.04) {
          rho_base = std::clamp(rho_base * std::sqrt(ratio), 1e-6, 1e6);
          rho = make_rho(st, rho_base, opts.rho_eq_scale);
          factorize(ldlt);
          ++epoch;
        }
      }
    }
  }

  if (iter > opts.max_iter) iter = opts.max_iter;
  res = compute_residuals(p, st, sc, xhat, zhat, yhat, x_unscaled, y_unscaled);

  sol.x = x_unscaled;
  sol.y = y_unscaled;
  sol.iterations = iter;
  sol.primal_res = res.pri;
  sol.dual_res = res.dua;
  sol.trust_multiplier =
      st.m_quad > 0 ? y_unscaled(st.m_eq + st.m_box + st.m_quad - 1) : 0.0;

  if (infeasible) {
    sol.status = SolveStatus::Infeasible;
    sol.objective = std::numeric_limits<double>::quiet_NaN();
    return sol;
  }

  if (opts.polish) {
    const PolishResult pr = polish(p, st, sol.y, sol.trust_multiplier, opts);
    if (pr.ok) {
      Vec xp = pr.x, yp = pr.y;
      KktResidual kr = kkt_residual(p, xp, yp);
      if (std::max(kr.stationarity, kr.primal) <= std::max(res.pri, res.dua) ||
          (kr.stationarity <= opts.eps_dual && kr.primal <= opts.eps_pri)) {
        sol.x = xp;
        sol.y = yp;
        sol.trust_multiplier = pr.nu;
        sol.primal_res = kr.primal;
        sol.dual_res = kr.stationarity;
        sol.polished = true;
        converged = sol.primal_res <= opts.eps_pri && sol.dual_res <= opts.eps_dual;
      }
    }
  }

  sol.status = converged ? SolveStatus::Optimal : SolveStatus::MaxIter;
  sol.objective = p.objective(sol.x);
  return sol;
}

KktResidual kkt_residual(const Qcqp& p, const Vec& x, const Vec& y) {
  const Stacked st = stack_constraints(p);
  KktResidual r;

  Vec grad = p.P * x + p.q;
  if (y.size() == st.rows() && st.rows() > 0) grad += st.A.transpose() * y;
  r.stationarity = grad.lpNorm<Eigen::Infinity>();

  double pri = 0.0;
  if (st.m_eq > 0) pri = (p.Aeq * x - p.beq).lpNorm<Eigen::Infinity>();
  for (int i = 0; i < st.m_box; ++i) {
    const int j = st.box_var[i];
    if (std::isfinite(p.lb(j))) pri = std::max(pri, p.lb(j) - x(j));
    if (std::isfinite(p.ub(j))) pri = std::max(pri, x(j) - p.ub(j));
  }
  if (p.has_quad) pri = std::max(pri, p.quad_value(x) - p.d);
  r.primal = std::max(pri, 0.0);

  if (y.size() == st.rows() && st.rows() > 0) {
    double comp = 0.0;
    for (int i = 0; i < st.m_box; ++i) {
      const int j = st.box_var[i];
      const double yi = y(st.m_eq + i);
      if (yi > 0.0 && std::isfinite(p.ub(j))) comp = std::max(comp, std::abs(yi * (x(j) - p.ub(j))));
      if (yi < 0.0 && std::isfinite(p.lb(j))) comp = std::max(comp, std::abs(yi * (x(j) - p.lb(j))));
    }
    if (p.has_quad) {
      const double tau = y(st.m_eq + st.m_box + st.m_quad - 1);
      comp = std::max(comp, std::abs(tau * (p.quad_value(x) - p.d)));
    }
    r.complementarity = comp;
  }
  return r;
}

}  // namespace stocp
