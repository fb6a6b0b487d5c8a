////////////////////////////////////////////////////////////////////////////////
// mma.hpp
////////////////////////////////////////////////////////////////////////////////
/*! @file
//  Method of Moving Asymptotes for the standard nonlinear program
//      minimize f0(x)  subject to  fi(x) <= 0 (i = 1..m),  xmin <= x <= xmax.
//
//  Each outer iteration builds the separable convex MMA approximation around
//  the current iterate between per-variable asymptotes (initialized at half
//  the variable range, expanded by 1.2 on monotone progress and contracted by
//  0.7 on oscillation) and solves the subproblem with a primal-dual interior
//  point method on its KKT system. Elastic variables with weight c make the
//  subproblem always feasible and give the method its constraint-first
//  behavior: violated constraints are paid for linearly at a high price, so
//  the solver drives them out before chasing the objective.
//
//  The subproblem and its solver follow K. Svanberg's published description
//  of MMA (1987) and of the primal-dual subproblem solver; asymptote update
//  constants and the 0.1-of-range move limit are fixed here for
//  reproducibility.
*/
////////////////////////////////////////////////////////////////////////////////
#ifndef EXOSYN_MMA_HPP
#define EXOSYN_MMA_HPP

#include "exosyn/geometry.hpp"

#include <Eigen/LU>
#include <stdexcept>
#include <vector>

namespace exosyn {

class MmaOptimizer {
public:
    struct Options {
        double asymptote_init = 0.5;
        double asymptote_expand = 1.2;
        double asymptote_shrink = 0.7;
        double move_limit = 0.1;      // fraction of the variable range per step
        double bound_fraction = 0.1;  // albefa: keep iterates off the asymptotes
        double raa0 = 1e-5;
        double elastic_weight = 1e3;  // c_i, the feasibility price
        double epsimin = 1e-7;
    };

    MmaOptimizer(VecX xmin, VecX xmax, int n_constraints)
        : MmaOptimizer(std::move(xmin), std::move(xmax), n_constraints, Options()) {}

    MmaOptimizer(VecX xmin, VecX xmax, int n_constraints, Options opt)
        : xmin_(std::move(xmin)), xmax_(std::move(xmax)),
          m_(std::max(n_constraints, 1)), opt_(opt) {
        if (xmin_.size() != xmax_.size() || xmin_.size() == 0)
            throw std::invalid_argument("MmaOptimizer: inconsistent bounds");
        if (((xmax_ - xmin_).array() <= 0).any())
            throw std::invalid_argument("MmaOptimizer: xmax must exceed xmin");
        const int n = static_cast<int>(xmin_.size());
        low_ = VecX::Zero(n);
        upp_ = VecX::Zero(n);
    }

    int iterations() const { return iter_; }
    const VecX& lower_asymptotes() const { return low_; }
    const VecX& upper_asymptotes() const { return upp_; }

    /// One MMA step: returns the next iterate. `g` and `dg` may be empty when
    /// the problem is unconstrained (a never-active dummy constraint is used).
    VecX step(const VecX& x, const VecX& df0, const VecX& g, const MatX& dg) {
        const int n = static_cast<int>(x.size());
        if (x.size() != xmin_.size() || df0.size() != x.size())
            throw std::invalid_argument("MmaOptimizer::step: dimension mismatch");
        VecX gval = g;
        MatX dgval = dg;
        if (gval.size() == 0) {
            gval = VecX::Constant(1, -1.0);
            dgval = MatX::Zero(1, n);
        }
        if (gval.size() != m_ || dgval.rows() != m_ || dgval.cols() != n)
            throw std::invalid_argument("MmaOptimizer::step: constraint dimension mismatch");
        if (!df0.allFinite() || !gval.allFinite() || !dgval.allFinite())
            throw std::invalid_argument("MmaOptimizer::step: non-finite input");

        ++iter_;
        const VecX range = xmax_ - xmin_;
        if (iter_ <= 2) {
            low_ = x - opt_.asymptote_init * range;
            upp_ = x + opt_.asymptote_init * range;
        } else {
            for (int j = 0; j < n; ++j) {
                const double osc = (x[j] - xold1_[j]) * (xold1_[j] - xold2_[j]);
                double factor = 1.0;
                if (osc > 0) factor = opt_.asymptote_expand;
                if (osc < 0) factor = opt_.asymptote_shrink;
                low_[j] = x[j] - factor * (xold1_[j] - low_[j]);
                upp_[j] = x[j] + factor * (upp_[j] - xold1_[j]);
                low_[j] = std::clamp(low_[j], x[j] - 10.0 * range[j], x[j] - 0.01 * range[j]);
                upp_[j] = std::clamp(upp_[j], x[j] + 0.01 * range[j], x[j] + 10.0 * range[j]);
            }
        }

        VecX alfa(n), beta(n);
        for (int j = 0; j < n; ++j) {
            alfa[j] = std::max({xmin_[j], low_[j] + opt_.bound_fraction * (x[j] - low_[j]),
                                x[j] - opt_.move_limit * range[j]});
            beta[j] = std::min({xmax_[j], upp_[j] - opt_.bound_fraction * (upp_[j] - x[j]),
                                x[j] + opt_.move_limit * range[j]});
            if (beta[j] < alfa[j]) beta[j] = alfa[j] = 0.5 * (alfa[j] + beta[j]);
        }

        // Convex separable approximation coefficients.
        const VecX ux1 = upp_ - x, xl1 = x - low_;
        const VecX ux2 = ux1.cwiseProduct(ux1), xl2 = xl1.cwiseProduct(xl1);
        VecX p0(n), q0(n);
        for (int j = 0; j < n; ++j) {
            const double plus = std::max(df0[j], 0.0), minus = std::max(-df0[j], 0.0);
            const double pq = 0.001 * (plus + minus) + opt_.raa0 / std::max(range[j], 1e-5);
            p0[j] = (plus + pq) * ux2[j];
            q0[j] = (minus + pq) * xl2[j];
        }
        MatX P(m_, n), Q(m_, n);
        for (int i = 0; i < m_; ++i) {
            for (int j = 0; j < n; ++j) {
                const double plus = std::max(dgval(i, j), 0.0);
                const double minus = std::max(-dgval(i, j), 0.0);
                const double pq = 0.001 * (plus + minus) + opt_.raa0 / std::max(range[j], 1e-5);
                P(i, j) = (plus + pq) * ux2[j];
                Q(i, j) = (minus + pq) * xl2[j];
            }
        }
        const VecX b = P * ux1.cwiseInverse() + Q * xl1.cwiseInverse() - gval;

        xold2_ = iter_ >= 2 ? xold1_ : x;
        xold1_ = x;
        return solve_subproblem(alfa, beta, p0, q0, P, Q, b);
    }

private:
    VecX xmin_, xmax_;
    int m_;
    Options opt_;
    VecX low_, upp_, xold1_, xold2_;
    int iter_ = 0;

    struct Point {
        VecX x, y, lam, xsi, eta, mu, s;
        double z = 1.0, zet = 1.0;
    };

    /// Residual of the perturbed KKT system at barrier parameter epsi.
    VecX kkt_residual(const Point& pt, const VecX& alfa, const VecX& beta, const VecX& p0,
                      const VecX& q0, const MatX& P, const MatX& Q, const VecX& b,
                      double epsi) const {
        const double a0 = 1.0;
        const VecX c = VecX::Constant(m_, opt_.elastic_weight);
        const VecX d = VecX::Ones(m_);
        const VecX ux1 = upp_ - pt.x, xl1 = pt.x - low_;
        const VecX plam = p0 + P.transpose() * pt.lam;
        const VecX qlam = q0 + Q.transpose() * pt.lam;
        const VecX gvec = P * ux1.cwiseInverse() + Q * xl1.cwiseInverse();
        const VecX dpsidx = plam.cwiseQuotient(ux1.cwiseProduct(ux1)) -
                            qlam.cwiseQuotient(xl1.cwiseProduct(xl1));

        const int n = static_cast<int>(pt.x.size());
        VecX r(3 * n + 4 * m_ + 2);
        int at = 0;
        r.segment(at, n) = dpsidx - pt.xsi + pt.eta;                       at += n;
        r.segment(at, m_) = c + d.cwiseProduct(pt.y) - pt.mu - pt.lam;     at += m_;
        r[at++] = a0 - pt.zet; // a_i = 0
        r.segment(at, m_) = gvec - pt.y - VecX::Constant(m_, 0.0) + pt.s - b; at += m_;
        r.segment(at, n) = pt.xsi.cwiseProduct(pt.x - alfa).array() - epsi; at += n;
        r.segment(at, n) = pt.eta.cwiseProduct(beta - pt.x).array() - epsi; at += n;
        r.segment(at, m_) = pt.mu.cwiseProduct(pt.y).array() - epsi;        at += m_;
        r[at++] = pt.zet * pt.z - epsi;
        r.segment(at, m_) = pt.lam.cwiseProduct(pt.s).array() - epsi;
        return r;
    }

    VecX solve_subproblem(const VecX& alfa, const VecX& beta, const VecX& p0, const VecX& q0,
                          const MatX& P, const MatX& Q, const VecX& b) const {
        const int n = static_cast<int>(alfa.size());
        const double a0 = 1.0;
        const VecX c = VecX::Constant(m_, opt_.elastic_weight);
        const VecX d = VecX::Ones(m_);

        Point pt;
        pt.x = 0.5 * (alfa + beta);
        pt.y = VecX::Ones(m_);
        pt.lam = VecX::Ones(m_);
        pt.xsi = (pt.x - alfa).cwiseInverse().cwiseMax(1.0);
        pt.eta = (beta - pt.x).cwiseInverse().cwiseMax(1.0);
        pt.mu = (0.5 * c).cwiseMax(1.0);
        pt.s = VecX::Ones(m_);

        double epsi = 1.0;
        while (epsi > opt_.epsimin) {
            VecX residual = kkt_residual(pt, alfa, beta, p0, q0, P, Q, b, epsi);
            double resnorm = residual.norm();
            double resmax = residual.cwiseAbs().maxCoeff();

            for (int it = 0; it < 200 && resmax > 0.9 * epsi; ++it) {
                const VecX ux1 = upp_ - pt.x, xl1 = pt.x - low_;
                const VecX ux2 = ux1.cwiseProduct(ux1), xl2 = xl1.cwiseProduct(xl1);
                const VecX ux3 = ux2.cwiseProduct(ux1), xl3 = xl2.cwiseProduct(xl1);
                const VecX plam = p0 + P.transpose() * pt.lam;
                const VecX qlam = q0 + Q.transpose() * pt.lam;
                const VecX gvec = P * ux1.cwiseInverse() + Q * xl1.cwiseInverse();
                const VecX dpsidx = plam.cwiseQuotient(ux2) - qlam.cwiseQuotient(xl2);

                // GG(i,j) = dgvec_i/dx_j
                MatX GG(m_, n);
                for (int i = 0; i < m_; ++i)
                    GG.row(i) = P.row(i).cwiseQuotient(ux2.transpose()) -
                                Q.row(i).cwiseQuotient(xl2.transpose());

                const VecX delx = dpsidx - epsi * (pt.x - alfa).cwiseInverse() +
                                  epsi * (beta - pt.x).cwiseInverse();
                const VecX dely = c + d.cwiseProduct(pt.y) - pt.lam - epsi * pt.y.cwiseInverse();
                const double delz = a0 - epsi / pt.z;
                const VecX dellam = gvec - pt.y - b + epsi * pt.lam.cwiseInverse();

                const VecX diagx = 2.0 * (plam.cwiseQuotient(ux3) + qlam.cwiseQuotient(xl3)) +
                                   pt.xsi.cwiseQuotient(pt.x - alfa) +
                                   pt.eta.cwiseQuotient(beta - pt.x);
                const VecX diagy = d + pt.mu.cwiseQuotient(pt.y);
                const VecX diaglam = pt.s.cwiseQuotient(pt.lam);
                const VecX diaglamyi = diaglam + diagy.cwiseInverse();

                VecX dx(n), dlam(m_);
                double dz;
                if (m_ < n) {
                    const VecX blam =
                        dellam + dely.cwiseQuotient(diagy) - GG * delx.cwiseQuotient(diagx);
                    MatX AA(m_ + 1, m_ + 1);
                    AA.topLeftCorner(m_, m_) =
                        MatX(diaglamyi.asDiagonal()) +
                        GG * diagx.cwiseInverse().asDiagonal() * GG.transpose();
                    AA.topRightCorner(m_, 1).setZero();  // a_i = 0
                    AA.bottomLeftCorner(1, m_).setZero();
                    AA(m_, m_) = -pt.zet / pt.z;
                    VecX bb(m_ + 1);
                    bb.head(m_) = blam;
                    bb[m_] = delz;
                    const VecX sol = AA.partialPivLu().solve(bb);
                    dlam = sol.head(m_);
                    dz = sol[m_];
                    dx = -delx.cwiseQuotient(diagx) -
                         (GG.transpose() * dlam).cwiseQuotient(diagx);
                } else {
                    const VecX diaglamyiinv = diaglamyi.cwiseInverse();
                    const VecX dellamyi = dellam + dely.cwiseQuotient(diagy);
                    MatX AA(n + 1, n + 1);
                    AA.topLeftCorner(n, n) =
                        MatX(diagx.asDiagonal()) +
                        GG.transpose() * diaglamyiinv.asDiagonal() * GG;
                    AA.topRightCorner(n, 1).setZero(); // a_i = 0
                    AA.bottomLeftCorner(1, n).setZero();
                    AA(n, n) = pt.zet / pt.z;
                    VecX bb(n + 1);
                    bb.head(n) = -(delx + GG.transpose() * dellamyi.cwiseProduct(diaglamyiinv));
                    bb[n] = -delz;
                    const VecX sol = AA.partialPivLu().solve(bb);
                    dx = sol.head(n);
                    dz = sol[n];
                    dlam = (GG * dx).cwiseProduct(diaglamyiinv) +
                           dellamyi.cwiseProduct(diaglamyiinv);
                }
                const VecX dy = -dely.cwiseQuotient(diagy) + dlam.cwiseQuotient(diagy);
                const VecX dxsi = -pt.xsi + epsi * (pt.x - alfa).cwiseInverse() -
                                  pt.xsi.cwiseProduct(dx).cwiseQuotient(pt.x - alfa);
                const VecX deta = -pt.eta + epsi * (beta - pt.x).cwiseInverse() +
                                  pt.eta.cwiseProduct(dx).cwiseQuotient(beta - pt.x);
                const VecX dmu =
                    -pt.mu + epsi * pt.y.cwiseInverse() - pt.mu.cwiseProduct(dy).cwiseQuotient(pt.y);
                const double dzet = -pt.zet + epsi / pt.z - pt.zet * dz / pt.z;
                const VecX ds = -pt.s + epsi * pt.lam.cwiseInverse() -
                                pt.s.cwiseProduct(dlam).cwiseQuotient(pt.lam);

                // largest step keeping all barrier variables strictly positive
                double stinv = 1.0;
                auto cap = [&stinv](double dv, double v) {
                    stinv = std::max(stinv, -1.01 * dv / v);
                };
                for (int i = 0; i < m_; ++i) {
                    cap(dy[i], pt.y[i]);
                    cap(dlam[i], pt.lam[i]);
                    cap(dmu[i], pt.mu[i]);
                    cap(ds[i], pt.s[i]);
                }
                for (int j = 0; j < n; ++j) {
                    cap(dxsi[j], pt.xsi[j]);
                    cap(deta[j], pt.eta[j]);
                    cap(dx[j], pt.x[j] - alfa[j]);
                    cap(-dx[j], beta[j] - pt.x[j]);
                }
                cap(dz, pt.z);
                cap(dzet, pt.zet);
                double steg = 1.0 / stinv;

                const Point old = pt;
                double resnew = 2.0 * resnorm;
                for (int half = 0; half < 50 && resnew > resnorm; ++half) {
                    pt.x = old.x + steg * dx;
                    pt.y = old.y + steg * dy;
                    pt.z = old.z + steg * dz;
                    pt.lam = old.lam + steg * dlam;
                    pt.xsi = old.xsi + steg * dxsi;
                    pt.eta = old.eta + steg * deta;
                    pt.mu = old.mu + steg * dmu;
                    pt.zet = old.zet + steg * dzet;
                    pt.s = old.s + steg * ds;
                    residual = kkt_residual(pt, alfa, beta, p0, q0, P, Q, b, epsi);
                    resnew = residual.norm();
                    steg *= 0.5;
                }
                resnorm = resnew;
                resmax = residual.cwiseAbs().maxCoeff();
            }
            epsi *= 0.1;
        }
        return pt.x;
    }
};

} // namespace exosyn

#endif // EXOSYN_MMA_HPP
