#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/OrderingMethods>
#include <Eigen/SparseCholesky>

#include "ddcp/conic/solver.hpp"

namespace ddcp::conic {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;

// Nesterov-Todd scaling block for one second-order cone.
struct SocScaling {
    int offset = 0;
    int size = 0;
    MatrixXd W, Winv, W2;
};

class ConeGeometry {
public:
    ConeGeometry(int linear, std::vector<int> socs) : linear_(linear), soc_sizes_(std::move(socs)) {
        int off = linear_;
        for (int q : soc_sizes_) {
            socs_.push_back(SocScaling{off, q, {}, {}, {}});
            off += q;
        }
        total_ = off;
        lin_w_.resize(linear_);
    }

    int dim() const { return total_; }
    int degree() const { return linear_ + static_cast<int>(soc_sizes_.size()); }
    int linear() const { return linear_; }
    const std::vector<SocScaling>& socs() const { return socs_; }

    // s - alpha * e shift so that the point is strictly interior.
    double min_eig(const VectorXd& v) const {
        double m = kInf;
        for (int i = 0; i < linear_; ++i) m = std::min(m, v[i]);
        for (const auto& c : socs_) {
            m = std::min(m, v[c.offset] - v.segment(c.offset + 1, c.size - 1).norm());
        }
        return m;
    }

    void add_identity(VectorXd& v, double alpha) const {
        for (int i = 0; i < linear_; ++i) v[i] += alpha;
        for (const auto& c : socs_) v[c.offset] += alpha;
    }

    // Computes NT scaling; returns false when s or z left the interior.
    bool update_scaling(const VectorXd& s, const VectorXd& z, VectorXd& lambda) {
        lambda.resize(total_);
        for (int i = 0; i < linear_; ++i) {
            if (!(s[i] > 0.0) || !(z[i] > 0.0)) return false;
            lin_w_[i] = std::sqrt(s[i] / z[i]);
            lambda[i] = std::sqrt(s[i] * z[i]);
        }
        for (auto& c : socs_) {
            const int q = c.size;
            const auto sc = s.segment(c.offset, q);
            const auto zc = z.segment(c.offset, q);
            const double sres = sc[0] * sc[0] - sc.tail(q - 1).squaredNorm();
            const double zres = zc[0] * zc[0] - zc.tail(q - 1).squaredNorm();
            if (!(sres > 0.0) || !(zres > 0.0) || sc[0] <= 0.0 || zc[0] <= 0.0) return false;
            const double snorm = std::sqrt(sres);
            const double znorm = std::sqrt(zres);
            const VectorXd sbar = sc / snorm;
            const VectorXd zbar = zc / znorm;
            const double eta = std::sqrt(snorm / znorm);
            const double gamma = std::sqrt(0.5 * (1.0 + sbar.dot(zbar)));
            const double a = (0.5 / gamma) * (sbar[0] + zbar[0]);
            const VectorXd qv = (0.5 / gamma) * (sbar.tail(q - 1) - zbar.tail(q - 1));
            c.W.setZero(q, q);
            c.W(0, 0) = a;
            c.W.block(0, 1, 1, q - 1) = qv.transpose();
            c.W.block(1, 0, q - 1, 1) = qv;
            c.W.block(1, 1, q - 1, q - 1) =
                MatrixXd::Identity(q - 1, q - 1) + qv * qv.transpose() / (1.0 + a);
            c.Winv = c.W;
            c.Winv.block(0, 1, 1, q - 1) *= -1.0;
            c.Winv.block(1, 0, q - 1, 1) *= -1.0;
            c.W *= eta;
            c.Winv /= eta;
            c.W2 = c.W * c.W;
            lambda.segment(c.offset, q) = c.W * zc;
        }
        return true;
    }

    VectorXd apply_w(const VectorXd& v) const {
        VectorXd out(total_);
        for (int i = 0; i < linear_; ++i) out[i] = lin_w_[i] * v[i];
        for (const auto& c : socs_) out.segment(c.offset, c.size) = c.W * v.segment(c.offset, c.size);
        return out;
    }

    VectorXd apply_winv(const VectorXd& v) const {
        VectorXd out(total_);
        for (int i = 0; i < linear_; ++i) out[i] = v[i] / lin_w_[i];
        for (const auto& c : socs_) out.segment(c.offset, c.size) = c.Winv * v.segment(c.offset, c.size);
        return out;
    }

    VectorXd apply_w2(const VectorXd& v) const {
        VectorXd out(total_);
        for (int i = 0; i < linear_; ++i) out[i] = lin_w_[i] * lin_w_[i] * v[i];
        for (const auto& c : socs_) out.segment(c.offset, c.size) = c.W2 * v.segment(c.offset, c.size);
        return out;
    }

    double lin_w2(int i) const { return lin_w_[i] * lin_w_[i]; }

    VectorXd jordan(const VectorXd& u, const VectorXd& v) const {
        VectorXd out(total_);
        for (int i = 0; i < linear_; ++i) out[i] = u[i] * v[i];
        for (const auto& c : socs_) {
            const int o = c.offset, q = c.size;
            out[o] = u.segment(o, q).dot(v.segment(o, q));
            out.segment(o + 1, q - 1) = u[o] * v.segment(o + 1, q - 1) + v[o] * u.segment(o + 1, q - 1);
        }
        return out;
    }

    // Solves lambda o x = r for x.
    VectorXd jordan_div(const VectorXd& lambda, const VectorXd& r) const {
        VectorXd out(total_);
        for (int i = 0; i < linear_; ++i) out[i] = r[i] / lambda[i];
        for (const auto& c : socs_) {
            const int o = c.offset, q = c.size;
            const double l0 = lambda[o];
            const auto l1 = lambda.segment(o + 1, q - 1);
            const double det = l0 * l0 - l1.squaredNorm();
            const double x0 = (l0 * r[o] - l1.dot(r.segment(o + 1, q - 1))) / det;
            out[o] = x0;
            out.segment(o + 1, q - 1) = (r.segment(o + 1, q - 1) - x0 * l1) / l0;
        }
        return out;
    }

    VectorXd identity() const {
        VectorXd e = VectorXd::Zero(total_);
        add_identity(e, 1.0);
        return e;
    }

    // Largest alpha with v + alpha*dv in the cone (kInf if unbounded).
    double max_step(const VectorXd& v, const VectorXd& dv) const {
        double alpha = kInf;
        for (int i = 0; i < linear_; ++i) {
            if (dv[i] < 0.0) alpha = std::min(alpha, -v[i] / dv[i]);
        }
        for (const auto& c : socs_) {
            const int o = c.offset, q = c.size;
            const double x0 = v[o], d0 = dv[o];
            const auto x1 = v.segment(o + 1, q - 1);
            const auto d1 = dv.segment(o + 1, q - 1);
            const double qa = d0 * d0 - d1.squaredNorm();
            const double qb = 2.0 * (x0 * d0 - x1.dot(d1));
            const double qc = std::max(0.0, x0 * x0 - x1.squaredNorm());
            double root = kInf;
            if (qa == 0.0) {
                if (qb < 0.0) root = -qc / qb;
            } else {
                const double disc = qb * qb - 4.0 * qa * qc;
                if (disc >= 0.0) {
                    const double sq = std::sqrt(disc);
                    const double qq = -0.5 * (qb + (qb >= 0.0 ? sq : -sq));
                    const double r1 = qq / qa;
                    const double r2 = qq != 0.0 ? qc / qq : kInf;
                    for (double r : {r1, r2}) {
                        if (r >= 0.0) root = std::min(root, r);
                    }
                }
            }
            if (d0 < 0.0) root = std::min(root, -x0 / d0);
            alpha = std::min(alpha, root);
        }
        return alpha;
    }

private:
    int linear_;
    std::vector<int> soc_sizes_;
    std::vector<SocScaling> socs_;
    int total_ = 0;
    VectorXd lin_w_;
};

// Ruiz equilibration of [A; G]; cone blocks of G share one row factor.
// Costs far above the cheapest one (penalties) also count toward their column.
struct Equilibration {
    VectorXd col, rowA, rowG;
};

Equilibration equilibrate(SpMat& A, SpMat& G, const VectorXd& c, const ConeGeometry& cones, int passes = 12) {
    const int n = static_cast<int>(std::max(A.cols(), G.cols()));
    Equilibration eq{VectorXd::Ones(n), VectorXd::Ones(A.rows()), VectorXd::Ones(G.rows())};
    for (int pass = 0; pass < passes; ++pass) {
        VectorXd cmax = VectorXd::Zero(n);
        double cheapest = kInf;
        for (int j = 0; j < n; ++j) {
            if (c[j] != 0.0) cheapest = std::min(cheapest, std::abs(c[j] * eq.col[j]));
        }
        if (std::isfinite(cheapest)) {
            for (int j = 0; j < n; ++j) cmax[j] = std::abs(c[j] * eq.col[j]) / (1e4 * cheapest);
        }
        VectorXd amax = VectorXd::Zero(A.rows());
        VectorXd gmax = VectorXd::Zero(G.rows());
        for (int j = 0; j < A.outerSize(); ++j) {
            for (SpMat::InnerIterator it(A, j); it; ++it) {
                const double v = std::abs(it.value());
                cmax[j] = std::max(cmax[j], v);
                amax[it.row()] = std::max(amax[it.row()], v);
            }
        }
        for (int j = 0; j < G.outerSize(); ++j) {
            for (SpMat::InnerIterator it(G, j); it; ++it) {
                const double v = std::abs(it.value());
                cmax[j] = std::max(cmax[j], v);
                gmax[it.row()] = std::max(gmax[it.row()], v);
            }
        }
        for (const auto& c : cones.socs()) {
            const double m = gmax.segment(c.offset, c.size).maxCoeff();
            gmax.segment(c.offset, c.size).setConstant(m);
        }
        auto factor = [](double v) { return v > 0.0 ? 1.0 / std::sqrt(v) : 1.0; };
        VectorXd dc(n), da(A.rows()), dg(G.rows());
        for (int j = 0; j < n; ++j) dc[j] = factor(cmax[j]);
        for (int i = 0; i < A.rows(); ++i) da[i] = factor(amax[i]);
        for (int i = 0; i < G.rows(); ++i) dg[i] = factor(gmax[i]);
        A = da.asDiagonal() * A * dc.asDiagonal();
        G = dg.asDiagonal() * G * dc.asDiagonal();
        eq.col.array() *= dc.array();
        eq.rowA.array() *= da.array();
        eq.rowG.array() *= dg.array();
    }
    return eq;
}

class KktSystem {
public:
    KktSystem(const SpMat& A, const SpMat& G, const ConeGeometry& cones, double reg)
        : A_(A), G_(G), cones_(cones), base_reg_(reg), reg_(reg) {
        n_ = static_cast<int>(std::max(A.cols(), G.cols()));
        p_ = static_cast<int>(A.rows());
        m_ = static_cast<int>(G.rows());
        At_ = A_.transpose();
        Gt_ = G_.transpose();
    }

    int dim() const { return n_ + p_ + m_; }

    // Factorizes with the current scaling (identity when `identity_scaling`),
    // raising the regularization when a pivot breaks down.
    bool factor(bool identity_scaling) {
        identity_ = identity_scaling;
        for (double boost : {1.0, 1e2, 1e4, 1e6}) {
            if (factor_with(base_reg_ * boost)) return true;
        }
        return false;
    }

    VectorXd solve(const VectorXd& rhs, int refine_steps) const {
        VectorXd d = ldlt_.solve(rhs);
        const double scale = 1.0 + rhs.lpNorm<Eigen::Infinity>();
        for (int k = 0; k < refine_steps; ++k) {
            const VectorXd r = rhs - multiply(d);
            if (!(r.lpNorm<Eigen::Infinity>() > 1e-14 * scale)) break;
            d += ldlt_.solve(r);
        }
        return d;
    }

private:
    bool factor_with(double reg) {
        reg_ = reg;
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(static_cast<std::size_t>(A_.nonZeros() + G_.nonZeros() + dim() + 16 * m_));
        for (int j = 0; j < n_; ++j) trip.emplace_back(j, j, reg_);
        for (int i = 0; i < p_; ++i) trip.emplace_back(n_ + i, n_ + i, -reg_);
        for (int j = 0; j < A_.outerSize(); ++j) {
            for (SpMat::InnerIterator it(A_, j); it; ++it) trip.emplace_back(n_ + it.row(), j, it.value());
        }
        const int zo = n_ + p_;
        for (int j = 0; j < G_.outerSize(); ++j) {
            for (SpMat::InnerIterator it(G_, j); it; ++it) trip.emplace_back(zo + it.row(), j, it.value());
        }
        for (int i = 0; i < cones_.linear(); ++i) {
            const double w2 = identity_ ? 1.0 : cones_.lin_w2(i);
            trip.emplace_back(zo + i, zo + i, -w2 - reg_);
        }
        for (const auto& c : cones_.socs()) {
            for (int a = 0; a < c.size; ++a) {
                for (int b = 0; b <= a; ++b) {
                    double v = identity_ ? (a == b ? 1.0 : 0.0) : c.W2(a, b);
                    if (a == b) v += reg_;
                    // Explicit zeros keep the pattern fixed across iterations.
                    trip.emplace_back(zo + c.offset + a, zo + c.offset + b, -v);
                }
            }
        }
        K_.resize(dim(), dim());
        K_.setFromTriplets(trip.begin(), trip.end());
        if (!analyzed_) {
            ldlt_.analyzePattern(K_);
            analyzed_ = true;
        }
        ldlt_.factorize(K_);
        if (ldlt_.info() != Eigen::Success) return false;
        return ldlt_.vectorD().allFinite();
    }

    // Unregularized KKT product.
    VectorXd multiply(const VectorXd& d) const {
        const auto dx = d.head(n_);
        const auto dy = d.segment(n_, p_);
        const VectorXd dz = d.tail(m_);
        VectorXd out(dim());
        out.head(n_) = At_ * dy + Gt_ * dz;
        out.segment(n_, p_) = A_ * dx;
        const VectorXd w2dz = identity_ ? dz : cones_.apply_w2(dz);
        out.tail(m_) = G_ * dx - w2dz;
        return out;
    }

    const SpMat& A_;
    const SpMat& G_;
    SpMat At_, Gt_;
    const ConeGeometry& cones_;
    double base_reg_;
    double reg_;
    int n_ = 0, p_ = 0, m_ = 0;
    bool identity_ = true;
    bool analyzed_ = false;
    SpMat K_;
    Eigen::SimplicialLDLT<SpMat, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt_;
};

}  // namespace

BackendResult InteriorPointBackend::solve(const StandardForm& problem,
                                          const BackendSettings& settings) const {
    BackendResult out;
    const int n = static_cast<int>(problem.c.size());
    SpMat A = problem.A;
    SpMat G = problem.G;
    if (A.cols() != n) A.resize(A.rows(), n);
    if (G.cols() != n) G.resize(G.rows(), n);
    const int p = static_cast<int>(A.rows());
    const int m = static_cast<int>(G.rows());
    ConeGeometry cones(problem.linear_rows, problem.soc_sizes);
    if (cones.dim() != m) {
        out.status = BackendStatus::NumericalFailure;
        return out;
    }

    const Equilibration eq = equilibrate(A, G, problem.c, cones);
    VectorXd c = eq.col.cwiseProduct(problem.c);
    VectorXd b = eq.rowA.cwiseProduct(problem.b);
    VectorXd h = eq.rowG.cwiseProduct(problem.h);
    const double cnorm = c.lpNorm<Eigen::Infinity>();
    const double cost_scale = cnorm > 0.0 ? 1.0 / cnorm : 1.0;
    double bh = 0.0;
    if (p > 0) bh = std::max(bh, b.lpNorm<Eigen::Infinity>());
    if (m > 0) bh = std::max(bh, h.lpNorm<Eigen::Infinity>());
    const double prim_scale = bh > 0.0 ? 1.0 / bh : 1.0;
    c *= cost_scale;
    b *= prim_scale;
    h *= prim_scale;

    const SpMat At = A.transpose();
    const SpMat Gt = G.transpose();
    const double nb = std::max(1.0, p > 0 ? b.norm() : 0.0);
    const double nh = std::max(1.0, m > 0 ? h.norm() : 0.0);
    const double nc = std::max(1.0, c.norm());

    KktSystem kkt(A, G, cones, settings.static_reg);
    const int N = kkt.dim();
    auto split = [&](const VectorXd& d, VectorXd& dx, VectorXd& dy, VectorXd& dz) {
        dx = d.head(n);
        dy = d.segment(n, p);
        dz = d.tail(m);
    };

    VectorXd x(n), y(p), z(m), s(m);
    double tau = 1.0, kappa = 1.0;

    // Initial point: least-squares primal and minimum-norm dual, shifted inside K.
    if (!kkt.factor(true)) {
        out.status = BackendStatus::NumericalFailure;
        return out;
    }
    {
        VectorXd rhs = VectorXd::Zero(N);
        rhs.segment(n, p) = b;
        rhs.tail(m) = h;
        VectorXd dx, dy, dz;
        split(kkt.solve(rhs, settings.refine_steps), dx, dy, dz);
        x = dx;
        s = -dz;
        const double ap = -cones.min_eig(s);
        if (m > 0 && ap >= -1e-8) cones.add_identity(s, 1.0 + ap);

        rhs.setZero();
        rhs.head(n) = -c;
        split(kkt.solve(rhs, settings.refine_steps), dx, dy, dz);
        y = dy;
        z = dz;
        const double ad = -cones.min_eig(z);
        if (m > 0 && ad >= -1e-8) cones.add_identity(z, 1.0 + ad);
    }

    const VectorXd e = cones.identity();
    const int degree = cones.degree();
    VectorXd lambda;
    // Best iterate meeting the reduced-accuracy tolerances.
    struct Snapshot {
        VectorXd x, y, z, s;
        double tau = 0.0, merit = kInf;
    } best;
    double best_cert = kInf;
    constexpr double kInaccurate = 1e-7;
    constexpr double kInaccurateCert = 1e-6;
    int iter = 0;
    for (; iter <= settings.max_iterations; ++iter) {
        const VectorXd rx = At * y + Gt * z + c * tau;
        const VectorXd ry = A * x - b * tau;
        const VectorXd rz = G * x + s - h * tau;
        const double cx = c.dot(x);
        const double by = p > 0 ? b.dot(y) : 0.0;
        const double hz = m > 0 ? h.dot(z) : 0.0;
        const double rt = kappa + cx + by + hz;

        const double pres = std::max(p > 0 ? ry.norm() / nb : 0.0, m > 0 ? rz.norm() / nh : 0.0) / tau;
        const double dres = rx.norm() / nc / tau;
        const double pcost = cx / tau;
        const double dcost = -(by + hz) / tau;
        const double gap = (m > 0 ? s.dot(z) : 0.0) / (tau * tau);
        double relgap = kInf;
        if (pcost < 0.0) relgap = gap / -pcost;
        else if (dcost > 0.0) relgap = gap / dcost;
        const double objgap = std::abs(pcost - dcost) / std::max(1.0, std::abs(pcost));

        const bool tiny_objective = std::max(std::abs(pcost), std::abs(dcost)) < 1e3 * settings.abstol;
        if (pres < settings.feastol && dres < settings.feastol &&
            (relgap < settings.reltol || (gap < settings.abstol && tiny_objective)) &&
            objgap < 1e3 * settings.reltol + 1e-9) {
            out.status = BackendStatus::Optimal;
            break;
        }
        {
            const double merit = std::max({pres, dres, std::min(gap, relgap), objgap});
            if (merit < kInaccurate && merit < best.merit) best = Snapshot{x, y, z, s, tau, merit};
        }
        // Infeasibility certificates.
        if (by + hz < 0.0) {
            const double ray = (At * y + Gt * z).norm() / std::max(1.0, c.norm());
            const double cert = ray / -(by + hz);
            if (best_cert < kInaccurateCert && cert > 1e2 * best_cert) {
                out.status = BackendStatus::NumericalFailure;
                break;
            }
            best_cert = std::min(best_cert, cert);
            if (cert < settings.feastol) {
                out.status = BackendStatus::PrimalInfeasible;
                break;
            }
        }
        if (cx < 0.0) {
            const double ray = std::max(p > 0 ? (A * x).norm() / nb : 0.0, m > 0 ? (G * x + s).norm() / nh : 0.0);
            if (ray / -cx < settings.feastol) {
                out.status = BackendStatus::DualInfeasible;
                break;
            }
        }
        if (iter == settings.max_iterations) {
            out.status = BackendStatus::NumericalFailure;
            break;
        }

        if (m > 0 && !cones.update_scaling(s, z, lambda)) {
            out.status = BackendStatus::NumericalFailure;
            break;
        }
        if (!kkt.factor(false)) {
            out.status = BackendStatus::NumericalFailure;
            break;
        }
        const double mu = ((m > 0 ? s.dot(z) : 0.0) + tau * kappa) / (degree + 1);

        // Direction for the homogeneous coordinate.
        VectorXd rhs1(N);
        rhs1.head(n) = -c;
        rhs1.segment(n, p) = b;
        rhs1.tail(m) = h;
        VectorXd x1, y1, z1;
        split(kkt.solve(rhs1, settings.refine_steps), x1, y1, z1);
        const double denom_base = c.dot(x1) + (p > 0 ? b.dot(y1) : 0.0) + (m > 0 ? h.dot(z1) : 0.0);

        struct Direction {
            VectorXd dx, dy, dz, ds;
            double dtau = 0.0, dkappa = 0.0;
        };
        auto direction = [&](double sigma, const VectorXd& rc, double rkappa, Direction& d) {
            const double f = 1.0 - sigma;
            VectorXd rhs2(N);
            rhs2.head(n) = -f * rx;
            rhs2.segment(n, p) = -f * ry;
            VectorXd lr;
            if (m > 0) {
                lr = cones.jordan_div(lambda, rc);
                rhs2.tail(m) = -f * rz - cones.apply_w(lr);
            }
            VectorXd x2, y2, z2;
            split(kkt.solve(rhs2, settings.refine_steps), x2, y2, z2);
            const double num = rkappa + tau * (f * rt + c.dot(x2) + (p > 0 ? b.dot(y2) : 0.0) +
                                               (m > 0 ? h.dot(z2) : 0.0));
            const double den = kappa - tau * denom_base;
            d.dtau = num / den;
            d.dx = x2 + d.dtau * x1;
            d.dy = y2 + d.dtau * y1;
            d.dz = z2 + d.dtau * z1;
            if (m > 0) d.ds = cones.apply_w(lr - cones.apply_w(d.dz));
            else d.ds = VectorXd(0);
            d.dkappa = (rkappa - kappa * d.dtau) / tau;
        };
        auto step_length = [&](const Direction& d) {
            double a = kInf;
            if (m > 0) {
                a = std::min(cones.max_step(s, d.ds), cones.max_step(z, d.dz));
            }
            if (d.dtau < 0.0) a = std::min(a, -tau / d.dtau);
            if (d.dkappa < 0.0) a = std::min(a, -kappa / d.dkappa);
            return a;
        };

        Direction aff;
        const VectorXd ll = m > 0 ? cones.jordan(lambda, lambda) : VectorXd(0);
        direction(0.0, -ll, -tau * kappa, aff);
        const double a_aff = std::min(1.0, step_length(aff));
        double sigma = std::pow(1.0 - a_aff, 3);
        sigma = std::clamp(sigma, 0.0, 1.0);

        Direction comb;
        VectorXd rc;
        if (m > 0) {
            const VectorXd corr = cones.jordan(cones.apply_winv(aff.ds), cones.apply_w(aff.dz));
            rc = -ll - corr + sigma * mu * e;
        }
        direction(sigma, rc, -tau * kappa - aff.dtau * aff.dkappa + sigma * mu, comb);
        const double amax = step_length(comb);
        const double alpha = std::min(1.0, 0.99 * amax);
        if (!std::isfinite(alpha) || alpha < 1e-12 || !comb.dx.allFinite()) {
            out.status = BackendStatus::NumericalFailure;
            break;
        }
        x += alpha * comb.dx;
        y += alpha * comb.dy;
        z += alpha * comb.dz;
        s += alpha * comb.ds;
        tau += alpha * comb.dtau;
        kappa += alpha * comb.dkappa;
        if (!(tau > 0.0) || !(kappa > 0.0)) {
            out.status = BackendStatus::NumericalFailure;
            break;
        }
    }
    out.iterations = iter;
    if (out.status == BackendStatus::NumericalFailure && std::isfinite(best.merit)) {
        x = best.x;
        y = best.y;
        z = best.z;
        s = best.s;
        tau = best.tau;
        out.status = BackendStatus::Optimal;
    }
    if (out.status == BackendStatus::NumericalFailure && best_cert < kInaccurateCert) {
        out.status = BackendStatus::PrimalInfeasible;
    }

    // Undo scalings. Optimal points are normalized by tau; certificates are not.
    const double div = out.status == BackendStatus::Optimal ? tau : 1.0;
    out.x = eq.col.cwiseProduct(x) / (div * prim_scale);
    out.y = eq.rowA.cwiseProduct(y) / (div * cost_scale);
    out.z = eq.rowG.cwiseProduct(z) / (div * cost_scale);
    out.s = s.cwiseQuotient(eq.rowG) / (div * prim_scale);
    return out;
}

const ConicBackend& default_backend() {
    static const InteriorPointBackend backend;
    return backend;
}

}  // namespace ddcp::conic
