#include "hardylab/dual_basis.hpp"

#include <Eigen/Dense>

namespace hardylab {

namespace {

double scaled_monomial(const Point& x, const Point& c, double scale, const MultiIndex& a) {
    double v = 1.0;
    const double u0 = (x[0] - c[0]) / scale, u1 = (x[1] - c[1]) / scale;
    for (int k = 0; k < a.e[0]; ++k) v *= u0;
    for (int k = 0; k < a.e[1]; ++k) v *= u1;
    return v;
}

}  // namespace

double Polynomial::operator()(const Point& x) const {
    double v = 0.0;
    for (std::size_t i = 0; i < terms.size(); ++i) v += coeffs[i] * scaled_monomial(x, center, scale, terms[i]);
    return v;
}

std::vector<double> Polynomial::raw_coeffs() const {
    std::vector<double> c(coeffs.size());
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = coeffs[i] / std::pow(scale, terms[i].order());
    return c;
}

DualBasis DualBasis::build(const GridSpec& grid, const std::vector<std::size_t>& nodes, const Point& center,
                           double scale, int order, const std::vector<double>& density) {
    if (order < 0 || order > kMaxMomentOrder) throw Error(ErrorCode::invalid_argument, "dual basis order out of range");
    if (!density.empty() && density.size() != nodes.size())
        throw Error(ErrorCode::invalid_argument, "density size mismatch");
    DualBasis d;
    d.indices_ = multi_indices(grid.dim, order);
    const std::size_t m = d.indices_.size();
    const double hv = grid.cell_volume();

    // Scaled Gram G_{βγ} = (1/|E|) Σ ρ u^{β+γ} hⁿ, u = (x − c)/scale.
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    std::vector<double> mono(m);
    double measure = 0.0;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        const Point x = grid.node(nodes[k]);
        const double rho = density.empty() ? 1.0 : density[k];
        measure += rho * hv;
        for (std::size_t a = 0; a < m; ++a) mono[a] = scaled_monomial(x, center, scale, d.indices_[a]);
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t b = 0; b <= a; ++b) G(a, b) += rho * mono[a] * mono[b] * hv;
    }
    if (!(measure > 0)) throw Error(ErrorCode::ill_conditioned, "empty node set; refine grid");
    for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = 0; b <= a; ++b) {
            G(a, b) /= measure;
            G(b, a) = G(a, b);
        }
    d.measure_ = measure;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(G, Eigen::EigenvaluesOnly);
    const double lmin = eig.eigenvalues().minCoeff(), lmax = eig.eigenvalues().maxCoeff();
    d.condition_ = lmin > 0 ? lmax / lmin : kInf;
    if (!(d.condition_ <= kMaxCondition))
        throw Error(ErrorCode::ill_conditioned, "Gram condition number above 1e10; refine grid");

    Eigen::LLT<Eigen::MatrixXd> llt(G);
    if (llt.info() != Eigen::Success) throw Error(ErrorCode::ill_conditioned, "Gram matrix not positive definite; refine grid");
    const Eigen::MatrixXd Ginv = llt.solve(Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m)));

    // φ_α = scale^{-|α|} Σ_β (G^{-1})_{αβ} u^β
    for (std::size_t a = 0; a < m; ++a) {
        Polynomial p;
        p.dim = grid.dim;
        p.center = center;
        p.scale = scale;
        p.terms = d.indices_;
        p.coeffs.resize(m);
        const double f = std::pow(scale, -d.indices_[a].order());
        for (std::size_t b = 0; b < m; ++b) p.coeffs[b] = f * Ginv(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
        d.duals_.push_back(std::move(p));
    }

    // Residual against the unscaled monomials, and the scale-free sup bound.
    std::vector<double> acc(m * m, 0.0);
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        const Point x = grid.node(nodes[k]);
        const double rho = density.empty() ? 1.0 : density[k];
        for (std::size_t a = 0; a < m; ++a) {
            const double pa = d.duals_[a](x);
            d.uniform_bound_ = std::max(d.uniform_bound_, std::pow(scale, d.indices_[a].order()) * std::fabs(pa));
            for (std::size_t b = 0; b < m; ++b) acc[a * m + b] += rho * pa * monomial(x, center, d.indices_[b]) * hv;
        }
    }
    for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = 0; b < m; ++b) {
            // compare in scale-free units: moment β of φ_α carries scale^{|β|-|α|}
            const double unit = std::pow(scale, d.indices_[b].order() - d.indices_[a].order());
            const double v = acc[a * m + b] / measure / unit - (a == b ? 1.0 : 0.0);
            d.residual_ = std::max(d.residual_, std::fabs(v));
        }
    return d;
}

Polynomial pbs_projection(const GridFunction& f, const Ball& b, int s) {
    const auto nodes = nodes_in(f.spec, Region::ball(b));
    const DualBasis d = DualBasis::build(f.spec, nodes, b.center, b.radius, s);
    Polynomial p;
    p.dim = f.spec.dim;
    p.center = b.center;
    p.scale = b.radius;
    p.terms = d.indices();
    p.coeffs.assign(d.size(), 0.0);
    const double hv = f.spec.cell_volume();
    for (std::size_t a = 0; a < d.size(); ++a) {
        double mom = 0.0;
        for (std::size_t i : nodes) mom += f.values[i] * monomial(f.spec.node(i), b.center, d.indices()[a]) * hv;
        mom /= d.measure();
        for (std::size_t k = 0; k < d.size(); ++k) p.coeffs[k] += mom * d.dual(a).coeffs[k];
    }
    return p;
}

}  // namespace hardylab
