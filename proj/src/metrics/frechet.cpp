#include "ganinf/metrics/frechet.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

#include "ganinf/errors.hpp"
#include "ganinf/log.hpp"

namespace ganinf {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct Moments {
    VectorXd mean;
    MatrixXd cov;
    MatrixXd centered;
};

Moments moments(const ad::Tensor& f)
{
    if (f.rows() < 2) throw std::invalid_argument("FID needs at least two samples per set");
    const auto n = static_cast<Eigen::Index>(f.rows());
    const auto d = static_cast<Eigen::Index>(f.cols());
    MatrixXd x(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < d; ++j) x(i, j) = f(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    Moments m;
    m.mean = x.colwise().mean().transpose();
    m.centered = x.rowwise() - m.mean.transpose();
    m.cov = m.centered.transpose() * m.centered / static_cast<double>(n - 1);
    return m;
}

struct SqrtParts {
    MatrixXd root1;        // S_1^(1/2)
    VectorXd m_values;     // eigenvalues of M = root1 S_2 root1, clipped
    MatrixXd m_vectors;
    double most_negative = 0.0;
};

SqrtParts sqrt_parts(const MatrixXd& s1, const MatrixXd& s2)
{
    SqrtParts p;
    Eigen::SelfAdjointEigenSolver<MatrixXd> e1(s1);
    VectorXd l1 = e1.eigenvalues();
    p.most_negative = std::min(0.0, l1.minCoeff());
    l1 = l1.cwiseMax(0.0);
    p.root1 = e1.eigenvectors() * l1.cwiseSqrt().asDiagonal() * e1.eigenvectors().transpose();
    MatrixXd m = p.root1 * s2 * p.root1;
    m = 0.5 * (m + m.transpose());
    Eigen::SelfAdjointEigenSolver<MatrixXd> em(m);
    p.most_negative = std::min(p.most_negative, em.eigenvalues().minCoeff());
    p.m_values = em.eigenvalues().cwiseMax(0.0);
    p.m_vectors = em.eigenvectors();
    return p;
}

void check_dims(const ad::Tensor& a, const ad::Tensor& b)
{
    if (a.cols() != b.cols()) throw ShapeError("feature sets differ in dimension");
}

}  // namespace

double fid(const ad::Tensor& real_features, const ad::Tensor& generated_features, FidDiagnostics* diag)
{
    check_dims(real_features, generated_features);
    const auto a = moments(real_features);
    const auto b = moments(generated_features);
    const auto parts = sqrt_parts(a.cov, b.cov);
    const double trace_sqrt = parts.m_values.cwiseSqrt().sum();
    if (diag) {
        diag->most_negative_eigenvalue = parts.most_negative;
        diag->clipped = parts.most_negative < 0.0;
    }
    if (parts.most_negative < -1e-6) {
        warn("FID: clipped a negative eigenvalue of magnitude " + std::to_string(-parts.most_negative));
    }
    const double value = (a.mean - b.mean).squaredNorm() + a.cov.trace() + b.cov.trace() - 2.0 * trace_sqrt;
    return std::max(value, 0.0);
}

ad::Tensor fid_gradient(const ad::Tensor& real_features, const ad::Tensor& generated_features)
{
    check_dims(real_features, generated_features);
    const auto a = moments(real_features);
    const auto b = moments(generated_features);
    const auto parts = sqrt_parts(a.cov, b.cov);
    // d Tr sqrt(M) / d S_2 = 1/2 root1 M^(-1/2) root1 (pseudo-inverse on the null space).
    const double tol = 1e-12 * std::max(1.0, parts.m_values.maxCoeff());
    VectorXd inv_sqrt(parts.m_values.size());
    for (Eigen::Index i = 0; i < inv_sqrt.size(); ++i) {
        inv_sqrt(i) = parts.m_values(i) > tol ? 1.0 / std::sqrt(parts.m_values(i)) : 0.0;
    }
    const MatrixXd m_inv_sqrt = parts.m_vectors * inv_sqrt.asDiagonal() * parts.m_vectors.transpose();
    const auto d = a.cov.rows();
    const MatrixXd g = MatrixXd::Identity(d, d) - parts.root1 * m_inv_sqrt * parts.root1;
    const auto n = static_cast<double>(generated_features.rows());
    const VectorXd mean_term = 2.0 * (b.mean - a.mean) / n;
    const MatrixXd cov_term = (2.0 / (n - 1.0)) * b.centered * g;  // g is symmetric

    ad::Tensor out({generated_features.rows(), generated_features.cols()});
    for (std::size_t i = 0; i < out.rows(); ++i)
        for (std::size_t j = 0; j < out.cols(); ++j) {
            const auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);
            out(i, j) = mean_term(jj) + cov_term(ii, jj);
        }
    return out;
}

}  // namespace ganinf
