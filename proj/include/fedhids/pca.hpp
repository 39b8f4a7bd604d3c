#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "fedhids/error.hpp"
#include "fedhids/matrix.hpp"

namespace fedhids {

struct PcaModel {
    std::vector<double> mean;                      // length d
    Matrix components;                             // k x d, rows orthonormal
    std::vector<double> explained_variance;        // length k, non-increasing
    std::vector<double> explained_variance_ratio;  // length k
    bool degenerate = false;                       // zero-covariance input, k = 0

    std::size_t input_dim() const { return mean.size(); }
    std::size_t n_components() const { return components.rows(); }
};

struct PcaOptions {
    double variance_target = 0.95;
    int k_fixed = -1;        // >= 0 selects exactly k components
    int max_components = 64; // cap when selecting by variance target
};

struct EigenDecomposition {
    std::vector<double> values; // descending
    Matrix vectors;             // row i is the eigenvector for values[i]
};

// Cyclic Jacobi eigendecomposition of a symmetric matrix. Rotations follow
// the Rutishauser formulation; sweeps stop once the off-diagonal mass is
// exhausted (always the case for symmetric input well before max_sweeps).
inline EigenDecomposition jacobi_eigensolve(const Matrix& sym, int max_sweeps = 100) {
    if (sym.rows() != sym.cols()) throw DimensionMismatch("jacobi needs a square matrix");
    const std::size_t n = sym.rows();

    Matrix a = sym;
    Matrix v(n, n, 0.0);
    for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;

    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += std::abs(a(p, q));
        if (off == 0.0) break;
        // damp tiny rotations during the first sweeps
        const double thresh = (sweep < 3) ? 0.2 * off / static_cast<double>(n * n) : 0.0;

        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                const double g = 100.0 * std::abs(apq);
                if (sweep > 3 && std::abs(a(p, p)) + g == std::abs(a(p, p)) &&
                    std::abs(a(q, q)) + g == std::abs(a(q, q))) {
                    a(p, q) = 0.0;
                    a(q, p) = 0.0;
                    continue;
                }
                if (std::abs(apq) <= thresh) continue;

                const double h = a(q, q) - a(p, p);
                double t;
                if (std::abs(h) + g == std::abs(h)) {
                    t = apq / h;
                } else {
                    const double theta = 0.5 * h / apq;
                    t = 1.0 / (std::abs(theta) + std::sqrt(1.0 + theta * theta));
                    if (theta < 0.0) t = -t;
                }
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                const double tau = s / (1.0 + c);
                const double delta = t * apq;

                a(p, p) -= delta;
                a(q, q) += delta;
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                for (std::size_t j = 0; j < n; ++j) {
                    if (j == p || j == q) continue;
                    const double ajp = a(j, p);
                    const double ajq = a(j, q);
                    a(j, p) = ajp - s * (ajq + ajp * tau);
                    a(p, j) = a(j, p);
                    a(j, q) = ajq + s * (ajp - ajq * tau);
                    a(q, j) = a(j, q);
                }
                for (std::size_t j = 0; j < n; ++j) {
                    const double vjp = v(j, p);
                    const double vjq = v(j, q);
                    v(j, p) = vjp - s * (vjq + vjp * tau);
                    v(j, q) = vjq + s * (vjp - vjq * tau);
                }
            }
        }
    }

    // sort eigenpairs by descending eigenvalue; equal values keep column order
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

    EigenDecomposition out;
    out.values.resize(n);
    out.vectors = Matrix(n, n);
    for (std::size_t r = 0; r < n; ++r) {
        out.values[r] = a(order[r], order[r]);
        for (std::size_t j = 0; j < n; ++j) out.vectors(r, j) = v(j, order[r]);
    }
    return out;
}

// Fits PCA on training rows: column-mean centering, sample covariance with
// divisor n-1, Jacobi eigendecomposition. Components are selected up to the
// variance target (capped) or exactly k_fixed; each component's sign is fixed
// so its largest-magnitude entry is positive.
inline PcaModel fit_pca(const Matrix& train, const PcaOptions& opts = {}) {
    const std::size_t n = train.rows();
    const std::size_t d = train.cols();
    if (n < 2) throw InvalidConfig("fit_pca requires at least 2 rows");
    if (!train.all_finite()) throw InvalidConfig("fit_pca input contains non-finite values");
    if (opts.k_fixed > static_cast<int>(d))
        throw InvalidConfig("k_fixed exceeds the input dimension");

    PcaModel model;
    model.mean.assign(d, 0.0);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < d; ++c) model.mean[c] += train(r, c);
    for (double& m : model.mean) m /= static_cast<double>(n);

    Matrix centered(n, d);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < d; ++c) centered(r, c) = train(r, c) - model.mean[c];

    Matrix cov(d, d);
    const double inv = 1.0 / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = i; j < d; ++j) {
            double s = 0.0;
            for (std::size_t r = 0; r < n; ++r) s += centered(r, i) * centered(r, j);
            cov(i, j) = s * inv;
            cov(j, i) = cov(i, j);
        }
    }

    double total_variance = 0.0;
    for (std::size_t i = 0; i < d; ++i) total_variance += cov(i, i);
    if (total_variance <= 0.0) {
        // all rows identical: keep the mean, no components, warn via the flag
        model.degenerate = true;
        model.components = Matrix(0, d);
        return model;
    }

    EigenDecomposition eig = jacobi_eigensolve(cov);
    for (double& v : eig.values) v = std::max(v, 0.0); // numerical negatives

    std::size_t k;
    if (opts.k_fixed >= 0) {
        k = static_cast<std::size_t>(opts.k_fixed);
    } else {
        const std::size_t cap = std::min(d, static_cast<std::size_t>(opts.max_components));
        double cum = 0.0;
        k = cap;
        for (std::size_t i = 0; i < cap; ++i) {
            cum += eig.values[i] / total_variance;
            if (cum >= opts.variance_target) {
                k = i + 1;
                break;
            }
        }
    }

    model.components = Matrix(k, d);
    model.explained_variance.resize(k);
    model.explained_variance_ratio.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
        model.explained_variance[i] = eig.values[i];
        model.explained_variance_ratio[i] = eig.values[i] / total_variance;
        // sign convention: largest-|entry| positive (first such entry on ties)
        std::size_t arg = 0;
        for (std::size_t j = 1; j < d; ++j)
            if (std::abs(eig.vectors(i, j)) > std::abs(eig.vectors(i, arg))) arg = j;
        const double flip = eig.vectors(i, arg) < 0.0 ? -1.0 : 1.0;
        for (std::size_t j = 0; j < d; ++j) model.components(i, j) = flip * eig.vectors(i, j);
    }
    return model;
}

// Projects rows onto the component basis: (x - mean) * components^T.
inline Matrix transform_pca(const PcaModel& model, const Matrix& input) {
    if (input.cols() != model.input_dim())
        throw DimensionMismatch("transform_pca: column count does not match the fitted dimension");
    const std::size_t k = model.n_components();
    Matrix out(input.rows(), k);
    for (std::size_t r = 0; r < input.rows(); ++r) {
        for (std::size_t i = 0; i < k; ++i) {
            double s = 0.0;
            for (std::size_t c = 0; c < input.cols(); ++c)
                s += (input(r, c) - model.mean[c]) * model.components(i, c);
            out(r, i) = s;
        }
    }
    return out;
}

// Reconstruction: coords * components + mean.
inline Matrix inverse_pca(const PcaModel& model, const Matrix& coords) {
    if (coords.cols() != model.n_components())
        throw DimensionMismatch("inverse_pca: column count does not match the component count");
    const std::size_t d = model.input_dim();
    Matrix out(coords.rows(), d);
    for (std::size_t r = 0; r < coords.rows(); ++r) {
        for (std::size_t c = 0; c < d; ++c) {
            double s = model.mean[c];
            for (std::size_t i = 0; i < coords.cols(); ++i)
                s += coords(r, i) * model.components(i, c);
            out(r, c) = s;
        }
    }
    return out;
}

} // namespace fedhids
