#pragma once

#include "mosumseg/dataset.hpp"

#include <cmath>
#include <random>
#include <vector>

namespace mosumseg::testing {

inline std::vector<double> normal_series(std::mt19937_64& rng, std::size_t n, double mean = 0.0, double sd = 1.0) {
    std::normal_distribution<double> d(mean, sd);
    std::vector<double> out(n);
    for (auto& v : out) {
        v = d(rng);
    }
    return out;
}

inline RowMatrix normal_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols) {
    std::normal_distribution<double> d(0.0, 1.0);
    RowMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            m(i, j) = d(rng);
        }
    }
    return m;
}

inline Matrix random_spd(std::mt19937_64& rng, std::size_t p) {
    const RowMatrix a = normal_matrix(rng, p, p);
    return a * a.transpose() + 0.5 * Matrix::Identity(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
}

// M(k) by explicit double sums, row j <-> k = G + j.
inline RowMatrix naive_moving_sums(const RowMatrix& h, std::size_t G) {
    const std::size_t n = static_cast<std::size_t>(h.rows());
    RowMatrix m = RowMatrix::Zero(static_cast<Eigen::Index>(n - 2 * G + 1), h.cols());
    for (std::size_t k = G; k <= n - G; ++k) {
        for (std::size_t i = k; i < k + G; ++i) {
            m.row(static_cast<Eigen::Index>(k - G)) += h.row(static_cast<Eigen::Index>(i));
        }
        for (std::size_t i = k - G; i < k; ++i) {
            m.row(static_cast<Eigen::Index>(k - G)) -= h.row(static_cast<Eigen::Index>(i));
        }
    }
    return m;
}

// Two-pass centered scatter of the rows in [begin, end).
inline Matrix centered_scatter(const RowMatrix& h, std::size_t begin, std::size_t end) {
    const auto p = h.cols();
    Vector mean = Vector::Zero(p);
    for (std::size_t i = begin; i < end; ++i) {
        mean += h.row(static_cast<Eigen::Index>(i)).transpose();
    }
    mean /= static_cast<double>(end - begin);
    Matrix s = Matrix::Zero(p, p);
    for (std::size_t i = begin; i < end; ++i) {
        const Vector d = h.row(static_cast<Eigen::Index>(i)).transpose() - mean;
        s += d * d.transpose();
    }
    return s;
}

} // namespace mosumseg::testing
