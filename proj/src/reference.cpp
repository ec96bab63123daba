#include "repstab/reference.hpp"

#include <cmath>
#include <stdexcept>

namespace repstab::ref {

double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("ref::dot: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

Matrix cosine_similarity_matrix(const Matrix& rows) {
    const std::size_t n = rows.rows();
    Matrix sim(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double nij = std::sqrt(dot(rows.row(i), rows.row(i))) *
                               std::sqrt(dot(rows.row(j), rows.row(j)));
            sim(i, j) = dot(rows.row(i), rows.row(j)) / nij;
        }
    }
    return sim;
}

std::vector<double> upper_triangle(const Matrix& sim) {
    std::vector<double> out;
    for (std::size_t i = 0; i < sim.rows(); ++i)
        for (std::size_t j = 0; j < sim.cols(); ++j)
            if (j > i) out.push_back(sim(i, j));
    return out;
}

double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw std::invalid_argument("ref::pearson: length mismatch");
    const std::size_t n = x.size();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    return sxy / (std::sqrt(sxx) * std::sqrt(syy));
}

double rsa(const Matrix& a_rows, const Matrix& b_rows) {
    const std::vector<double> ta = upper_triangle(cosine_similarity_matrix(a_rows));
    const std::vector<double> tb = upper_triangle(cosine_similarity_matrix(b_rows));
    return pearson(ta, tb);
}

Matrix rsa_grid(const std::vector<Matrix>& spaces) {
    const std::size_t m = spaces.size();
    Matrix grid(m, m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j)
            grid(i, j) = i == j ? 1.0 : rsa(spaces[i], spaces[j]);
    return grid;
}

RidgeSolution ridge_normal_equations(const Matrix& x, const Matrix& y, double lambda) {
    const std::size_t n = x.rows();
    const std::size_t d = x.cols();
    const std::size_t v = y.cols();
    if (y.rows() != n) throw std::invalid_argument("ref::ridge: row mismatch");

    std::vector<double> xm(d, 0.0), ym(v, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) xm[j] += x(i, j);
        for (std::size_t j = 0; j < v; ++j) ym[j] += y(i, j);
    }
    for (double& m : xm) m /= static_cast<double>(n);
    for (double& m : ym) m /= static_cast<double>(n);

    Matrix g(d, d);
    for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = 0; b < d; ++b) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += (x(i, a) - xm[a]) * (x(i, b) - xm[b]);
            g(a, b) = s + (a == b ? lambda : 0.0);
        }
    Matrix rhs(d, v);
    for (std::size_t a = 0; a < d; ++a)
        for (std::size_t j = 0; j < v; ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += (x(i, a) - xm[a]) * (y(i, j) - ym[j]);
            rhs(a, j) = s;
        }

    // Gauss-Jordan with partial pivoting on the augmented system.
    Matrix w = rhs;
    for (std::size_t col = 0; col < d; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < d; ++r)
            if (std::fabs(g(r, col)) > std::fabs(g(pivot, col))) pivot = r;
        if (g(pivot, col) == 0.0) throw std::runtime_error("ref::ridge: singular system");
        if (pivot != col) {
            for (std::size_t c = 0; c < d; ++c) std::swap(g(pivot, c), g(col, c));
            for (std::size_t c = 0; c < v; ++c) std::swap(w(pivot, c), w(col, c));
        }
        const double inv = 1.0 / g(col, col);
        for (std::size_t c = 0; c < d; ++c) g(col, c) *= inv;
        for (std::size_t c = 0; c < v; ++c) w(col, c) *= inv;
        for (std::size_t r = 0; r < d; ++r) {
            if (r == col) continue;
            const double f = g(r, col);
            if (f == 0.0) continue;
            for (std::size_t c = 0; c < d; ++c) g(r, c) -= f * g(col, c);
            for (std::size_t c = 0; c < v; ++c) w(r, c) -= f * w(col, c);
        }
    }

    RidgeSolution sol;
    sol.weights = std::move(w);
    sol.intercept.assign(v, 0.0);
    for (std::size_t j = 0; j < v; ++j) {
        double s = ym[j];
        for (std::size_t a = 0; a < d; ++a) s -= xm[a] * sol.weights(a, j);
        sol.intercept[j] = s;
    }
    return sol;
}

double dft_power(std::span<const double> x) {
    const std::size_t n = x.size();
    double power = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        double re = 0.0, im = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
            const double ang = -2.0 * M_PI * static_cast<double>(k) * static_cast<double>(t) /
                               static_cast<double>(n);
            re += x[t] * std::cos(ang);
            im += x[t] * std::sin(ang);
        }
        power += re * re + im * im;
    }
    return power / static_cast<double>(n); // Parseval: equals sum of squares
}

} // namespace repstab::ref
