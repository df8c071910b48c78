#ifndef AID_LINALG_HPP
#define AID_LINALG_HPP

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace aid {

using Vec = std::vector<double>;

inline double dot(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) throw std::invalid_argument("dot: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(const Vec& a) {
    double s = 0.0;
    for (double v : a) s += v * v;
    return s;
}

inline double norm(const Vec& a) { return std::sqrt(norm2(a)); }

// y += alpha * x
inline void axpy(double alpha, const Vec& x, Vec& y) {
    if (x.size() != y.size()) throw std::invalid_argument("axpy: size mismatch");
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline void scale(Vec& x, double alpha) {
    for (double& v : x) v *= alpha;
}

inline Vec add(const Vec& a, const Vec& b) {
    Vec r(a);
    axpy(1.0, b, r);
    return r;
}

inline Vec sub(const Vec& a, const Vec& b) {
    Vec r(a);
    axpy(-1.0, b, r);
    return r;
}

// Dense row-major square matrix, sized for d <= 64 use.
struct Mat {
    int n = 0;
    Vec a;

    Mat() = default;
    explicit Mat(int n_) : n(n_), a(static_cast<std::size_t>(n_) * n_, 0.0) {}

    double& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * n + j]; }
    double operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * n + j]; }

    static Mat identity(int n) {
        Mat m(n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }
};

inline Vec matvec(const Mat& m, const Vec& x) {
    if (static_cast<int>(x.size()) != m.n) throw std::invalid_argument("matvec: size mismatch");
    Vec y(m.n, 0.0);
    for (int i = 0; i < m.n; ++i) {
        double s = 0.0;
        for (int j = 0; j < m.n; ++j) s += m(i, j) * x[j];
        y[i] = s;
    }
    return y;
}

inline Mat matmul(const Mat& a, const Mat& b) {
    if (a.n != b.n) throw std::invalid_argument("matmul: size mismatch");
    Mat c(a.n);
    for (int i = 0; i < a.n; ++i)
        for (int k = 0; k < a.n; ++k) {
            double aik = a(i, k);
            if (aik == 0.0) continue;
            for (int j = 0; j < a.n; ++j) c(i, j) += aik * b(k, j);
        }
    return c;
}

inline Mat matadd(const Mat& a, const Mat& b, double sb = 1.0) {
    Mat c = a;
    for (std::size_t i = 0; i < c.a.size(); ++i) c.a[i] += sb * b.a[i];
    return c;
}

}  // namespace aid

#endif
