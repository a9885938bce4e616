#include "blindpoly/kernels.hpp"

#include <cmath>

namespace blindpoly::kernels::detail {
namespace {

void multiply(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void multiply_accumulate(double* acc, const double* a, const double* b, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) acc[i] = std::fma(a[i], b[i], acc[i]);
}

void axpby(double alpha, const double* a, double beta, const double* b, double* out,
           std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = alpha * a[i] + beta * b[i];
}

double dot(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

double sum_squares(const double* a, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * a[i];
    return s;
}

}  // namespace

const KernelTable& scalar_table() {
    static const KernelTable t{multiply, multiply_accumulate, axpby, dot, sum_squares};
    return t;
}

}  // namespace blindpoly::kernels::detail
