#pragma once

// Data-parallel inner loops used by the solvers. Every kernel has a scalar
// reference implementation and, on x86-64, an AVX2+FMA variant picked at
// runtime from the CPU feature bits. Set BLINDPOLY_KERNELS=scalar in the
// environment to force the reference path.
//
// Element-wise kernels (multiply, multiply_accumulate, axpby) produce
// bit-identical results on every backend. Reductions (dot, sum_squares)
// agree to rounding only, since lane-wise accumulation reorders the sum.

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>

namespace blindpoly::kernels {

enum class Backend { scalar, avx2 };

std::string_view to_string(Backend backend);
std::optional<Backend> parse_backend(std::string_view name);

struct KernelTable {
    // out[i] = a[i] * b[i]
    void (*multiply)(const double* a, const double* b, double* out, std::size_t n);
    // acc[i] = fma(a[i], b[i], acc[i])
    void (*multiply_accumulate)(double* acc, const double* a, const double* b, std::size_t n);
    // out[i] = alpha * a[i] + beta * b[i], two roundings for the products, one for the sum
    void (*axpby)(double alpha, const double* a, double beta, const double* b, double* out,
                  std::size_t n);
    double (*dot)(const double* a, const double* b, std::size_t n);
    double (*sum_squares)(const double* a, std::size_t n);
};

bool backend_supported(Backend backend);

/// Kernel table of a specific backend. Throws InvalidInput if the CPU lacks it.
const KernelTable& table(Backend backend);

Backend active_backend();

/// Returns false (and leaves the active backend unchanged) when unsupported.
bool set_active_backend(Backend backend);

void multiply(std::span<const double> a, std::span<const double> b, std::span<double> out);
void multiply_accumulate(std::span<double> acc, std::span<const double> a,
                         std::span<const double> b);
void axpby(double alpha, std::span<const double> a, double beta, std::span<const double> b,
           std::span<double> out);
double dot(std::span<const double> a, std::span<const double> b);
double sum_squares(std::span<const double> a);

namespace detail {
const KernelTable& scalar_table();
#if defined(BLINDPOLY_HAVE_AVX2)
const KernelTable& avx2_table();
#endif
}  // namespace detail

}  // namespace blindpoly::kernels
