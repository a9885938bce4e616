#include "blindpoly/kernels.hpp"

#include "blindpoly/error.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace blindpoly::kernels {
namespace {

bool cpu_has_avx2() {
#if defined(BLINDPOLY_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Backend initial_backend() {
    if (const char* env = std::getenv("BLINDPOLY_KERNELS")) {
        if (auto b = parse_backend(env); b && backend_supported(*b)) return *b;
    }
    return cpu_has_avx2() ? Backend::avx2 : Backend::scalar;
}

std::atomic<const KernelTable*>& active_slot() {
    static std::atomic<const KernelTable*> slot{&table(initial_backend())};
    return slot;
}

void check_sizes(std::size_t a, std::size_t b) {
    if (a != b) throw InvalidInput("kernel operands differ in length");
}

}  // namespace

std::string_view to_string(Backend backend) {
    switch (backend) {
        case Backend::scalar: return "scalar";
        case Backend::avx2: return "avx2";
    }
    return "unknown";
}

std::optional<Backend> parse_backend(std::string_view name) {
    if (name == "scalar") return Backend::scalar;
    if (name == "avx2") return Backend::avx2;
    return std::nullopt;
}

bool backend_supported(Backend backend) {
    switch (backend) {
        case Backend::scalar: return true;
        case Backend::avx2: return cpu_has_avx2();
    }
    return false;
}

const KernelTable& table(Backend backend) {
    switch (backend) {
        case Backend::scalar: return detail::scalar_table();
        case Backend::avx2:
#if defined(BLINDPOLY_HAVE_AVX2)
            if (cpu_has_avx2()) return detail::avx2_table();
#endif
            break;
    }
    throw InvalidInput(std::string("kernel backend not supported on this CPU: ") +
                       std::string(to_string(backend)));
}

Backend active_backend() {
    return active_slot().load() == &detail::scalar_table() ? Backend::scalar : Backend::avx2;
}

bool set_active_backend(Backend backend) {
    if (!backend_supported(backend)) return false;
    active_slot().store(&table(backend));
    return true;
}

void multiply(std::span<const double> a, std::span<const double> b, std::span<double> out) {
    check_sizes(a.size(), b.size());
    check_sizes(a.size(), out.size());
    active_slot().load()->multiply(a.data(), b.data(), out.data(), a.size());
}

void multiply_accumulate(std::span<double> acc, std::span<const double> a,
                         std::span<const double> b) {
    check_sizes(acc.size(), a.size());
    check_sizes(acc.size(), b.size());
    active_slot().load()->multiply_accumulate(acc.data(), a.data(), b.data(), acc.size());
}

void axpby(double alpha, std::span<const double> a, double beta, std::span<const double> b,
           std::span<double> out) {
    check_sizes(a.size(), b.size());
    check_sizes(a.size(), out.size());
    active_slot().load()->axpby(alpha, a.data(), beta, b.data(), out.data(), a.size());
}

double dot(std::span<const double> a, std::span<const double> b) {
    check_sizes(a.size(), b.size());
    return active_slot().load()->dot(a.data(), b.data(), a.size());
}

double sum_squares(std::span<const double> a) {
    return active_slot().load()->sum_squares(a.data(), a.size());
}

}  // namespace blindpoly::kernels
