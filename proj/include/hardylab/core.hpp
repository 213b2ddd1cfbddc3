#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace hardylab {

using Point = std::array<double, 2>;  // second coordinate is 0 in 1D

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kPi = 3.14159265358979323846;

enum class ErrorCode {
    invalid_argument,
    out_of_domain,
    degenerate_region,
    domain_too_small,
    degenerate_weight,
    ill_conditioned,
    non_convergent,
    molecule_condition_violated,
    window_too_small,
    inadmissible_parameters,
    unvalidated_kernel,
    io
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what);
    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

inline double distance(const Point& a, const Point& b) {
    return std::hypot(a[0] - b[0], a[1] - b[1]);
}

struct Ball {
    Point center{0.0, 0.0};
    double radius = 1.0;

    Ball dilated(double factor) const { return {center, radius * factor}; }
    bool contains(const Point& x) const { return distance(x, center) < radius; }
};

// |B| in closed form.
double ball_volume(int dim, double r);

struct MultiIndex {
    std::array<int, 2> e{0, 0};

    int order() const { return e[0] + e[1]; }
    bool operator==(const MultiIndex&) const = default;
};

// Graded order: all |α| ≤ max_order, by total degree then by first exponent descending.
std::vector<MultiIndex> multi_indices(int dim, int max_order);
std::vector<MultiIndex> multi_indices_of_order(int dim, int order);
std::string to_string(const MultiIndex& a, int dim);

// (x - c)^α
inline double monomial(const Point& x, const Point& c, const MultiIndex& a) {
    double v = 1.0;
    for (int k = 0; k < a.e[0]; ++k) v *= x[0] - c[0];
    for (int k = 0; k < a.e[1]; ++k) v *= x[1] - c[1];
    return v;
}

// Portable seeded generator. Uniform draws use the top 53 bits so values do not
// depend on the standard library's distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed);
    std::uint64_t next();
    double uniform();                      // [0, 1)
    double uniform(double lo, double hi);  // [lo, hi)
    double log_uniform(double lo, double hi);
    int sign();

private:
    std::uint64_t s_[4];
};

// Independent stream seed for case `index` of a run seeded with `base`.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

// Deterministic sum in fixed blocks; the result does not depend on thread count.
template <class F>
double ordered_sum(std::size_t n, F&& term) {
    constexpr std::size_t kBlock = 4096;
    const std::size_t blocks = (n + kBlock - 1) / kBlock;
    std::vector<double> partial(blocks, 0.0);
#pragma omp parallel for schedule(static) if (blocks > 4)
    for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(blocks); ++b) {
        const std::size_t lo = static_cast<std::size_t>(b) * kBlock;
        const std::size_t hi = std::min(n, lo + kBlock);
        double acc = 0.0;
        for (std::size_t i = lo; i < hi; ++i) acc += term(i);
        partial[static_cast<std::size_t>(b)] = acc;
    }
    double total = 0.0;
    for (double v : partial) total += v;
    return total;
}

// Least-squares slope of y against x.
double regression_slope(const std::vector<double>& x, const std::vector<double>& y);
double median(std::vector<double> v);

}  // namespace hardylab
