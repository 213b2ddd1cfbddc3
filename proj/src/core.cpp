#include "hardylab/core.hpp"

#include <algorithm>

namespace hardylab {

const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::invalid_argument: return "invalid argument";
        case ErrorCode::out_of_domain: return "out of domain";
        case ErrorCode::degenerate_region: return "degenerate region";
        case ErrorCode::domain_too_small: return "domain too small";
        case ErrorCode::degenerate_weight: return "degenerate weight";
        case ErrorCode::ill_conditioned: return "ill conditioned";
        case ErrorCode::non_convergent: return "non convergent";
        case ErrorCode::molecule_condition_violated: return "molecule condition violated";
        case ErrorCode::window_too_small: return "window too small";
        case ErrorCode::inadmissible_parameters: return "inadmissible parameters";
        case ErrorCode::unvalidated_kernel: return "unvalidated kernel";
        case ErrorCode::io: return "io";
    }
    return "unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

double ball_volume(int dim, double r) {
    return dim == 1 ? 2.0 * r : kPi * r * r;
}

std::vector<MultiIndex> multi_indices_of_order(int dim, int order) {
    std::vector<MultiIndex> out;
    if (dim == 1) {
        out.push_back({{order, 0}});
    } else {
        for (int i = order; i >= 0; --i) out.push_back({{i, order - i}});
    }
    return out;
}

std::vector<MultiIndex> multi_indices(int dim, int max_order) {
    std::vector<MultiIndex> out;
    for (int k = 0; k <= max_order; ++k) {
        auto level = multi_indices_of_order(dim, k);
        out.insert(out.end(), level.begin(), level.end());
    }
    return out;
}

std::string to_string(const MultiIndex& a, int dim) {
    if (dim == 1) return std::to_string(a.e[0]);
    return "(" + std::to_string(a.e[0]) + "," + std::to_string(a.e[1]) + ")";
}

namespace {

std::uint64_t splitmix(std::uint64_t& x) {
    std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

// xoshiro256** seeded through splitmix64.
Rng::Rng(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& s : s_) s = splitmix(x);
}

std::uint64_t Rng::next() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double Rng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::log_uniform(double lo, double hi) {
    return std::exp(uniform(std::log(lo), std::log(hi)));
}

int Rng::sign() { return (next() >> 63) ? 1 : -1; }

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
    std::uint64_t x = base ^ (0xd1b54a32d192ed03ULL * (index + 1));
    splitmix(x);
    return splitmix(x);
}

double regression_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    if (n < 2) return 0.0;
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxx > 0 ? sxy / sxx : 0.0;
}

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace hardylab
