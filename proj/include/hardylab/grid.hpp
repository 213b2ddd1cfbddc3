#pragma once

#include <array>
#include <functional>
#include <optional>
#include <vector>

#include "hardylab/core.hpp"
#include "hardylab/weight.hpp"

namespace hardylab {

class Mollifier;

// Cell-centered uniform grid: node i sits at lo + (i + 1/2) h on each axis.
struct GridSpec {
    int dim = 1;
    Point lo{0.0, 0.0};
    Point hi{0.0, 0.0};
    double h = 0.0;
    std::array<std::size_t, 2> count{1, 1};

    static GridSpec make(int dim, Point lo, Point hi, double h);
    // Smallest grid with faces on multiples of h that covers the ball.
    static GridSpec covering(int dim, const Ball& b, double h);

    std::size_t size() const { return count[0] * count[1]; }
    double cell_volume() const { return dim == 1 ? h : h * h; }
    std::size_t index(std::size_t ix, std::size_t iy) const { return ix + count[0] * iy; }
    Point node(std::size_t idx) const {
        const std::size_t ix = idx % count[0], iy = idx / count[0];
        return {lo[0] + (static_cast<double>(ix) + 0.5) * h,
                dim == 1 ? 0.0 : lo[1] + (static_cast<double>(iy) + 0.5) * h};
    }
    Point cell_lo(std::size_t idx) const;
    Point cell_hi(std::size_t idx) const;
    bool contains(const Ball& b) const;
    bool intersects(const Ball& b) const;
    GridSpec refined() const;
    // Inclusive node index range on `axis` whose centers lie in [a, b]; empty if lo > hi.
    std::pair<long, long> axis_range(int axis, double a, double b) const;

    bool operator==(const GridSpec&) const = default;
};

struct GridFunction {
    GridSpec spec;
    std::vector<double> values;
    std::optional<Ball> support_hint;

    GridFunction() = default;
    explicit GridFunction(const GridSpec& s) : spec(s), values(s.size(), 0.0) {}

    static GridFunction sample(const GridSpec& s, const std::function<double(const Point&)>& fn,
                               std::optional<Ball> hint = std::nullopt);

    // Throws on non-finite values or values outside the hinted ball (+2h).
    void check_invariants() const;
    bool is_zero() const;
    // Per-axis inclusive index bounds of the nonzero values; nullopt if f ≡ 0.
    std::optional<std::array<std::pair<long, long>, 2>> nonzero_box() const;

    GridFunction& operator+=(const GridFunction& o);
    GridFunction& operator*=(double c);
};

GridFunction operator*(double c, const GridFunction& f);
GridFunction operator+(const GridFunction& a, const GridFunction& b);
GridFunction operator-(const GridFunction& a, const GridFunction& b);

// target += coeff · source; source must live on a grid aligned with target's.
void accumulate(GridFunction& target, const GridFunction& source, double coeff);
// Same values on a grid grown by at least `margin` on every side.
GridFunction pad(const GridFunction& f, double margin);
// Restriction to the sub-grid covering `keep`; values outside it must vanish.
GridFunction crop(const GridFunction& f, const Ball& keep);

struct Region {
    enum class Kind { all, ball, annulus };
    Kind kind = Kind::all;
    Point center{0.0, 0.0};
    double inner = 0.0;
    double outer = kInf;

    static Region everywhere() { return {}; }
    static Region ball(const Ball& b) { return {Kind::ball, b.center, 0.0, b.radius}; }
    static Region annulus(const Point& c, double r_in, double r_out) { return {Kind::annulus, c, r_in, r_out}; }
    static Region exterior(const Ball& b) { return {Kind::annulus, b.center, b.radius, kInf}; }

    bool contains(const Point& x) const {
        if (kind == Kind::all) return true;
        const double d = distance(x, center);
        return d >= inner && d < outer;
    }
};

// Calls fn(idx) for every node whose cell center lies in region, in index order.
void for_each_node(const GridSpec& s, const Region& region, const std::function<void(std::size_t)>& fn);
std::vector<std::size_t> nodes_in(const GridSpec& s, const Region& region);

struct QuadratureResult {
    double value = 0.0;
    bool degenerate = false;  // region misses the grid entirely
};

QuadratureResult integrate(const GridFunction& f, const Region& region = Region::everywhere());

// ∫_cell ω^γ for node idx.
double cell_mass(const GridSpec& s, const Weight& w, std::size_t idx, double gamma = 1.0);

// q = kInf gives the plain sup norm over the region.
double weighted_lq_norm(const GridFunction& f, const Weight& w, double q,
                        const Region& region = Region::everywhere());
// ∫ |f|^q ω over the region (no root).
double weighted_lq_integral(const GridFunction& f, const Weight& w, double q,
                            const Region& region = Region::everywhere());

inline constexpr int kMaxMomentOrder = 6;
double moment(const GridFunction& f, const Point& center, const MultiIndex& alpha,
              const Region& region = Region::everywhere());

struct ConvolutionResult {
    GridFunction g;
    bool sub_grid_scale = false;  // t ≤ h/4
};

// (f ∗ φ_t) on f's grid, using cell-integrated taps of the truncated mollifier.
ConvolutionResult convolve_scale(const GridFunction& f, const Mollifier& phi, double t);

}  // namespace hardylab
