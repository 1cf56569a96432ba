#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "expr.hpp"
#include "geometry.hpp"

namespace mather {

/// Periodic samples on a uniform grid. Row-major: values[j * nx + i] is the
/// sample at (i / nx, j / ny). A 1-D grid along one axis has the other size 1.
struct GridSamples {
    std::size_t nx = 0;
    std::size_t ny = 0;
    std::vector<double> values;
};

/// A 1-periodic scalar function on the torus, given by a closed-form
/// expression or by bilinear interpolation of grid samples, followed by an
/// affine map value -> scale * value + offset.
class ScalarField {
public:
    enum class Axis { X, Y };

    ScalarField() : ScalarField(constant(0.0)) {}

    static ScalarField constant(double c) {
        ScalarField f(Kind::Expr);
        f.expr_ = std::make_shared<const Expr>(Expr::parse("0"));
        f.offset_ = c;
        return f;
    }

    /// Throws if the expression is not 1-periodic in each coordinate.
    static ScalarField expression(std::string_view text) {
        ScalarField f(Kind::Expr);
        f.expr_ = std::make_shared<const Expr>(Expr::parse(text));
        f.check_expression_periodic();
        return f;
    }

    static ScalarField grid(std::size_t nx, std::size_t ny, std::vector<double> values) {
        if (nx < 2 || ny < 2) throw Error("2-D grid needs at least 2 samples per axis");
        if (values.size() != nx * ny) throw Error("grid sample count does not match nx * ny");
        check_finite(values);
        ScalarField f(Kind::Grid2D);
        f.grid_ = std::make_shared<const GridSamples>(GridSamples{nx, ny, std::move(values)});
        return f;
    }

    /// 1-D periodic samples along one axis, piecewise-linear in that coordinate.
    static ScalarField grid1d(Axis axis, std::vector<double> values) {
        if (values.size() < 2) throw Error("1-D grid needs at least 2 samples");
        check_finite(values);
        ScalarField f(Kind::Grid1D);
        f.axis_ = axis;
        const std::size_t n = values.size();
        f.grid_ = std::make_shared<const GridSamples>(
            axis == Axis::X ? GridSamples{n, 1, std::move(values)} : GridSamples{1, n, std::move(values)});
        return f;
    }

    Dual2 eval(double x, double y) const {
        x = wrap_unit(x);
        y = wrap_unit(y);
        Dual2 r;
        switch (kind_) {
            case Kind::Expr: r = expr_->eval(x, y); break;
            case Kind::Grid2D: r = bilinear(x, y); break;
            case Kind::Grid1D: r = linear(x, y); break;
        }
        return {scale_ * r.v + offset_, scale_ * r.dx, scale_ * r.dy};
    }

    Dual2 eval(Vec2 p) const { return eval(p.x, p.y); }
    double value(double x, double y) const { return eval(x, y).v; }
    double value(Vec2 p) const { return eval(p.x, p.y).v; }

    ScalarField scaled(double s) const {
        ScalarField f = *this;
        f.scale_ *= s;
        f.offset_ *= s;
        return f;
    }

    ScalarField shifted(double c) const {
        ScalarField f = *this;
        f.offset_ += c;
        return f;
    }

    bool depends_on_x() const {
        if (scale_ == 0.0) return false;
        switch (kind_) {
            case Kind::Expr: return expr_->uses_x();
            case Kind::Grid2D: return true;
            case Kind::Grid1D: return axis_ == Axis::X;
        }
        return true;
    }

    bool depends_on_y() const {
        if (scale_ == 0.0) return false;
        switch (kind_) {
            case Kind::Expr: return expr_->uses_y();
            case Kind::Grid2D: return true;
            case Kind::Grid1D: return axis_ == Axis::Y;
        }
        return true;
    }

    bool is_expression() const { return kind_ == Kind::Expr; }
    bool is_grid() const { return kind_ != Kind::Expr; }
    bool is_grid1d() const { return kind_ == Kind::Grid1D; }
    Axis axis() const { return axis_; }
    const Expr* expression_ptr() const { return expr_.get(); }
    const GridSamples* grid_ptr() const { return grid_.get(); }
    double scale() const { return scale_; }
    double offset() const { return offset_; }

    /// Minimum and maximum over an n x n sample grid (including its nodes).
    std::pair<double, double> grid_range(std::size_t n) const {
        double lo = value(0.0, 0.0);
        double hi = lo;
        for (std::size_t j = 0; j < n; ++j) {
            for (std::size_t i = 0; i < n; ++i) {
                const double v = value(static_cast<double>(i) / n, static_cast<double>(j) / n);
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        }
        return {lo, hi};
    }

private:
    enum class Kind { Expr, Grid2D, Grid1D };

    explicit ScalarField(Kind k) : kind_(k) {}

    static void check_finite(const std::vector<double>& v) {
        for (double s : v)
            if (!std::isfinite(s)) throw Error("grid sample is not finite");
    }

    void check_expression_periodic() const {
        constexpr int kProbes = 17;
        for (int i = 0; i < kProbes; ++i) {
            const double t = (i + 0.318) / kProbes;
            const double pairs[2][4] = {{0.0, t, 1.0, t}, {t, 0.0, t, 1.0}};
            for (const auto& pr : pairs) {
                const double a = expr_->value(pr[0], pr[1]);
                const double b = expr_->value(pr[2], pr[3]);
                if (!std::isfinite(a) || !std::isfinite(b))
                    throw Error("expression '" + expr_->source() + "' is not finite on the torus");
                if (std::abs(a - b) > 1e-9 * (1.0 + std::abs(a)))
                    throw Error("expression '" + expr_->source() + "' is not 1-periodic");
            }
        }
    }

    Dual2 bilinear(double x, double y) const {
        const auto& g = *grid_;
        const double fx = x * g.nx;
        const double fy = y * g.ny;
        auto i0 = static_cast<std::size_t>(fx);
        auto j0 = static_cast<std::size_t>(fy);
        if (i0 >= g.nx) i0 = g.nx - 1;
        if (j0 >= g.ny) j0 = g.ny - 1;
        const double tx = fx - i0;
        const double ty = fy - j0;
        const std::size_t i1 = (i0 + 1) % g.nx;
        const std::size_t j1 = (j0 + 1) % g.ny;
        const double f00 = g.values[j0 * g.nx + i0];
        const double f10 = g.values[j0 * g.nx + i1];
        const double f01 = g.values[j1 * g.nx + i0];
        const double f11 = g.values[j1 * g.nx + i1];
        const double v = (1 - tx) * (1 - ty) * f00 + tx * (1 - ty) * f10 + (1 - tx) * ty * f01 + tx * ty * f11;
        const double dx = g.nx * ((1 - ty) * (f10 - f00) + ty * (f11 - f01));
        const double dy = g.ny * ((1 - tx) * (f01 - f00) + tx * (f11 - f10));
        return {v, dx, dy};
    }

    Dual2 linear(double x, double y) const {
        const auto& g = *grid_;
        const std::size_t n = g.values.size();
        const double t = axis_ == Axis::X ? x : y;
        const double f = t * n;
        auto i0 = static_cast<std::size_t>(f);
        if (i0 >= n) i0 = n - 1;
        const double w = f - i0;
        const double a = g.values[i0];
        const double b = g.values[(i0 + 1) % n];
        const double slope = n * (b - a);
        return axis_ == Axis::X ? Dual2{a + w * (b - a), slope, 0.0} : Dual2{a + w * (b - a), 0.0, slope};
    }

    Kind kind_;
    Axis axis_ = Axis::X;
    std::shared_ptr<const Expr> expr_;
    std::shared_ptr<const GridSamples> grid_;
    double scale_ = 1.0;
    double offset_ = 0.0;
};

}  // namespace mather
