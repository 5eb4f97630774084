#ifndef CONSTANCY_CHANGEPOINT_HPP
#define CONSTANCY_CHANGEPOINT_HPP

#include <iosfwd>
#include <span>
#include <vector>

#include "constancy/monitoring.hpp"

namespace constancy {

struct TriangleFit {
    double a_hat = 0.0;     // break time on the grid, in (0,1)
    double amplitude = 0.0; // least-squares coefficient on the triangle basis
    double sse = 0.0;
};

struct ParabolaFit {
    double amplitude = 0.0; // coefficient on t(1-t)
    double sse = 0.0;
};

// Least-squares fit of a triangular shape with apex at a: the basis is
// -(1-a) t on [0,a] and a (t-1) on [a,1]. The apex is grid-searched over
// {k/n : 2 <= k <= n-2} (the basis degenerates at the boundary); SSE ties
// break toward the smaller a. Values are the path component at k = 0..n.
TriangleFit fit_triangle(std::span<const double> values);

// Least-squares amplitude on the basis t(1-t).
ParabolaFit fit_parabola(std::span<const double> values);

// Descriptive shape label per component: both fits plus the smaller-SSE
// shape. No significance is attached; least squares is this library's
// fitting criterion.
struct ShapeDiagnosis {
    int component = 0; // 1-based
    enum class Best { triangle, parabola } best = Best::triangle;
    TriangleFit triangle;
    ParabolaFit parabola;

    void write(std::ostream& out) const;
};

std::vector<ShapeDiagnosis> diagnose(const MonitoringPath& path);

} // namespace constancy

#endif
