#include "constancy/changepoint.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace constancy {

TriangleFit fit_triangle(std::span<const double> values) {
    const int n = static_cast<int>(values.size()) - 1;
    if (n < 10) throw_data("fit_triangle: path too short (need at least 10 increments)");

    double sum_sq = 0.0;
    for (double v : values) sum_sq += v * v;

    TriangleFit best;
    best.sse = sum_sq; // the zero fit
    bool found = false;
    for (int ka = 2; ka <= n - 2; ++ka) {
        const double a = static_cast<double>(ka) / n;
        double tt = 0.0, ty = 0.0;
        for (int k = 0; k <= n; ++k) {
            const double t = static_cast<double>(k) / n;
            const double basis = t <= a ? -(1.0 - a) * t : a * (t - 1.0);
            tt += basis * basis;
            ty += basis * values[k];
        }
        const double amplitude = ty / tt;
        const double sse = sum_sq - amplitude * ty;
        if (!found || sse < best.sse - 1e-15 * sum_sq) {
            best.a_hat = a;
            best.amplitude = amplitude;
            best.sse = std::max(sse, 0.0);
            found = true;
        }
    }
    return best;
}

ParabolaFit fit_parabola(std::span<const double> values) {
    const int n = static_cast<int>(values.size()) - 1;
    if (n < 10) throw_data("fit_parabola: path too short (need at least 10 increments)");
    double tt = 0.0, ty = 0.0, sum_sq = 0.0;
    for (int k = 0; k <= n; ++k) {
        const double t = static_cast<double>(k) / n;
        const double basis = t * (1.0 - t);
        tt += basis * basis;
        ty += basis * values[k];
        sum_sq += values[k] * values[k];
    }
    ParabolaFit fit;
    fit.amplitude = ty / tt;
    fit.sse = std::max(sum_sq - fit.amplitude * ty, 0.0);
    return fit;
}

void ShapeDiagnosis::write(std::ostream& out) const {
    char buf[320];
    std::snprintf(buf, sizeof(buf),
                  "diagnosis component=%d best=%s a_hat=%.17g triangle_amplitude=%.17g "
                  "triangle_sse=%.17g parabola_amplitude=%.17g parabola_sse=%.17g\n",
                  component, best == Best::triangle ? "triangle" : "parabola", triangle.a_hat,
                  triangle.amplitude, triangle.sse, parabola.amplitude, parabola.sse);
    out << buf;
}

std::vector<ShapeDiagnosis> diagnose(const MonitoringPath& path) {
    std::vector<ShapeDiagnosis> out;
    std::vector<double> column(path.n + 1);
    for (int j = 0; j < path.p; ++j) {
        for (int k = 0; k <= path.n; ++k) column[k] = path.at(k, j);
        ShapeDiagnosis d;
        d.component = j + 1;
        d.triangle = fit_triangle(column);
        d.parabola = fit_parabola(column);
        d.best = d.triangle.sse <= d.parabola.sse ? ShapeDiagnosis::Best::triangle
                                                  : ShapeDiagnosis::Best::parabola;
        out.push_back(d);
    }
    return out;
}

} // namespace constancy
