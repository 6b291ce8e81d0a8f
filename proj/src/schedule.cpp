#include "i3sb/schedule.hpp"

#include <cmath>
#include <stdexcept>

namespace i3sb {

void BetaSchedule::validate() const {
    if (!(beta_min >= 0.0)) throw std::invalid_argument("beta_min must be >= 0");
    if (!(beta_max > beta_min)) {
        if (kind == BetaKind::constant_rate && beta_max == beta_min && beta_max > 0.0) {
            return;  // degenerate constant schedule is still usable
        }
        throw std::invalid_argument("beta_max must exceed beta_min");
    }
}

double BetaSchedule::value(double t) const {
    if (kind == BetaKind::constant_rate) return beta_max;
    const double ramp = 2.0 * (beta_max - beta_min);
    return t <= 0.5 ? beta_min + ramp * t : beta_min + ramp * (1.0 - t);
}

double BetaSchedule::integral(double t) const {
    if (kind == BetaKind::constant_rate) return beta_max * t;
    const double d = beta_max - beta_min;
    if (t <= 0.5) return beta_min * t + d * t * t;
    // mirror half: S(1/2) + beta_min (t - 1/2) + d (1/4 - (1-t)^2)
    const double u = 1.0 - t;
    return beta_min * t + d * (0.5 - u * u);
}

TimeGrid build_grid(int steps, GridSpacing spacing, double t_min) {
    if (steps < 1) throw std::invalid_argument("build_grid: steps must be >= 1");
    if (!(t_min > 0.0 && t_min < 1.0)) {
        throw std::invalid_argument("build_grid: t_min must lie in (0, 1)");
    }
    TimeGrid g;
    g.steps = steps;
    g.spacing = spacing;
    g.t_min = t_min;
    g.t.resize(steps + 1);
    g.t[0] = 0.0;
    for (int n = 1; n < steps; ++n) {
        const double u = static_cast<double>(n) / steps;
        g.t[n] = spacing == GridSpacing::quadratic ? u * u : u;
    }
    g.t[steps] = 1.0;
    if (steps >= 1) g.t[1] = std::max(g.t[1], t_min);
    if (steps == 1) g.t[1] = 1.0;
    for (int n = 0; n < steps; ++n) {
        if (!(g.t[n] < g.t[n + 1])) {
            throw std::invalid_argument(
                "build_grid: t_min flooring broke strict monotonicity; lower t_min");
        }
    }
    return g;
}

Schedule build_schedule(const BetaSchedule& beta, const TimeGrid& grid) {
    beta.validate();
    if (grid.steps < 1 || grid.t.size() != static_cast<std::size_t>(grid.steps) + 1) {
        throw std::invalid_argument("build_schedule: grid not built");
    }
    Schedule s;
    s.beta = beta;
    s.grid = grid;
    const int N = grid.steps;
    s.sigma2.resize(N + 1);
    s.sbar2.resize(N + 1);
    s.alpha2.resize(N);
    const double total = beta.total();
    for (int n = 0; n <= N; ++n) {
        s.sigma2[n] = beta.integral(grid.t[n]);
        s.sbar2[n] = total - s.sigma2[n];
    }
    s.sigma2[0] = 0.0;
    s.sbar2[N] = 0.0;
    for (int n = 0; n < N; ++n) {
        s.alpha2[n] = s.sigma2[n + 1] - s.sigma2[n];
    }
    return s;
}

double total_variance(const Schedule& s) {
    return s.sigma2[s.steps()];
}

std::string to_string(BetaKind k) {
    return k == BetaKind::symmetric_triangular ? "symmetric_triangular" : "constant";
}

std::string to_string(GridSpacing s) {
    return s == GridSpacing::quadratic ? "quadratic" : "uniform";
}

BetaKind beta_kind_from_string(const std::string& s) {
    if (s == "symmetric_triangular") return BetaKind::symmetric_triangular;
    if (s == "constant") return BetaKind::constant_rate;
    throw std::invalid_argument("unknown beta kind: " + s);
}

GridSpacing spacing_from_string(const std::string& s) {
    if (s == "quadratic") return GridSpacing::quadratic;
    if (s == "uniform") return GridSpacing::uniform;
    throw std::invalid_argument("unknown grid spacing: " + s);
}

}  // namespace i3sb
