#pragma once

#include <string>
#include <vector>

namespace i3sb {

enum class BetaKind { symmetric_triangular, constant_rate };

// Diffusion speed beta(t) on [0, 1]. The triangular form ramps linearly
// from beta_min at t=0 to beta_max at t=1/2 and back down; its integral is
// piecewise quadratic, so all accumulated variances have closed forms.
struct BetaSchedule {
    BetaKind kind = BetaKind::symmetric_triangular;
    double beta_min = 1e-4;
    double beta_max = 0.15;

    double value(double t) const;
    // \int_0^t beta, exact antiderivative
    double integral(double t) const;
    double total() const { return integral(1.0); }
    void validate() const;
};

enum class GridSpacing { quadratic, uniform };

// Discrete generative time knots 0 = t[0] < t[1] < ... < t[N] = 1.
struct TimeGrid {
    int steps = 0;  // N
    GridSpacing spacing = GridSpacing::quadratic;
    double t_min = 1e-4;  // clip floor applied to t[1]
    std::vector<double> t;
};

// quadratic: t_n = (n/N)^2 with t_1 floored at t_min; uniform: t_n = n/N.
// Throws if steps < 1 or the floored t_1 breaks strict monotonicity.
TimeGrid build_grid(int steps, GridSpacing spacing, double t_min = 1e-4);

// Grid plus every accumulated variance the posterior formulas need:
//   sigma2[n] = \int_0^{t_n} beta     (variance accumulated from the clean end)
//   sbar2[n]  = \int_{t_n}^1 beta    (variance accumulated from the corrupt end)
//   alpha2[n] = sigma2[n+1] - sigma2[n]
// sigma2[n] + sbar2[n] equals the same total for every n by construction.
struct Schedule {
    BetaSchedule beta;
    TimeGrid grid;
    std::vector<double> sigma2;  // N+1 entries
    std::vector<double> sbar2;   // N+1 entries
    std::vector<double> alpha2;  // N entries

    int steps() const { return grid.steps; }
};

Schedule build_schedule(const BetaSchedule& beta, const TimeGrid& grid);

double total_variance(const Schedule& s);

std::string to_string(BetaKind k);
std::string to_string(GridSpacing s);
BetaKind beta_kind_from_string(const std::string& s);
GridSpacing spacing_from_string(const std::string& s);

}  // namespace i3sb
