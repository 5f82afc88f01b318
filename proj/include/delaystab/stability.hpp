#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "delaystab/sampler.hpp"
#include "delaystab/segment.hpp"
#include "delaystab/simulate.hpp"
#include "delaystab/system.hpp"

namespace delaystab {

enum class Verdict { Consistent, Falsified, Inconclusive };
std::string to_string(Verdict v);

/// Sampling budget for a property check. Sample i of a check is
/// sample_one(config, i) with the family, seed and radial mode given here,
/// so any witness can be regenerated from (seed, sample_index).
struct Budget {
    std::size_t samples = 100;
    SamplerFamily family = FourierFamily{3};
    std::uint64_t seed = 0;
    RadialMode radial = RadialMode::Mixed;
    std::size_t intervals = 200;
};

struct CheckOptions {
    double horizon = 0.0;            // 0 selects 20 r
    std::size_t report_times = 200;
    double step = 0.0;               // 0 selects r / 200
    NormOptions norms{};
};

/// Reproducible counterexample: the initial segment is sample
/// `sample_index` of the budget stream with `seed`, scaled into the ball of
/// radius `radius` (the radius is part of the sampler configuration).
struct Witness {
    std::size_t sample_index = 0;
    std::uint64_t seed = 0;
    double radius = 0.0;
    Segment initial;
    double time = 0.0;
    double norm = 0.0;
};

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

struct StabilityReport {
    std::string property;
    SpaceSpec space;
    Verdict verdict = Verdict::Inconclusive;
    std::optional<Witness> witness;
    std::map<std::string, double> margins;
    std::map<std::string, std::size_t> budget;
    std::map<std::string, Table> tables;
    std::vector<std::string> notes;
    std::vector<StabilityReport> parts;
};

/// Sampler configuration used for sample i of a check on a ball of radius rho.
SamplerConfig sampler_for(const DelaySystem& sys, const SpaceSpec& space, double rho,
                          const Budget& budget, const NormOptions& norms = {});

/// Report grid: about a fifth of the points uniform on [0, min(r, T)], the
/// rest geometric up to T, all snapped to multiples of `step`.
std::vector<double> report_times(double r, double T, std::size_t count, double step);

/// Norm history of one sampled trajectory at the report times.
struct NormSeries {
    std::size_t index = 0;
    double initial_norm = 0.0;      // ||x0||_X
    std::vector<double> sup;        // ||x_t||_inf (empty if not requested)
    std::vector<double> space;      // ||x_t||_X (empty if not requested)
    bool escaped = false;
    double escape_time = 0.0;
};

struct SeriesRequest {
    bool sup = true;
    bool space = true;
};

/// Samples `budget.samples` histories from the rho-ball of `space`,
/// simulates each to times.back() and records norms at `times`. Entries
/// after an escape are +inf.
std::vector<NormSeries> collect_series(const DelaySystem& sys, const SpaceSpec& space, double rho,
                                       const std::vector<double>& times, const Budget& budget,
                                       const CheckOptions& opts, SeriesRequest what = {});

// Property checks ------------------------------------------------------------

/// (RFC): sup of ||x_t||_X over t in [0, T] and the ball; falsified iff a
/// sampled solution escapes before T.
StabilityReport check_rfc(const DelaySystem& sys, const SpaceSpec& space, double rho, double T,
                          const Budget& budget, const CheckOptions& opts = {});

/// (LS): delta(eps) by 20-step log-scale bisection on [1e-6 eps, 10 eps].
StabilityReport check_ls(const DelaySystem& sys, const SpaceSpec& space,
                         const std::vector<double>& eps_list, const Budget& budget,
                         const CheckOptions& opts = {});

/// (GA) on the rho-ball: every sampled solution must be below eps at the
/// horizon. A solution still above eps and at least half its initial norm
/// is a counterexample; one that is above eps but shrinking is inconclusive.
StabilityReport check_ga(const DelaySystem& sys, const SpaceSpec& space, double rho, double eps,
                         const Budget& budget, const CheckOptions& opts = {});

/// (UGA): T(eps, rho), the first report time after which every sample stays
/// at or below eps up to the horizon.
StabilityReport check_uga(const DelaySystem& sys, const SpaceSpec& space, double eps, double rho,
                          const Budget& budget, const CheckOptions& opts = {});

/// (LagS): sup over the horizon; inconclusive when the per-time maximum is
/// still growing over the last quarter of the report grid.
StabilityReport check_lags(const DelaySystem& sys, const SpaceSpec& space, double rho,
                           const Budget& budget, const CheckOptions& opts = {});

// KL envelopes ---------------------------------------------------------------

/// sigma on shells (s_{j-1}, s_j] x report times; rows are shells.
struct KLEnvelope {
    std::vector<double> s_grid;
    std::vector<double> t_grid;
    std::vector<double> sigma;          // row-major, s_grid.size() x t_grid.size()
    std::vector<bool> absent;           // shells without samples (row interpolated)
    std::vector<std::size_t> counts;    // samples per shell
    bool decaying = false;              // sigma(s, t_end) <= 0.05 sigma(s, 0) for all shells
    bool non_decay = false;             // sigma(s, t_end) > 0.5 sigma(s, 0) for some shell

    double at(std::size_t shell, std::size_t time) const {
        return sigma[shell * t_grid.size() + time];
    }
    double& at(std::size_t shell, std::size_t time) { return sigma[shell * t_grid.size() + time]; }

    /// Shell index for a norm value (first shell whose edge is >= s);
    /// throws when s is beyond the last shell.
    std::size_t shell_of(double s) const;
    /// Upper bound at (s, t): shell of s, largest grid time <= t.
    double lookup(double s, double t) const;
    /// Recomputes `decaying` and `non_decay`.
    void classify();
};

enum class EnvelopeMode {
    SameSpace,  // ||x_t||_X against ||x_0||_X
    QX,         // ||x_t||_inf against ||x_0||_X
};

struct EnvelopeOptions {
    std::size_t shells = 8;
    double shell_ratio = 2.0;
    EnvelopeMode mode = EnvelopeMode::SameSpace;
    /// Lift sigma(s_j, 0) to at least s_j. This matches the normalisation
    /// sigma(s, 0) >= s used when building omega.
    bool floor_at_s = false;
};

/// Shell edges rho_max * ratio^{-(shells-1-j)}.
std::vector<double> shell_edges(double rho_max, std::size_t shells, double ratio);

/// Builds the smallest KL-shaped grid function dominating the series.
KLEnvelope envelope_from_series(const std::vector<NormSeries>& series, const std::vector<double>& s_grid,
                                const std::vector<double>& t_grid, EnvelopeMode mode, bool floor_at_s);

KLEnvelope fit_kl_envelope(const DelaySystem& sys, const SpaceSpec& space, double rho_max,
                           const std::vector<double>& t_grid, const Budget& budget,
                           const EnvelopeOptions& env = {}, const CheckOptions& opts = {});

/// True when rows are nondecreasing in s and nonincreasing in t.
bool has_kl_shape(const KLEnvelope& env);

/// omega(s, t) = sigma(s, t) + (1 + r^{1/p}) max(1, L(sigma(s, 0))) *
/// { e^{r-t} sigma(s, 0) for t <= r;  sigma(s, t - r) for t > r },
/// with sigma(s, t - r) read at the largest grid time <= t - r.
KLEnvelope omega_from_sigma(const KLEnvelope& sigma, double r, double p, const LipschitzModulus& L);

/// M = 1 + (1 + r^{1/p}) max(1, L(sigma0) exp(L(sigma0) T)).
double lipschitz_propagation_bound(double R, double T, double r, double p,
                                   const LipschitzModulus& L, double sigma0);

/// Simulates `pairs` sampled pairs from the R-ball and checks
/// ||x_t - y_t||_inf <= e^{L(sigma0) T} ||x_0 - y_0||_inf and
/// ||x_t - y_t||_X <= M ||x_0 - y_0||_X on [0, T]. sigma0 defaults to the
/// a-priori bound e^{L(R) T} R.
StabilityReport verify_pair_bounds(const DelaySystem& sys, const SpaceSpec& space, double R, double T,
                                   std::size_t pairs, const Budget& budget,
                                   std::optional<double> sigma0 = std::nullopt,
                                   const CheckOptions& opts = {});

/// Composite (GAS) + (RFC) vs (UGAS) report: LS over eps_list, GA and RFC
/// on the largest ball, and an envelope fit that must decay.
StabilityReport check_gas_vs_ugas(const DelaySystem& sys, const SpaceSpec& space,
                                  const std::vector<double>& rho_list,
                                  const std::vector<double>& eps_list, const Budget& budget,
                                  const CheckOptions& opts = {});

}  // namespace delaystab
