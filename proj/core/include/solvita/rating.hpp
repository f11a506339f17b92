#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace solvita {

inline constexpr double kRatingSearchLow = -500.0;
inline constexpr double kRatingSearchHigh = 5000.0;
inline constexpr double kRatingResidualTolerance = 1e-6;

// Contest standing key. Ordering: more solved ranks higher, then lower
// penalty, then earlier last accepted submission.
struct StandingTuple {
    int solved = 0;
    double penalty = 0.0;
    double last_ac_seconds = 0.0;
};

/// True when a strictly outranks b.
bool outranks(const StandingTuple& a, const StandingTuple& b);

struct ContestStandings {
    std::string contest_id;
    // (pre-contest rating, standing tuple) per retained human participant.
    std::vector<std::pair<double, StandingTuple>> humans;
    StandingTuple agent;
};

struct RankResult {
    std::size_t rank = 1;
    // Set when a human tuple exactly ties the agent's; ties rank the human
    // above the agent.
    bool tie_with_human = false;
};

/// Inserted rank: 1 + number of humans outranking (or exactly tying) the
/// agent. Empty standings give rank 1.
RankResult insert_rank(const ContestStandings& standings);

struct RatingEstimate {
    double rating = 0.0;
    double residual = 0.0;
    bool saturated_low = false;  // target only reachable below the interval
    bool saturated_high = false; // target only reachable above the interval
};

/// Expected number of listed ratings outperforming a player rated `rating`
/// under the Elo model: sum of 1 / (1 + 10^((rating - R_i) / 400)).
double expected_outperformers(double rating, const std::vector<double>& human_ratings);

/// Solves expected_outperformers(r) = m - 1 by bisection on [-500, 5000].
/// The expectation is strictly decreasing, so the interior solution is
/// unique. m = 1 clamps to the upper bound and m = |H| + 1 to the lower
/// bound, both flagged as saturated.
RatingEstimate invert_rating(std::size_t m, const std::vector<double>& human_ratings);

struct RatingTrajectory {
    std::vector<double> running_means;
    // Standard error over contests; absent when fewer than two estimates.
    std::optional<double> standard_error;
};

/// Running means of contest-local estimates plus the across-contest standard
/// error sqrt(sum (r_c - mean)^2 / (K (K - 1))).
RatingTrajectory rating_trajectory(const std::vector<double>& estimates);

} // namespace solvita
