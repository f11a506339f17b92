#include "solvita/rating.hpp"

#include <cmath>
#include <stdexcept>

namespace solvita {

bool outranks(const StandingTuple& a, const StandingTuple& b) {
    if (a.solved != b.solved) return a.solved > b.solved;
    if (a.penalty != b.penalty) return a.penalty < b.penalty;
    return a.last_ac_seconds < b.last_ac_seconds;
}

namespace {

bool tuples_equal(const StandingTuple& a, const StandingTuple& b) {
    return a.solved == b.solved && a.penalty == b.penalty &&
           a.last_ac_seconds == b.last_ac_seconds;
}

} // namespace

RankResult insert_rank(const ContestStandings& standings) {
    RankResult result;
    std::size_t above = 0;
    for (const auto& [rating, tuple] : standings.humans) {
        if (outranks(tuple, standings.agent)) {
            ++above;
        } else if (tuples_equal(tuple, standings.agent)) {
            // Exact tie including the tie-breaker: rank the human above.
            ++above;
            result.tie_with_human = true;
        }
    }
    result.rank = above + 1;
    return result;
}

double expected_outperformers(double rating, const std::vector<double>& human_ratings) {
    double sum = 0.0;
    for (double r_i : human_ratings) {
        sum += 1.0 / (1.0 + std::pow(10.0, (rating - r_i) / 400.0));
    }
    return sum;
}

RatingEstimate invert_rating(std::size_t m, const std::vector<double>& human_ratings) {
    const std::size_t n = human_ratings.size();
    if (m < 1 || m > n + 1) {
        throw std::invalid_argument("inserted rank out of range [1, |H| + 1]");
    }

    RatingEstimate estimate;
    const double target = static_cast<double>(m - 1);

    if (m == 1) {
        // Target expectation 0 is only reached asymptotically above the interval.
        estimate.rating = kRatingSearchHigh;
        estimate.saturated_high = true;
        estimate.residual = expected_outperformers(estimate.rating, human_ratings) - target;
        return estimate;
    }
    if (m == n + 1) {
        estimate.rating = kRatingSearchLow;
        estimate.saturated_low = true;
        estimate.residual = expected_outperformers(estimate.rating, human_ratings) - target;
        return estimate;
    }

    double lo = kRatingSearchLow;
    double hi = kRatingSearchHigh;
    double mid = 0.5 * (lo + hi);
    for (int iter = 0; iter < 200 && hi - lo > 1e-9; ++iter) {
        mid = 0.5 * (lo + hi);
        // Strictly decreasing in the rating: too many expected outperformers
        // means the trial rating is too low.
        if (expected_outperformers(mid, human_ratings) > target) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    estimate.rating = 0.5 * (lo + hi);
    estimate.residual = expected_outperformers(estimate.rating, human_ratings) - target;
    return estimate;
}

RatingTrajectory rating_trajectory(const std::vector<double>& estimates) {
    if (estimates.empty()) {
        throw std::invalid_argument("rating trajectory requires at least one estimate");
    }
    RatingTrajectory trajectory;
    trajectory.running_means.reserve(estimates.size());
    double sum = 0.0;
    for (std::size_t t = 0; t < estimates.size(); ++t) {
        sum += estimates[t];
        trajectory.running_means.push_back(sum / static_cast<double>(t + 1));
    }
    const std::size_t k = estimates.size();
    if (k >= 2) {
        const double mean = trajectory.running_means.back();
        double ss = 0.0;
        for (double r : estimates) {
            ss += (r - mean) * (r - mean);
        }
        trajectory.standard_error = std::sqrt(ss / (static_cast<double>(k) * (k - 1.0)));
    }
    return trajectory;
}

} // namespace solvita
