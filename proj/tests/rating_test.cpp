#include "solvita/rating.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace solvita;

TEST_CASE("insert_rank follows the standing-tuple order") {
    SUBCASE("agent above everyone") {
        ContestStandings standings;
        standings.humans = {{1500, {2, 100, 50}}, {1600, {1, 20, 10}}};
        standings.agent = {3, 300, 200};
        CHECK(insert_rank(standings).rank == 1);
    }
    SUBCASE("penalty breaks equal solve counts") {
        ContestStandings standings;
        standings.humans = {{2000, {3, 100, 0}}, {1800, {2, 50, 0}}};
        standings.agent = {3, 120, 0};
        CHECK(insert_rank(standings).rank == 2);
    }
    SUBCASE("earlier last-AC breaks equal solves and penalty") {
        ContestStandings standings;
        standings.humans = {{2000, {3, 100, 500}}};
        standings.agent = {3, 100, 400};
        CHECK(insert_rank(standings).rank == 1);
    }
    SUBCASE("an exact tie ranks the human above and is flagged") {
        ContestStandings standings;
        standings.humans = {{2000, {3, 100, 500}}};
        standings.agent = {3, 100, 500};
        const RankResult result = insert_rank(standings);
        CHECK(result.rank == 2);
        CHECK(result.tie_with_human);
    }
    SUBCASE("empty standings degenerate to rank 1") {
        ContestStandings standings;
        standings.agent = {0, 0, 0};
        CHECK(insert_rank(standings).rank == 1);
    }
    SUBCASE("rank is invariant under permutation of the humans list") {
        std::vector<std::pair<double, StandingTuple>> humans = {
            {1500, {4, 90, 10}}, {1700, {2, 10, 5}}, {1900, {3, 70, 30}}, {2100, {3, 60, 20}}};
        ContestStandings standings{"c", humans, {3, 65, 25}};
        const std::size_t base = insert_rank(standings).rank;
        std::sort(humans.begin(), humans.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        ContestStandings sorted{"c", humans, {3, 65, 25}};
        CHECK(insert_rank(sorted).rank == base);
    }
}

TEST_CASE("invert_rating solves the expectation equation") {
    SUBCASE("symmetric field of equals lands on the common rating") {
        const RatingEstimate estimate = invert_rating(2, {1500, 1500});
        CHECK(std::abs(estimate.rating - 1500.0) < 1e-4);
        CHECK(std::abs(estimate.residual) < 1e-6);
        CHECK_FALSE(estimate.saturated_low);
        CHECK_FALSE(estimate.saturated_high);
    }
    SUBCASE("rank 1 saturates at the upper search bound") {
        const RatingEstimate estimate = invert_rating(1, {2000});
        CHECK(estimate.saturated_high);
        CHECK(estimate.rating == kRatingSearchHigh);
    }
    SUBCASE("last place saturates at the lower search bound") {
        const RatingEstimate estimate = invert_rating(2, {2000});
        CHECK(estimate.saturated_low);
        CHECK(estimate.rating == kRatingSearchLow);
    }
    SUBCASE("re-substitution reproduces the target rank") {
        const std::vector<double> ratings = {1000, 2000};
        const RatingEstimate estimate = invert_rating(2, ratings);
        CHECK(std::abs(expected_outperformers(estimate.rating, ratings) - 1.0) < 1e-6);
    }
    SUBCASE("out-of-range rank throws") {
        CHECK_THROWS_AS(invert_rating(0, {1500}), std::invalid_argument);
        CHECK_THROWS_AS(invert_rating(3, {1500}), std::invalid_argument);
    }
}

TEST_CASE("invert_rating residual stays within tolerance on random standings") {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> field_size(2, 200);
    std::uniform_real_distribution<double> rating(800, 3500);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = field_size(rng);
        std::vector<double> ratings(static_cast<std::size_t>(n));
        for (double& r : ratings) {
            r = rating(rng);
        }
        std::uniform_int_distribution<std::size_t> rank(2, ratings.size());
        const std::size_t m = rank(rng);
        const RatingEstimate estimate = invert_rating(m, ratings);
        CHECK(std::abs(estimate.residual) < 1e-6);
    }
}

TEST_CASE("invert_rating is antitone in the inserted rank") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> rating(800, 3500);
    for (std::size_t n = 1; n <= 20; ++n) {
        std::vector<double> ratings(n);
        for (double& r : ratings) {
            r = rating(rng);
        }
        double previous = std::numeric_limits<double>::infinity();
        for (std::size_t m = 1; m <= n + 1; ++m) {
            const double value = invert_rating(m, ratings).rating;
            CHECK(value <= previous + 1e-9);
            previous = value;
        }
    }
}

TEST_CASE("trajectory computes running means and the standard error") {
    SUBCASE("two contests") {
        const RatingTrajectory t = rating_trajectory({3000, 3100});
        REQUIRE(t.running_means.size() == 2);
        CHECK(t.running_means[0] == doctest::Approx(3000));
        CHECK(t.running_means[1] == doctest::Approx(3050));
        REQUIRE(t.standard_error.has_value());
        CHECK(*t.standard_error == doctest::Approx(50.0).epsilon(1e-12));
    }
    SUBCASE("constant estimates have zero standard error") {
        const RatingTrajectory t = rating_trajectory({2800, 2800, 2800});
        CHECK(*t.standard_error == doctest::Approx(0.0));
    }
    SUBCASE("a single contest has no standard error") {
        const RatingTrajectory t = rating_trajectory({2500});
        CHECK(t.running_means.back() == doctest::Approx(2500));
        CHECK_FALSE(t.standard_error.has_value());
    }
    SUBCASE("final running mean equals the plain mean") {
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> rating(-500, 5000);
        std::vector<double> estimates(37);
        double sum = 0.0;
        for (double& r : estimates) {
            r = rating(rng);
            sum += r;
        }
        const RatingTrajectory t = rating_trajectory(estimates);
        CHECK(std::abs(t.running_means.back() - sum / 37.0) < 1e-12);
    }
}
