#include <catch_amalgamated.hpp>

#include <random>

#include "oracles.hpp"
#include "wolbachia/release.hpp"

using namespace wolbachia;
using Catch::Matchers::WithinAbs;

namespace {

const ModelParameters& params() {
    static const ModelParameters p = ModelParameters::wmelpop();
    return p;
}

const SeparatrixCurve& sep() {
    static const SeparatrixCurve c = separatrix_backward(params());
    return c;
}

ImpulsiveTrajectory run(double n0, double lambda, double tau, int count, StopRule rule) {
    return simulate_impulsive(params(), n0, {lambda, tau, count, rule}, &sep());
}

}  // namespace

TEST_CASE("jumps add exactly the release size", "[release]") {
    const double ns = params().n_sharp();
    const double lambda = 0.3 * ns;
    const auto tr = run(ns, lambda, 2.0, 10, StopRule::fixed_count);
    REQUIRE(tr.jumps.size() == 10);
    CHECK(tr.releases_used == 10);
    CHECK(tr.jumps.front().t == 0.0);
    CHECK(tr.jumps.front().w_before == 0.0);
    CHECK(tr.jumps.front().w_after == lambda);
    for (std::size_t i = 0; i < tr.jumps.size(); ++i) {
        const auto& j = tr.jumps[i];
        CHECK(j.t == Catch::Approx(2.0 * i));
        CHECK(std::abs((j.w_after - j.w_before) - lambda) <= 1e-12 * lambda);
    }
    // segments join the jumps
    for (std::size_t i = 1; i < tr.jumps.size(); ++i) {
        const auto& seg = tr.segments[i - 1];
        CHECK(seg.back().state.w == tr.jumps[i].w_before);
        CHECK(seg.back().state.n == tr.jumps[i].n);
        CHECK(seg.front().state.w == tr.jumps[i - 1].w_after);
    }
    CHECK(tr.segments.size() == tr.jumps.size());  // nine gaps plus the tail
}

TEST_CASE("no releases from the wild equilibrium", "[release]") {
    const double ns = params().n_sharp();
    const auto fixed = run(ns, 0.0, 1.0, 5, StopRule::fixed_count);
    CHECK(fixed.outcome == ReleaseOutcome::failure);
    CHECK(fixed.final_state.w == 0.0);
    const auto sep_rule = run(ns, 0.0, 1.0, 5, StopRule::on_separatrix_crossing);
    CHECK(sep_rule.outcome == ReleaseOutcome::budget_exhausted);
}

TEST_CASE("a single release at the threshold replaces", "[release]") {
    const double n0 = 0.5 * params().n_sharp();
    const double w_hat = minimal_viable_w(params(), n0);
    const auto ok = run(n0, w_hat * 1.05, 5.0, 1, StopRule::fixed_count);
    CHECK(ok.outcome == ReleaseOutcome::replacement);
    CHECK(ok.releases_used == 1);
    const auto crossing = run(n0, w_hat * 1.05, 5.0, 30, StopRule::on_separatrix_crossing);
    CHECK(crossing.outcome == ReleaseOutcome::replacement);
    CHECK(crossing.releases_used == 1);
    const auto short_of_it = run(n0, w_hat * 0.95, 5.0, 1, StopRule::fixed_count);
    CHECK(short_of_it.outcome == ReleaseOutcome::failure);
}

TEST_CASE("periodic releases from the wild equilibrium", "[release]") {
    const double ns = params().n_sharp();
    const auto tr = run(ns, 0.43 * ns, 1.0, 100, StopRule::on_separatrix_crossing);
    CHECK(tr.outcome == ReleaseOutcome::replacement);
    CHECK(std::abs(tr.releases_used - 12) <= 1);
    CHECK(std::abs(minimal_release_count(params(), ns, 0.43 * ns, 1.0, 100) - 12) <= 1);
}

TEST_CASE("minimal release size with a fixed budget", "[release]") {
    const double ns = params().n_sharp();
    const auto r = minimal_release_size(params(), 0.5 * ns, 1.0, 9, sep());
    CHECK_FALSE(r.error);
    CHECK_THAT(r.lambda_hat / ns, WithinAbs(0.39, 0.05));
    CHECK(std::abs(r.releases_used - 9) <= 1);
    CHECK(r.total_released == Catch::Approx(r.lambda_hat * r.releases_used));
    CHECK(r.duration_days == Catch::Approx(r.releases_used * 1.0));

    const auto r3 = minimal_release_size(params(), 0.25 * ns, 3.0, 3, sep());
    CHECK_THAT(r3.lambda_hat / ns, WithinAbs(0.3615, 0.05));
    CHECK(std::abs(r3.releases_used - 3) <= 1);

    // bisection endpoint: just above succeeds, just below does not
    ReleaseSchedule s{r.lambda_hat, 1.0, 9, StopRule::on_separatrix_crossing};
    CHECK(simulate_impulsive(params(), 0.5 * ns, s, &sep()).outcome == ReleaseOutcome::replacement);
    s.lambda_size = r.lambda_hat * (1 - 1e-5);
    CHECK(simulate_impulsive(params(), 0.5 * ns, s, &sep()).outcome != ReleaseOutcome::replacement);
}

TEST_CASE("one allowed release reduces to the single-release threshold", "[release][property]") {
    const double ns = params().n_sharp();
    for (double lambda : {0.1, 0.4, 0.8, 1.0}) {
        const double n0 = lambda * ns;
        const auto r = minimal_release_size(params(), n0, 2.0, 1, sep());
        const double w_hat = minimal_viable_w(params(), n0);
        CHECK(r.releases_used == 1);
        CHECK(oracle::rel_err(r.lambda_hat, w_hat) <= 3e-6);
    }
    const auto zero = minimal_release_size(params(), 0.0, 1.0, 5, sep());
    CHECK(zero.lambda_hat == 0.0);
}

TEST_CASE("very long periods approach the single-release size", "[release]") {
    const double ns = params().n_sharp();
    for (double lambda : {0.5, 1.0}) {
        const double n0 = lambda * ns;
        const auto r = minimal_release_size(params(), n0, 365.0, 10, sep());
        const double w_hat = minimal_viable_w(params(), n0);
        CHECK(r.lambda_hat <= w_hat * (1 + 1e-6));
        CHECK(r.lambda_hat >= 0.95 * w_hat);
    }
}

TEST_CASE("larger releases never need more of them", "[release][property]") {
    const double ns = params().n_sharp();
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int flagged = 0;
    for (int i = 0; i < 40; ++i) {
        const double n0 = (0.1 + 0.9 * u(rng)) * ns;
        const double tau = 1.0 + 4.0 * u(rng);
        const double l1 = (0.1 + 1.5 * u(rng)) * ns;
        const double l2 = l1 * (1.0 + u(rng));
        const auto a = run(n0, l1, tau, 40, StopRule::on_separatrix_crossing);
        if (a.outcome != ReleaseOutcome::replacement) continue;
        const auto b = run(n0, l2, tau, 40, StopRule::on_separatrix_crossing);
        if (b.outcome != ReleaseOutcome::replacement || b.releases_used > a.releases_used) ++flagged;
    }
    CHECK(flagged == 0);
}

TEST_CASE("explicit release lists", "[release]") {
    const double ns = params().n_sharp();
    const double w_hat = minimal_viable_w(params(), ns);
    // two half releases at t = 0 sum to one
    const auto same_day = simulate_release_list(params(), {ns, 0.0}, {{0.0, 0.55 * w_hat}, {0.0, 0.55 * w_hat}});
    CHECK(same_day.outcome == ReleaseOutcome::replacement);
    CHECK(same_day.releases_used == 2);
    REQUIRE(same_day.jumps.size() == 1);
    CHECK(same_day.jumps[0].w_after == Catch::Approx(1.1 * w_hat));

    const auto none = simulate_release_list(params(), {ns, 0.0}, {});
    CHECK(none.outcome == ReleaseOutcome::failure);

    // list in scrambled order matches the periodic schedule
    const double lambda = 0.43 * ns;
    std::vector<Release> rel;
    for (int k = 11; k >= 0; --k) rel.push_back({double(k), lambda});
    const auto listed = simulate_release_list(params(), {ns, 0.0}, rel);
    const auto periodic = run(ns, lambda, 1.0, 12, StopRule::fixed_count);
    CHECK(listed.outcome == periodic.outcome);
    CHECK(listed.final_state.n == Catch::Approx(periodic.final_state.n).margin(1e-6 * ns));
    CHECK(listed.final_state.w == Catch::Approx(periodic.final_state.w).margin(1e-6 * ns));

    CHECK_THROWS_AS(simulate_release_list(params(), {ns, 0.0}, {{-1.0, 10.0}}), ValidationError);
    CHECK_THROWS_AS(simulate_release_list(params(), {ns, 0.0}, {{1.0, -10.0}}), ValidationError);
}

TEST_CASE("schedule validation", "[release]") {
    CHECK_THROWS_AS(validate_schedule({-1.0, 1.0, 1, StopRule::fixed_count}), ValidationError);
    CHECK_THROWS_AS(validate_schedule({1.0, 0.0, 1, StopRule::fixed_count}), ValidationError);
    CHECK_THROWS_AS(validate_schedule({1.0, 1.0, 0, StopRule::fixed_count}), ValidationError);
    CHECK_THROWS_AS(simulate_impulsive(params(), 10.0, {1.0, 1.0, 2, StopRule::on_separatrix_crossing}, nullptr),
                    InputError);
    CHECK_NOTHROW(simulate_impulsive(params(), 10.0, {1.0, 1.0, 2, StopRule::fixed_count}, nullptr));
    CHECK(stop_rule_from_string("fixed-count") == StopRule::fixed_count);
    CHECK(to_string(StopRule::on_separatrix_crossing) == "on-separatrix-crossing");
    CHECK_THROWS_AS(stop_rule_from_string("sometimes"), InputError);
    CHECK(to_string(ReleaseOutcome::budget_exhausted) == "budget-exhausted");
}

TEST_CASE("tradeoff table shape and totals", "[release]") {
    const double ns = params().n_sharp();
    const std::vector<double> n0s{ns};
    const std::vector<double> taus{1.0, 3.0};
    std::vector<PlanCell> cells = make_plan_cells(n0s, taus, 1);
    REQUIRE(cells.size() == 2);
    cells[0].budget = 12;
    cells[1].budget = 8;
    const auto rows = tradeoff_table(params(), cells);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].total_released / ns == Catch::Approx(5.16).epsilon(0.1));
    CHECK(rows[1].total_released / ns == Catch::Approx(11.12).epsilon(0.1));
    CHECK(rows[0].duration_days == 12.0);

    // per-cell failures are recorded, not thrown
    cells.push_back({-5.0, 1.0, 3});
    const auto mixed = tradeoff_table(params(), cells);
    CHECK_FALSE(mixed[0].error);
    REQUIRE(mixed[2].error);
    CHECK_THROWS_AS(tradeoff_table(params(), std::vector<PlanCell>{}), InputError);
}
