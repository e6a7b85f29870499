#include <doctest.h>

#include <array>
#include <cmath>

#include "tpop/graphical_model.hpp"

using namespace tpop;
using namespace tpop::model;

namespace {

// Independent reference: the confirmation table written out by hand, states
// ordered (h, not c), (h, c), (not h, c), (not h, not c).
constexpr int kTable[4][4] = {{1, 1, 1, 1}, {1, 1, 0, 0}, {1, 0, 1, 0}, {1, 0, 0, 1}};

std::array<double, 4> weights(double ph, double pc) {
  return {ph * (1 - pc), ph * pc, (1 - ph) * pc, (1 - ph) * (1 - pc)};
}

// Probability that a random witness confirms a parent in state s.
double confirm_prob(const std::array<double, 4>& p, int s) {
  double q = 0.0;
  for (int w = 0; w < 4; ++w) q += p[w] * kTable[s][w];
  return q;
}

struct Reference {
  double r;
  double s;
};

// t = 1, one level of six witnesses: every witness must confirm the root.
Reference theta1_closed_form(double ph, double pc) {
  const auto p = weights(ph, pc);
  auto accept = [&](int s) { return std::pow(confirm_prob(p, s), 6); };
  return {(p[0] * accept(0) + p[1] * accept(1)) / ph,
          1.0 - (p[2] * accept(2) + p[3] * accept(3)) / (1.0 - ph)};
}

// t = 1, two levels of two: each level-1 witness must confirm the root and
// be confirmed by both of its own witnesses.
Reference theta2_closed_form(double ph, double pc) {
  const auto p = weights(ph, pc);
  auto accept = [&](int g) {
    double branch = 0.0;
    for (int a = 0; a < 4; ++a) branch += p[a] * kTable[g][a] * std::pow(confirm_prob(p, a), 2);
    return branch * branch;
  };
  return {(p[0] * accept(0) + p[1] * accept(1)) / ph,
          1.0 - (p[2] * accept(2) + p[3] * accept(3)) / (1.0 - ph)};
}

// Two levels of two at threshold t, enumerated directly from the procedure:
// g = s[0], level-1 = s[1], s[2], their witnesses s[3..4] and s[5..6].
bool theta2_verdict(const std::array<int, 7>& s, double t) {
  const int k1 = kTable[s[1]][s[3]] + kTable[s[1]][s[4]];
  const int k2 = kTable[s[2]][s[5]] + kTable[s[2]][s[6]];
  const bool out1 = k1 < t * 2;
  const bool out2 = k2 < t * 2;
  if (k1 + k2 < t * 4) return false;
  const int kg = (out1 ? 0 : kTable[s[0]][s[1]]) + (out2 ? 0 : kTable[s[0]][s[2]]);
  return !(kg < t * 2);
}

Reference theta2_brute_force(double ph, double pc, double t) {
  const auto p = weights(ph, pc);
  double ha = 0.0;
  double dr = 0.0;
  std::array<int, 7> s{};
  for (int code = 0; code < (1 << 14); ++code) {
    double w = 1.0;
    for (int k = 0; k < 7; ++k) {
      s[k] = (code >> (2 * k)) & 3;
      w *= p[s[k]];
    }
    const bool v = theta2_verdict(s, t);
    if (s[0] < 2 && v) ha += w;
    if (s[0] >= 2 && !v) dr += w;
  }
  return {ha / ph, dr / (1.0 - ph)};
}

const TPoPParams kTheta1(Threshold::fraction(1, 1), {6});
const TPoPParams kTheta2(Threshold::fraction(1, 1), {2, 2});
const TPoPParams kTheta2Half(Threshold::fraction(1, 2), {2, 2});

const double kPoints[][2] = {{0.1, 0.1}, {0.1, 0.9}, {0.5, 0.5}, {0.9, 0.1},
                             {0.9, 0.9}, {0.3, 0.7}, {0.75, 0.25}};

}  // namespace

TEST_CASE("truth table matches the published confirmation rules") {
  for (NodeState p : kAllStates) {
    for (NodeState w : kAllStates) {
      CAPTURE(static_cast<int>(p));
      CAPTURE(static_cast<int>(w));
      CHECK(confirm_states(p, w) == (kTable[static_cast<int>(p)][static_cast<int>(w)] == 1));
      CHECK(confirm_states(p, w) == confirm_states(w, p));
    }
  }
  CHECK(make_state(true, false) == NodeState::HonestFree);
  CHECK(make_state(false, true) == NodeState::DishonestCoerced);
  CHECK(is_honest(NodeState::HonestCoerced));
  CHECK_FALSE(is_coerced(NodeState::DishonestFree));
}

TEST_CASE("priors give a distribution over the four states") {
  const StatePriors pr{0.3, 0.8};
  double total = 0.0;
  for (NodeState s : kAllStates) total += pr.probability(s);
  CHECK(total == doctest::Approx(1.0));
  CHECK(pr.probability(NodeState::DishonestCoerced) == doctest::Approx(0.7 * 0.8));
  CHECK_THROWS_AS((StatePriors{1.1, 0.0}).validate(), InvalidInput);
  CHECK_THROWS_AS((StatePriors{0.5, -0.1}).validate(), InvalidInput);
}

TEST_CASE("exact enumeration agrees with the closed forms") {
  for (const auto& pt : kPoints) {
    CAPTURE(pt[0]);
    CAPTURE(pt[1]);
    const StatePriors pr{pt[0], pt[1]};

    const auto e1 = exact_cell(kTheta1, pr);
    const auto r1 = theta1_closed_form(pt[0], pt[1]);
    CHECK(*e1.reliability == doctest::Approx(r1.r).epsilon(1e-12));
    CHECK(*e1.security == doctest::Approx(r1.s).epsilon(1e-12));

    const auto e2 = exact_cell(kTheta2, pr);
    const auto r2 = theta2_closed_form(pt[0], pt[1]);
    CHECK(*e2.reliability == doctest::Approx(r2.r).epsilon(1e-12));
    CHECK(*e2.security == doctest::Approx(r2.s).epsilon(1e-12));

    const auto e3 = exact_cell(kTheta2Half, pr);
    const auto r3 = theta2_brute_force(pt[0], pt[1], 0.5);
    CHECK(*e3.reliability == doctest::Approx(r3.r).epsilon(1e-12));
    CHECK(*e3.security == doctest::Approx(r3.s).epsilon(1e-12));

    // The direct enumeration reproduces the closed form at t = 1.
    const auto r4 = theta2_brute_force(pt[0], pt[1], 1.0);
    CHECK(r4.r == doctest::Approx(r2.r).epsilon(1e-12));
    CHECK(r4.s == doctest::Approx(r2.s).epsilon(1e-12));
  }
}

TEST_CASE("exact values at reference points") {
  const auto a = exact_cell(kTheta1, {0.9, 0.1});
  CHECK(*a.reliability == doctest::Approx(0.9531441).epsilon(1e-10));
  CHECK(*a.security == doctest::Approx(0.491302432858).epsilon(1e-10));
  const auto b = exact_cell(kTheta2, {0.9, 0.1});
  CHECK(*b.reliability == doctest::Approx(0.911758446518).epsilon(1e-10));
  CHECK(*b.security == doctest::Approx(0.231735021782).epsilon(1e-10));
  const auto c = exact_cell(kTheta2Half, {0.5, 0.5});
  CHECK(*c.reliability == doctest::Approx(0.73046875).epsilon(1e-10));
  CHECK(*c.security == doctest::Approx(0.36328125).epsilon(1e-10));
}

TEST_CASE("exact enumeration edges") {
  const auto honest_world = exact_cell(kTheta1, {1.0, 0.3});
  CHECK(*honest_world.reliability == doctest::Approx(1.0));
  CHECK_FALSE(honest_world.security);
  const auto liars = exact_cell(kTheta1, {0.0, 0.0});
  CHECK_FALSE(liars.reliability);
  CHECK(*liars.security == doctest::Approx(0.0));
  CHECK(*exact_cell(kTheta2, {0.0, 1.0}).security == doctest::Approx(0.0));
  CHECK_THROWS_AS(exact_cell(TPoPParams(Threshold::fraction(1, 1), {3, 3}), {0.5, 0.5}),
                  InvalidInput);
}

TEST_CASE("sampler tree is the full breadth-first layout") {
  const TreeSampler s(kTheta2);
  CHECK(s.size() == 7);
  const auto& tree = s.tree();
  CHECK(tree.levels[2][3].agent == AgentId{6});
  CHECK(tree.levels[2][3].parent == 1u);
  CHECK_FALSE(tree.under_filled);
}

TEST_CASE("Monte Carlo estimates sit within four standard errors of exact") {
  for (const auto* params : {&kTheta1, &kTheta2, &kTheta2Half}) {
    for (const auto& pt : kPoints) {
      const StatePriors pr{pt[0], pt[1]};
      const auto exact = exact_cell(*params, pr);
      const auto est = estimate_cell(*params, pr, 20000, 17);
      CHECK(est.honest_roots + est.dishonest_roots == 20000);
      auto close = [](double p, double phat, std::uint64_t n) {
        const double se = std::sqrt(std::max(p * (1 - p), 1e-6) / static_cast<double>(n));
        return std::fabs(p - phat) <= 4 * se;
      };
      CAPTURE(params->label());
      CAPTURE(pt[0]);
      CAPTURE(pt[1]);
      CHECK(close(*exact.reliability, *est.reliability, est.honest_roots));
      CHECK(close(*exact.security, *est.security, est.dishonest_roots));
    }
  }
}

TEST_CASE("estimates are reproducible from the seed") {
  const auto a = estimate_cell(kTheta2, {0.6, 0.4}, 500, 99);
  const auto b = estimate_cell(kTheta2, {0.6, 0.4}, 500, 99);
  CHECK(a.honest_accepted == b.honest_accepted);
  CHECK(a.dishonest_rejected == b.dishonest_rejected);
  CHECK_THROWS_AS(estimate_cell(kTheta2, {0.6, 0.4}, 0, 1), InvalidInput);
  CHECK(sample_tree_outcome(kTheta1, {1.0, 0.0}, 5).verdict);
}

TEST_CASE("grid sweep fills every cell and ignores the worker count") {
  SweepOptions opt;
  opt.grid_step = 0.25;
  opt.trees_per_cell = 200;
  opt.master_seed = 3;
  opt.jobs = 1;
  const auto one = sweep_grid(kTheta2, opt);
  opt.jobs = 4;
  const auto four = sweep_grid(kTheta2, opt);
  REQUIRE(one.reliability.cell_count() == 25);
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 5; ++j) {
      CHECK(one.reliability.value(i, j) == four.reliability.value(i, j));
      CHECK(one.security.value(i, j) == four.security.value(i, j));
      CHECK(one.reliability.count(i, j) + one.security.count(i, j) == 200);
    }
  }
  CHECK_FALSE(one.reliability.value(0, 0));
  CHECK(*one.reliability.value(4, 2) == 1.0);
  CHECK_FALSE(one.security.value(4, 0));
  CHECK(*one.security.value(0, 0) == 0.0);
  CHECK(*one.security.value(0, 4) == 0.0);
}
