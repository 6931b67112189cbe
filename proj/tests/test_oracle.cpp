#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ftopt/ergodic.hpp"
#include "ftopt/oracle.hpp"
#include "support/oracles.hpp"

using namespace ftopt;

namespace {

std::vector<QuadraticCost> unit_costs(std::initializer_list<double> cs) {
  std::vector<QuadraticCost> out;
  for (double c : cs) out.emplace_back(c, 1.0);
  return out;
}

ValidFamilyParams byz(double beta, std::size_t gamma) { return {beta, gamma, FaultModel::byzantine}; }

}  // namespace

// ---- optimum interval -----------------------------------------------------------------------

TEST(OptimumInterval, TwoOfThree) {
  const auto y = optimum_interval(unit_costs({0, 1, 2}), {0, 1, 2}, byz(0.2, 2));
  EXPECT_DOUBLE_EQ(y.lo, 0.2);
  EXPECT_DOUBLE_EQ(y.hi, 1.8);
  EXPECT_TRUE(y.exact);
}

TEST(OptimumInterval, ForcedUniform) {
  const auto y = optimum_interval(unit_costs({0, 1, 2}), {0, 1, 2}, byz(1.0 / 3.0, 3));
  EXPECT_DOUBLE_EQ(y.lo, 1.0);
  EXPECT_DOUBLE_EQ(y.hi, 1.0);
}

TEST(OptimumInterval, PointMassOnEachExtreme) {
  const auto costs = unit_costs({0, 1, 2});
  // β=1 exceeds 1/|N|; the same extremes appear with γ=0
  EXPECT_THROW(optimum_interval(costs, {0, 1, 2}, byz(1.0, 1)), InvalidParams);
  const auto y = optimum_interval(costs, {0, 1, 2}, byz(0.0, 0));
  EXPECT_EQ(y.lo, 0.0);
  EXPECT_EQ(y.hi, 2.0);
}

TEST(OptimumInterval, ConstrainedNearestEndpoint) {
  const auto costs = unit_costs({0, 1, 2});
  const auto p = byz(0.2, 2);
  const auto above = optimum_interval(costs, {0, 1, 2}, p, ConstraintInterval(2, 5));
  EXPECT_EQ(above.lo, 2.0);
  EXPECT_EQ(above.hi, 2.0);
  const auto below = optimum_interval(costs, {0, 1, 2}, p, ConstraintInterval(-4, -1));
  EXPECT_EQ(below.lo, -1.0);
  EXPECT_EQ(below.hi, -1.0);
  const auto overlap = optimum_interval(costs, {0, 1, 2}, p, ConstraintInterval(1, 5));
  EXPECT_EQ(overlap.lo, 1.0);
  EXPECT_DOUBLE_EQ(overlap.hi, 1.8);
  const auto touching = optimum_interval(costs, {0, 1, 2}, p, ConstraintInterval(1.8, 3));
  EXPECT_DOUBLE_EQ(touching.lo, 1.8);
  EXPECT_DOUBLE_EQ(touching.hi, 1.8);
}

TEST(OptimumInterval, CrashModeAdmitsFaultyCenters) {
  const auto costs = unit_costs({0, 1, 2, 6});
  const ValidFamilyParams p{0.25, 2, FaultModel::crash};
  const auto y = optimum_interval(costs, {0, 1, 2}, p);
  EXPECT_DOUBLE_EQ(y.lo, 0.25 * 1.0 + 0.5 * 0.0);
  EXPECT_DOUBLE_EQ(y.hi, 0.25 * 3.0 + 0.5 * 6.0);
}

TEST(OptimumInterval, Errors) {
  EXPECT_THROW(optimum_interval(std::vector<QuadraticCost>{{0, 2}, {1, 1}}, {0, 1}, byz(0.5, 1)),
               CurvatureUnsupported);
  EXPECT_THROW(optimum_interval(unit_costs({0, 1}), {0, 1}, byz(0.5, 3)), InvalidParams);
  EXPECT_THROW(optimum_interval(unit_costs({0, 1}), {}, byz(0.0, 0)), InvalidParams);
  EXPECT_THROW(optimum_interval(unit_costs({0, 1}), {0, 1}, byz(-0.1, 1)), InvalidParams);
}

TEST(OptimumInterval, GreedyMatchesExtremePointSearch) {
  std::mt19937_64 rng(9);
  std::size_t instances = 0;
  for (int rep = 0; rep < 300; ++rep) {
    const std::size_t n = 1 + rep % 6;
    std::vector<QuadraticCost> costs;
    std::vector<double> centers;
    for (std::size_t i = 0; i < n; ++i) {
      centers.push_back(static_cast<double>(static_cast<int>(rng() % 21) - 10) * 0.5);
      costs.emplace_back(centers.back(), 1.0);
    }
    VertexSet N;
    for (std::size_t i = 0; i < n; ++i)
      if (rng() % 4 != 0) N.push_back(i);
    if (N.empty() || N.size() > 5) continue;
    std::vector<std::size_t> Nv(N.begin(), N.end());
    for (double beta : {0.1, 0.2, 1.0 / static_cast<double>(N.size())}) {
      if (beta > 1.0 / static_cast<double>(N.size())) continue;
      for (std::size_t gamma = 0; gamma <= N.size(); ++gamma) {
        if (beta * static_cast<double>(gamma) > 1.0) continue;
        for (bool crash : {false, true}) {
          const ValidFamilyParams p{beta, gamma, crash ? FaultModel::crash : FaultModel::byzantine};
          const auto y = optimum_interval(costs, N, p);
          const auto want = oracle_ref::interval_brute(centers, Nv, beta, gamma, crash);
          ASSERT_EQ(y.lo, want.lo) << "rep " << rep << " beta " << beta << " gamma " << gamma;
          ASSERT_EQ(y.hi, want.hi) << "rep " << rep << " beta " << beta << " gamma " << gamma;
          const auto yc = optimum_interval(costs, N, p, ConstraintInterval(-1, 2));
          const auto wc = oracle_ref::constrain(want, -1, 2);
          ASSERT_EQ(yc.lo, wc.lo);
          ASSERT_EQ(yc.hi, wc.hi);
          ++instances;
        }
      }
    }
  }
  EXPECT_GT(instances, 500u);
}

TEST(OptimumInterval, ContainsSampledArgmins) {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(-5, 5);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 3 + rep % 4;
    std::vector<QuadraticCost> costs;
    for (std::size_t i = 0; i < n; ++i) costs.emplace_back(u(rng), 1.0);
    const VertexSet N = rep % 2 ? all_vertices(n) : all_vertices(n - 1);
    const FaultModel mode = rep % 3 ? FaultModel::byzantine : FaultModel::crash;
    const ValidFamilyParams p{1.0 / static_cast<double>(N.size() + rep % 3), 1 + rep % N.size(), mode};
    const ConstraintInterval X(-2, 2);
    const auto y = optimum_interval(costs, N, p, X);
    for (const auto& alpha : sample_valid_weights(p, N, n, 50, static_cast<std::uint64_t>(rep))) {
      const double z = project(X, weighted_argmin(costs, alpha));
      EXPECT_TRUE(membership(z, y, 1e-12)) << z << " not in [" << y.lo << ", " << y.hi << "]";
    }
  }
}

// ---- valid weights ---------------------------------------------------------------------------------

TEST(ValidWeights, Examples) {
  const VertexSet N{0, 1, 2};
  const std::vector<double> uni{1.0 / 3, 1.0 / 3, 1.0 / 3};
  EXPECT_TRUE(is_valid_weights(uni, byz(1.0 / 3, 3), N));
  const std::vector<double> mass_on_faulty{0, 0, 0, 1};
  EXPECT_FALSE(is_valid_weights(mass_on_faulty, byz(0.0, 0), N));
  EXPECT_TRUE(is_valid_weights(mass_on_faulty, ValidFamilyParams{0.0, 0, FaultModel::crash}, N));
  const std::vector<double> a{0.2, 0.2, 0.6};
  EXPECT_TRUE(is_valid_weights(a, byz(0.2, 2), N));
  EXPECT_FALSE(is_valid_weights(a, byz(0.3, 2), N));
  const std::vector<double> neg{-0.1, 0.5, 0.6};
  EXPECT_FALSE(is_valid_weights(neg, byz(0.0, 0), N));
  const std::vector<double> short_sum{0.2, 0.2, 0.2};
  EXPECT_FALSE(is_valid_weights(short_sum, byz(0.0, 0), N));
}

TEST(ValidWeights, SamplesAreValid) {
  for (std::size_t n = 2; n <= 7; ++n) {
    const VertexSet N = all_vertices(n - 1);
    for (std::size_t gamma = 0; gamma <= N.size(); ++gamma)
      for (FaultModel m : {FaultModel::byzantine, FaultModel::crash}) {
        const ValidFamilyParams p{1.0 / static_cast<double>(N.size()), gamma, m};
        const auto ws = sample_valid_weights(p, N, n, 40, n * 31 + gamma);
        ASSERT_EQ(ws.size(), 40u);
        for (const auto& w : ws) EXPECT_TRUE(is_valid_weights(w, p, N));
      }
  }
}

TEST(ValidWeights, TightFamilyIsUniform) {
  const VertexSet N{0, 1, 2, 3};
  for (const auto& w : sample_valid_weights(byz(0.25, 4), N, 4, 20, 1))
    for (double a : w) EXPECT_NEAR(a, 0.25, 1e-15);
}

TEST(ValidWeights, CountZeroAndInvalid) {
  EXPECT_TRUE(sample_valid_weights(byz(0.2, 2), {0, 1, 2}, 3, 0, 1).empty());
  EXPECT_THROW(sample_valid_weights(byz(0.5, 3), {0, 1, 2}, 3, 5, 1), InvalidParams);
}

TEST(ValidWeights, SamplingIsSeeded) {
  const auto a = sample_valid_weights(byz(0.2, 2), {0, 1, 2}, 4, 10, 77);
  const auto b = sample_valid_weights(byz(0.2, 2), {0, 1, 2}, 4, 10, 77);
  const auto c = sample_valid_weights(byz(0.2, 2), {0, 1, 2}, 4, 10, 78);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
}

// ---- membership ---------------------------------------------------------------------------------------

TEST(Membership, Examples) {
  const OptimumInterval y{0.2, 1.8, true};
  EXPECT_TRUE(membership(1.0, y, 0));
  EXPECT_FALSE(membership(1.81, y, 1e-3));
  EXPECT_TRUE(membership(1.8009, y, 1e-3));
  EXPECT_TRUE(membership(0.2, y, 0));
  EXPECT_DOUBLE_EQ(y.distance(2.0), 0.2);
  EXPECT_EQ(y.distance(1.0), 0.0);
}

// ---- guarantee parameters -------------------------------------------------------------------------------

TEST(Guarantee, TrimmedGradientsOnK5) {
  const auto r = guarantee_params(complete_graph(5), {4}, 1, Algorithm::A2);
  EXPECT_DOUBLE_EQ(r.params.beta, 1.0 / 6.0);
  EXPECT_EQ(r.params.gamma, 3u);
  EXPECT_EQ(r.params.mode, FaultModel::byzantine);
  EXPECT_FALSE(r.infeasible_graph);
}

TEST(Guarantee, TrimmedMeanOnK4) {
  const auto r = guarantee_params(complete_graph(4), {3}, 1, Algorithm::A1);
  ASSERT_TRUE(r.tau.has_value());
  EXPECT_TRUE(r.tau->exact);
  EXPECT_EQ(r.tau->tau, 27u);
  EXPECT_DOUBLE_EQ(r.log_beta, 27.0 * 3.0 * std::log(0.25));
  EXPECT_NEAR(r.params.beta / std::pow(0.25, 81), 1.0, 1e-12);
  EXPECT_EQ(r.params.gamma, min_source_size_byzantine(complete_graph(4), {3}, 1));
  EXPECT_TRUE(r.gamma_requirement_met);
}

TEST(Guarantee, CrashMeansOnK4WithoutFaults) {
  const auto r = guarantee_params(complete_graph(4), {}, 1, Algorithm::A6);
  EXPECT_DOUBLE_EQ(r.params.beta, 0.25);
  EXPECT_EQ(r.params.gamma, 4u);
  EXPECT_EQ(r.params.mode, FaultModel::crash);
}

TEST(Guarantee, CompleteGraphsByHand) {
  for (std::size_t n : {4u, 5u, 6u}) {
    const auto g = complete_graph(n);
    const double dn = static_cast<double>(n);
    const VertexSet F{static_cast<Vertex>(n - 1)};

    // A2: every non-faulty agent has d=n-1, φ=1, so d+1-φ-f = n-2
    const auto a2 = guarantee_params(g, F, 1, Algorithm::A2);
    EXPECT_DOUBLE_EQ(a2.params.beta, std::min(1.0 / (2.0 * (dn - 2)), 1.0 / (dn - 1)));
    EXPECT_EQ(a2.params.gamma, n - 2);

    // A6 ranges over V: the faulty agent has φ=0 and keeps n, the others n-1
    const auto a6 = guarantee_params(g, F, 1, Algorithm::A6);
    EXPECT_DOUBLE_EQ(a6.params.beta, std::min(1.0 / dn, 1.0 / (dn - 1)));
    EXPECT_EQ(a6.params.gamma, n - 1);

    const auto a5 = guarantee_params(g, F, 1, Algorithm::A5);
    EXPECT_NEAR(a5.log_beta, -dn * std::log(dn), 1e-12);
    EXPECT_EQ(a5.params.gamma, check_assumption_crash(g, 1).gamma);

    const auto a1 = guarantee_params(g, F, 1, Algorithm::A1);
    const double xi = 1.0 / (2.0 * (dn + 1 - 2 - 1));
    EXPECT_NEAR(a1.log_beta, static_cast<double>(a1.tau->tau) * (dn - 1) * std::log(xi), 1e-9);
    EXPECT_EQ(a1.tau->tau, oracle_ref::byzantine_tau_formula(g, {n - 1}, 1));
  }
}

TEST(Guarantee, InfeasibleGraphStillReportsFormulas) {
  const auto r = guarantee_params(complete_graph(3), {2}, 1, Algorithm::A2);
  EXPECT_TRUE(r.infeasible_graph);
  EXPECT_DOUBLE_EQ(r.params.beta, 0.5);
  EXPECT_EQ(r.params.gamma, 1u);
}

TEST(Guarantee, Errors) {
  EXPECT_THROW(guarantee_params(complete_graph(4), {}, 1, Algorithm::A3), InvalidParams);
  EXPECT_THROW(guarantee_params(complete_graph(4), {}, 1, Algorithm::A4), InvalidParams);
  EXPECT_THROW(guarantee_params(complete_graph(4), {0, 1}, 1, Algorithm::A2), PreconditionError);
  EXPECT_FALSE(has_guarantee(Algorithm::A3));
  EXPECT_TRUE(has_guarantee(Algorithm::A6));
}

TEST(Guarantee, Json) {
  const auto j = to_json(guarantee_params(complete_graph(5), {4}, 1, Algorithm::A2));
  EXPECT_EQ(j["algorithm"], "A2");
  EXPECT_EQ(j["gamma"], 3);
  const auto y = to_json(OptimumInterval{0.2, 1.8, true}, byz(0.2, 2));
  for (const char* k : {"lo", "hi", "mode", "beta", "gamma", "exact"}) EXPECT_TRUE(y.contains(k)) << k;
}

// ---- limiting combination of a round's estimates -----------------------------------------------------------

TEST(LimitContainment, WeightedEstimatesStayInRange) {
  for (int rep = 0; rep < 6; ++rep) {
    Scenario s;
    s.graph = complete_graph(5);
    s.f = 1;
    s.algorithm = rep % 2 ? Algorithm::A2 : Algorithm::A1;
    s.rounds = 300;
    s.seed = static_cast<std::uint64_t>(rep);
    s.constraint = ConstraintInterval(-10, 10);
    for (int i = 0; i < 5; ++i) {
      s.costs.emplace_back(static_cast<double>(i % 4), 1.0);
      s.initial.push_back(static_cast<double>((i * 7 + rep) % 5) - 2.0);
    }
    s.byzantine[4] = rep % 3 ? ByzantineStrategy::seeded_split(-10, 10) : ByzantineStrategy::uniform_random(-10, 10);
    const auto tr = run(s);
    const auto bc = byzantine_chain(tr);
    const VertexSet N = tr.non_faulty();
    for (std::size_t r : {0u, 5u, 40u}) {
      const auto pi = limiting_weights(bc.chain, r, 299, ftopt::detail::iota_indices(N.size()), 1e-6);
      double y = 0.0;
      for (std::size_t k = 0; k < N.size(); ++k) y += pi.pi(static_cast<int>(k)) * tr.rounds[r].estimates[N[k]];
      double lo = 1e300, hi = -1e300;
      for (Vertex v : N) {
        lo = std::min(lo, tr.rounds[r].estimates[v]);
        hi = std::max(hi, tr.rounds[r].estimates[v]);
      }
      EXPECT_GE(y, lo - 1e-12);
      EXPECT_LE(y, hi + 1e-12);
    }
  }
}
