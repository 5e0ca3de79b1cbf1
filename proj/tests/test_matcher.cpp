#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "csm/distance.hpp"
#include "csm/estimator.hpp"
#include "csm/matcher.hpp"
#include "csm/rng.hpp"
#include "test_util.hpp"

using namespace csm;

namespace {

std::set<double> matched_positions(const Dataset& ds, const TreatedMatch& unit) {
  std::set<double> out;
  for (const auto& mc : unit.matched) out.insert(ds.x(static_cast<std::size_t>(mc.control_row), 0));
  return out;
}

CaliperSpec spec_1d(CaliperPolicy policy, double c = 1.0, double alpha = 1.0,
                    int kmin = 1, int kmax = 1) {
  CaliperSpec spec;
  spec.pi = {1.0};
  spec.c = c;
  spec.alpha = alpha;
  spec.policy = policy;
  spec.k_min = kmin;
  spec.k_max = kmax;
  return spec;
}

}  // namespace

TEST_CASE("fixed caliper keeps controls within c and flags infeasible units") {
  const auto ds = testutil::make_1d({0.0}, {0.5, 0.9, 1.5});
  const auto spec = spec_1d(CaliperPolicy::Fixed);
  const auto dm = distance_matrix(ds, spec);
  const auto mr = radius_match(ds, dm, spec);
  REQUIRE(mr.units.size() == 1);
  CHECK(matched_positions(ds, mr.units[0]) == std::set<double>{0.5, 0.9});
  CHECK(mr.units[0].feasible);
  CHECK(mr.units[0].c_t == 1.0);

  // treated with nearest control beyond c: kept in the result, empty list
  const auto far = testutil::make_1d({0.0}, {1.5, 2.0});
  const auto mr2 = radius_match(far, distance_matrix(far, spec), spec);
  CHECK_FALSE(mr2.units[0].feasible);
  CHECK(mr2.units[0].matched.empty());
  CHECK(mr2.units[0].d_t == 1.5);
}

TEST_CASE("adaptive caliper inflates to alpha * d_t") {
  const auto ds = testutil::make_1d({0.0}, {1.5, 1.7, 2.0});
  {
    const auto spec = spec_1d(CaliperPolicy::Adaptive, 1.0, 1.0);
    const auto mr = radius_match(ds, distance_matrix(ds, spec), spec);
    CHECK(mr.units[0].c_t == 1.5);
    CHECK(matched_positions(ds, mr.units[0]) == std::set<double>{1.5});
    CHECK_FALSE(mr.units[0].feasible);
  }
  {
    const auto spec = spec_1d(CaliperPolicy::Adaptive, 1.0, 1.2);
    const auto mr = radius_match(ds, distance_matrix(ds, spec), spec);
    CHECK(mr.units[0].c_t == doctest::Approx(1.8));
    CHECK(matched_positions(ds, mr.units[0]) == std::set<double>{1.5, 1.7});
  }
  {
    // feasible unit with alpha = 1 keeps the global caliper
    const auto near = testutil::make_1d({0.0}, {0.4, 0.8, 3.0});
    const auto spec = spec_1d(CaliperPolicy::Adaptive, 1.0, 1.0);
    const auto mr = radius_match(near, distance_matrix(near, spec), spec);
    CHECK(mr.units[0].c_t == 1.0);
    CHECK(mr.units[0].feasible);
    CHECK(matched_positions(near, mr.units[0]) == std::set<double>{0.4, 0.8});
  }
}

TEST_CASE("k-bounded caliper shrinks to the k_max-th distance") {
  const auto ds = testutil::make_1d({0.0}, {0.1, 0.2, 0.3});
  const auto spec = spec_1d(CaliperPolicy::KBounded, 1.0, 1.0, 1, 2);
  const auto mr = radius_match(ds, distance_matrix(ds, spec), spec);
  CHECK(mr.units[0].c_t == doctest::Approx(0.2));
  CHECK(matched_positions(ds, mr.units[0]) == std::set<double>{0.1, 0.2});

  // sparse region: expands to reach at least one control
  const auto sparse = testutil::make_1d({0.0}, {2.5, 3.0});
  const auto mr2 = radius_match(sparse, distance_matrix(sparse, spec), spec);
  CHECK(mr2.units[0].c_t == doctest::Approx(2.5));
  CHECK(mr2.units[0].matched.size() == 1);

  // k_max larger than the pool clamps
  const auto spec_big = spec_1d(CaliperPolicy::KBounded, 1.0, 1.0, 1, 50);
  const auto mr3 = radius_match(ds, distance_matrix(ds, spec_big), spec_big);
  CHECK(mr3.units[0].matched.size() == 3);
}

TEST_CASE("one_nn keeps exact ties and coincident controls") {
  {
    const auto ds = testutil::make_1d({0.0}, {2.0, 5.0});
    const auto mr = one_nn_match(ds, distance_matrix(ds, spec_1d(CaliperPolicy::Fixed)));
    CHECK(matched_positions(ds, mr.units[0]) == std::set<double>{2.0});
    CHECK(mr.units[0].c_t == 2.0);
  }
  {
    const auto ds = testutil::make_1d({0.0}, {2.0, -2.0, 3.0});
    const auto mr = one_nn_match(ds, distance_matrix(ds, spec_1d(CaliperPolicy::Fixed)));
    CHECK(mr.units[0].matched.size() == 2);  // both at distance exactly 2
  }
  {
    const auto ds = testutil::make_1d({1.0}, {1.0, 2.0});
    const auto mr = one_nn_match(ds, distance_matrix(ds, spec_1d(CaliperPolicy::Fixed)));
    CHECK(mr.units[0].d_t == 0.0);
    CHECK(matched_positions(ds, mr.units[0]) == std::set<double>{1.0});
  }
}

TEST_CASE("CEM bins on equal-width cuts of the observed range") {
  // range [0,10] pinned by treated 0.0 and control 10.0; five bins of width 2
  const auto ds = testutil::make_1d({1.9, 2.1, 5.0, 0.0}, {2.1, 3.9, 10.0, 5.0});
  const auto mr = cem_match(ds, 5);
  REQUIRE(mr.units.size() == 4);
  // treated 1.9 (bin 0) does not match control 2.1 (bin 1)
  CHECK(matched_positions(ds, mr.units[0]).empty());
  CHECK_FALSE(mr.units[0].feasible);
  // treated 2.1 matches controls 2.1 and 3.9 despite the 1.8 gap
  CHECK(matched_positions(ds, mr.units[1]) == std::set<double>{2.1, 3.9});
  // identical values always share a stratum
  CHECK(matched_positions(ds, mr.units[2]).count(5.0) == 1);
  // top bin is right-closed: max-valued control binned, not dropped
  const auto top = testutil::make_1d({9.5}, {10.0, 0.0});
  const auto mr_top = cem_match(top, 5);
  CHECK(matched_positions(top, mr_top.units[0]) == std::set<double>{10.0});
}

TEST_CASE("CEM keeps binary covariates exact and rejects constant columns") {
  // treated (0.5, 1): controls in its x1 bin are (0.6, 0) and (0.55, 1); only
  // the second shares the binary indicator
  const auto ds = testutil::make_dataset(
      {{0.5, 1.0}, {0.6, 0.0}, {0.55, 1.0}, {5.0, 0.0}}, {1, 0, 0, 0}, {0, 0, 0, 0});
  const auto mr = cem_match(ds, 5);
  REQUIRE(mr.units.size() == 1);
  REQUIRE(mr.units[0].matched.size() == 1);
  CHECK(ds.x(static_cast<std::size_t>(mr.units[0].matched[0].control_row), 0) == 0.55);
  CHECK(ds.x(static_cast<std::size_t>(mr.units[0].matched[0].control_row), 1) == 1.0);

  const auto bad = testutil::make_dataset({{5.0}, {5.0}}, {1, 0}, {0, 0});
  CHECK_THROWS_AS(cem_match(bad, 5), Error);
}

TEST_CASE("radius matching with caliper pi/2 is twice as tight as CEM width pi") {
  // 1D instance on [0, 5] with unit coarsening: CEM matches t=0.95 to c=0.05
  // (same bin, gap 0.9 > 1/2) but not to c=1.05 (adjacent bin, gap 0.1).
  const auto ds = testutil::make_1d({0.95}, {0.05, 1.05, 0.0, 5.0});
  const double pi_width = 1.0;

  const auto cem = cem_match(ds, 5);  // range [0,5] / 5 bins = width 1
  const auto cem_set = matched_positions(ds, cem.units[0]);
  CHECK(cem_set == std::set<double>{0.05, 0.0});
  bool cem_has_wide_pair = false;
  for (double pos : cem_set)
    cem_has_wide_pair = cem_has_wide_pair || std::fabs(0.95 - pos) > pi_width / 2.0;
  CHECK(cem_has_wide_pair);  // the 0.9 gap survives CEM

  // radius matching with covariate caliper pi/2 admits no such pair
  CaliperSpec spec;
  spec.pi = {pi_width / 2.0};
  spec.c = 1.0;
  spec.policy = CaliperPolicy::Fixed;
  const auto mr = radius_match(ds, distance_matrix(ds, spec), spec);
  const auto radius_set = matched_positions(ds, mr.units[0]);
  CHECK(radius_set == std::set<double>{1.05});  // the local unit CEM missed
  for (const auto& mc : mr.units[0].matched)
    CHECK(std::fabs(0.95 - ds.x(static_cast<std::size_t>(mc.control_row), 0)) <=
          pi_width / 2.0);
}

TEST_CASE("exact-duplicate dataset is fully feasible at the global caliper") {
  const auto ds = testutil::make_1d({0.2, 0.5, 0.9}, {0.2, 0.5, 0.9});
  const auto spec = spec_1d(CaliperPolicy::Fixed);
  const auto mr = radius_match(ds, distance_matrix(ds, spec), spec);
  CHECK(mr.feasible_count() == 3);
  for (const auto& unit : mr.units) {
    CHECK(unit.c_t == spec.c);
    CHECK(unit.d_t == 0.0);
  }
}

TEST_CASE("feasible_subsets orders nested subsets by c_t") {
  {  // all feasible -> a single subset
    const auto ds = testutil::make_1d({0.0, 0.1}, {0.05, 0.2});
    const auto spec = spec_1d(CaliperPolicy::Adaptive);
    const auto mr = radius_match(ds, distance_matrix(ds, spec), spec);
    CHECK(feasible_subsets(mr).size() == 1);
  }
  {  // c_t values {1, 1, 1.4, 2.0} -> sizes 2, 3, 4
    const auto ds =
        testutil::make_1d({0.0, 0.1, 10.0, 20.0}, {0.05, 0.2, 11.4, 22.0});
    const auto spec = spec_1d(CaliperPolicy::Adaptive);
    const auto mr = radius_match(ds, distance_matrix(ds, spec), spec);
    const auto subsets = feasible_subsets(mr);
    REQUIRE(subsets.size() == 3);
    CHECK(subsets[0].size() == 2);
    CHECK(subsets[1].size() == 3);
    CHECK(subsets[2].size() == 4);
    // the c_t = 1.4 unit (row 2) joins before the c_t = 2.0 unit (row 3)
    CHECK(std::count(subsets[1].begin(), subsets[1].end(), 2) == 1);
    CHECK(std::count(subsets[1].begin(), subsets[1].end(), 3) == 0);
  }
  {  // nobody feasible -> sizes 1..n_T
    const auto ds = testutil::make_1d({0.0, 10.0}, {5.0});
    const auto spec = spec_1d(CaliperPolicy::Adaptive);
    const auto mr = radius_match(ds, distance_matrix(ds, spec), spec);
    const auto subsets = feasible_subsets(mr);
    REQUIRE(subsets.size() == 2);
    CHECK(subsets[0].size() == 1);
    CHECK(subsets[1].size() == 2);
  }
}

TEST_CASE("re-sorting the input rows leaves matches and estimates unchanged") {
  Rng rng(660);
  for (int rep = 0; rep < 20; ++rep) {
    auto inst = testutil::random_instance(rng, 4, 60);
    inst.spec.policy = CaliperPolicy::Adaptive;

    // reversed-row copy of the same dataset
    Dataset rev;
    rev.column_names = inst.ds.column_names;
    const std::size_t n = inst.ds.n();
    rev.x = Matrix(n, inst.ds.p());
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t src = n - 1 - i;
      rev.ids.push_back(inst.ds.ids[src]);
      rev.z.push_back(inst.ds.z[src]);
      rev.y.push_back(inst.ds.y[src]);
      for (std::size_t k = 0; k < inst.ds.p(); ++k) rev.x(i, k) = inst.ds.x(src, k);
    }
    rev.validate();

    auto run = [&](const Dataset& ds) {
      const auto mr = radius_match(ds, distance_matrix(ds, inst.spec), inst.spec);
      const auto ws = assign_weights(mr, ds, inst.spec, WeightScheme::Scm);
      struct Out {
        std::vector<std::vector<std::string>> matched_ids;
        std::vector<double> imbalances;
        double tau;
      } out;
      for (const auto& unit : mr.units) {
        std::vector<std::string> ids;
        for (const auto& mc : unit.matched)
          ids.push_back(ds.ids[static_cast<std::size_t>(mc.control_row)]);
        out.matched_ids.push_back(ids);
      }
      for (const auto& unit : ws.units) out.imbalances.push_back(unit.imbalance);
      out.tau = att_point_estimate(ds, ws, mr.all_treated_rows());
      return out;
    };
    const auto a = run(inst.ds);
    auto b = run(rev);
    // treated units come out in row order, which reversed; realign by reversing
    std::reverse(b.matched_ids.begin(), b.matched_ids.end());
    std::reverse(b.imbalances.begin(), b.imbalances.end());
    CHECK(a.matched_ids == b.matched_ids);  // id-level matches identical
    for (std::size_t i = 0; i < a.imbalances.size(); ++i)
      CHECK(a.imbalances[i] == doctest::Approx(b.imbalances[i]).epsilon(1e-12));
    CHECK(a.tau == doctest::Approx(b.tau).epsilon(1e-12));
  }
}

TEST_CASE("radius matching invariants on random instances") {
  Rng rng(505);
  for (int rep = 0; rep < 120; ++rep) {
    auto inst = testutil::random_instance(rng);
    for (auto policy :
         {CaliperPolicy::Fixed, CaliperPolicy::Adaptive, CaliperPolicy::KBounded}) {
      inst.spec.policy = policy;
      inst.spec.alpha = 1.0 + rng.uniform01();
      inst.spec.k_min = 1;
      inst.spec.k_max = 1 + static_cast<int>(rng.below(6));
      const auto dm = distance_matrix(inst.ds, inst.spec);
      const auto mr = radius_match(inst.ds, dm, inst.spec);
      CHECK(mr.units.size() == inst.ds.n_treated());
      for (const auto& unit : mr.units) {
        for (const auto& mc : unit.matched) CHECK(mc.distance <= unit.c_t);
        if (policy == CaliperPolicy::Fixed) {
          CHECK(unit.c_t == inst.spec.c);
          if (unit.feasible) CHECK_FALSE(unit.matched.empty());
          else CHECK(unit.matched.empty());
        } else {
          CHECK_FALSE(unit.matched.empty());  // never empty
          if (policy == CaliperPolicy::Adaptive) {
            CHECK(unit.c_t >= inst.spec.c);
            if (unit.d_t <= inst.spec.c && inst.spec.alpha * unit.d_t <= inst.spec.c)
              CHECK(unit.c_t == inst.spec.c);
          }
        }
        CHECK(unit.feasible == (unit.d_t <= inst.spec.c));
      }
    }
  }
}
