#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "depthstill/metrics.hpp"
#include "depthstill/sampler.hpp"

using namespace depthstill;
using Catch::Matchers::WithinAbs;

namespace {

FlowField constant_flow(int w, int h, double u, double v) {
  FlowField f = FlowField::zeros(w, h);
  std::fill(f.u.begin(), f.u.end(), u);
  std::fill(f.v.begin(), f.v.end(), v);
  std::fill(f.valid.begin(), f.valid.end(), 1);
  return f;
}

}  // namespace

TEST_CASE("a perfect prediction scores zero everywhere", "[metrics]") {
  const FlowField gt = constant_flow(8, 6, 2.0, -1.0);
  const FlowErrorReport r = evaluate(gt, gt);
  CHECK(r.epe == 0.0);
  CHECK(r.rate_gt3 == 0.0);
  CHECK(r.fl == 0.0);
  CHECK(r.n_valid == 48u);
}

TEST_CASE("hand-computed error statistics", "[metrics]") {
  // gt has magnitude 100 everywhere; four prediction pixels with endpoint
  // errors 0, 3, 5 and 6. Errors above 3 px: two. Of those, 5/100 = 5% is
  // not strictly above the relative threshold, 6/100 = 6% is.
  FlowField gt = constant_flow(4, 1, 100.0, 0.0);
  FlowField pred = gt;
  pred.u = {100.0, 100.0, 100.0, 100.0};
  pred.v = {0.0, 3.0, 5.0, 6.0};
  const FlowErrorReport r = evaluate(pred, gt);
  CHECK_THAT(r.epe, WithinAbs((0.0 + 3.0 + 5.0 + 6.0) / 4.0, 1e-12));
  CHECK_THAT(r.rate_gt3, WithinAbs(0.5, 1e-12));
  CHECK_THAT(r.fl, WithinAbs(0.25, 1e-12));
  CHECK(r.n_valid == 4u);
}

TEST_CASE("errors above 3 px on tiny motions always count as outliers", "[metrics]") {
  // With near-zero gt magnitude the relative test err/max(mag, eps) is huge,
  // so the guard epsilon cannot divide by zero or mask the outlier.
  const FlowField gt = constant_flow(2, 1, 0.0, 0.0);
  const FlowField pred = constant_flow(2, 1, 4.0, 0.0);
  const FlowErrorReport r = evaluate(pred, gt);
  CHECK(r.rate_gt3 == 1.0);
  CHECK(r.fl == 1.0);
}

TEST_CASE("only gt-valid pixels participate", "[metrics]") {
  FlowField gt = constant_flow(3, 1, 1.0, 0.0);
  gt.valid = {1, 0, 1};
  FlowField pred = constant_flow(3, 1, 1.0, 0.0);
  pred.u[1] = 1000.0;  // ignored: gt marks it invalid
  const FlowErrorReport r = evaluate(pred, gt);
  CHECK(r.epe == 0.0);
  CHECK(r.n_valid == 2u);
}

TEST_CASE("endpoint error scales linearly with the perturbation", "[metrics]") {
  const FlowField gt = constant_flow(5, 5, 1.0, 2.0);
  for (double scale : {0.5, 1.0, 2.0}) {
    FlowField pred = gt;
    for (double& u : pred.u) u += scale;
    const FlowErrorReport r = evaluate(pred, gt);
    CHECK_THAT(r.epe, WithinAbs(scale, 1e-12));
  }
}

TEST_CASE("the strict outlier fraction never exceeds the loose one", "[metrics]") {
  SplitMix64 rng(70);
  for (int trial = 0; trial < 200; ++trial) {
    FlowField gt = FlowField::zeros(12, 12);
    FlowField pred = FlowField::zeros(12, 12);
    for (size_t i = 0; i < gt.size(); ++i) {
      gt.u[i] = rng.uniform(-80.0, 80.0);
      gt.v[i] = rng.uniform(-80.0, 80.0);
      gt.valid[i] = rng.next_double() < 0.9;
      pred.u[i] = gt.u[i] + rng.uniform(-8.0, 8.0);
      pred.v[i] = gt.v[i] + rng.uniform(-8.0, 8.0);
      pred.valid[i] = 1;
    }
    if (std::none_of(gt.valid.begin(), gt.valid.end(), [](uint8_t v) { return v != 0; })) continue;
    const FlowErrorReport r = evaluate(pred, gt);
    REQUIRE(r.fl <= r.rate_gt3);
    REQUIRE(r.epe >= 0.0);
    REQUIRE(r.rate_gt3 <= 1.0);
  }
}

TEST_CASE("mismatched dimensions and empty ground truth are errors", "[metrics]") {
  const FlowField a = constant_flow(4, 4, 0.0, 0.0);
  const FlowField b = constant_flow(5, 4, 0.0, 0.0);
  CHECK_THROWS_AS(evaluate(a, b), std::invalid_argument);

  FlowField gt = constant_flow(4, 4, 0.0, 0.0);
  std::fill(gt.valid.begin(), gt.valid.end(), 0);
  CHECK_THROWS_AS(evaluate(a, gt), std::runtime_error);
}

TEST_CASE("the report line is stable and parseable", "[metrics]") {
  FlowErrorReport r;
  r.epe = 1.5;
  r.rate_gt3 = 0.25;
  r.fl = 0.125;
  r.n_valid = 42;
  CHECK(report_line(r) == "epe=1.500000 gt3=0.250000 fl=0.125000 n=42");
}
