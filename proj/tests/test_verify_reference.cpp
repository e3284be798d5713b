// Reference-scale verification runs on the bundled fourth-order system.
// Slower than the other unit suites (a couple of minutes).

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fgbfi/integrate.hpp"
#include "test_support.hpp"

using namespace fgbfi;
using namespace fgbfi::testing;

TEST_CASE("forward refinement is stable over T = 10 from the cycle point") {
  // refining eps_pw from 1e-20 to 1e-25 moves the solution by less than
  // 1e-12 across the whole interval
  auto ctx = make_context(128);
  auto sys = make_dong(ctx);
  RVec x0 = vec_of({"6.2355509634533960831", "2.0140572482317481452", "35.4929323328531102196",
                    "-43.5507482101916799734"},
                   ctx);
  IntegrationConfig cfg(ctx, parse_decimal("1e-20", ctx), parse_decimal("1e-3", ctx),
                        Real::of(10, ctx), +1);
  auto chk = verify_forward(sys, x0, cfg, parse_decimal("1e-12", ctx));
  CHECK(chk.eps_low == parse_decimal("1e-25", ctx));
  CHECK(chk.pass);
  CHECK(chk.delta_a.to_double() < 1e-12);
  MESSAGE("delta_a = ", chk.delta_a.to_double());
}

TEST_CASE("transient round trip passes all three criteria at T = 1") {
  auto ctx = make_context(128);
  auto sys = make_dong(ctx);
  RVec x0 = vec_of({"10", "-27.2011", "10", "10"}, ctx);
  IntegrationConfig cfg(ctx, parse_decimal("1e-20", ctx), parse_decimal("1e-3", ctx),
                        Real::of(1, ctx), +1);

  auto fwd = verify_forward(sys, x0, cfg, parse_decimal("1e-12", ctx));
  CHECK(fwd.pass);

  auto bwd = verify_backward(sys, x0, cfg, parse_decimal("1e-10", ctx));
  CHECK(bwd.pass);

  auto rep = compare_configurations(bwd.forward_stats, bwd.backward_stats, cfg.T, 0.05);
  REQUIRE(rep.checks.size() == 4);
  CHECK(rep.checks[0].pass);  // N vs N_hat
  CHECK(rep.checks[1].pass);  // n_max fwd vs bwd
  CHECK(rep.checks[3].pass);  // t at max step vs T
  // the t@max-degree anchor (checks[2]) is integer-quantized and ties across
  // regions of the arc, so it is reported but not gated here; the T=5
  // high-precision round trip asserts all four
  MESSAGE(rep.checks[2].name, ": ", rep.checks[2].lhs, " vs ", rep.checks[2].rhs, " (rel ",
          rep.checks[2].rel_err, ")");
}
