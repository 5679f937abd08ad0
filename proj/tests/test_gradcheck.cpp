#include <doctest.h>

#include <chrono>

#include "ifan/error.hpp"
#include "ifan/gradcheck.hpp"

using namespace ifan;

TEST_CASE("every operator passes the finite-difference suite") {
  const auto t0 = std::chrono::steady_clock::now();
  const auto results = gradcheck_suite();
  CHECK(results.size() == gradcheck_ops().size());
  for (const auto& r : results) {
    CAPTURE(r.op);
    CAPTURE(r.max_rel_error);
    CHECK(r.passed);
    CHECK(r.entries > 0);
  }
  CHECK(std::chrono::steady_clock::now() - t0 < std::chrono::seconds(60));
}

TEST_CASE("other seeds pass too") {
  for (uint64_t seed : {1u, 2u, 3u})
    for (const auto& r : gradcheck_suite(seed)) {
      CAPTURE(r.op);
      CHECK(r.passed);
    }
}

TEST_CASE("unknown operator") { CHECK_THROWS_AS(finite_diff_check("softmax"), ContractError); }

TEST_CASE("a wrong tolerance is reported as failure") {
  CHECK_FALSE(finite_diff_check("fac", 7, 1e-5, 0.0).passed);
}
