#include <doctest.h>

#include <cmath>

#include "ifan/bench.hpp"
#include "ifan/error.hpp"

using namespace ifan;
using namespace ifan::bench;

TEST_CASE("closed-form MAC counts") {
  CHECK(macs_fac(10, 10, 4, 11) == 48400);
  CHECK(macs_iac(10, 10, 4, 17, 3) == 40800);
  CHECK(macs_iac(1, 1, 1, 17, 3) * 121 == macs_fac(1, 1, 1, 11) * 102);
  CHECK_THROWS_AS(macs_fac(0, 1, 1, 3), ContractError);
}

TEST_CASE("receptive-field sweep") {
  const auto rows = rf_sweep({8, 17, 26, 35, 44}, 3);
  const int64_t rf[] = {17, 35, 53, 71, 89};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].rf == rf[i]);
    if (i > 0) CHECK(rows[i].macs > rows[i - 1].macs);
  }
  CHECK(rf_sweep({1}, 3).front().rf == 3);
  CHECK(format_rf_table(rows, 3).find("89") != std::string::npos);
  CHECK(format_rf_csv(rows, 3).rfind("N,k,rf,macs\n", 0) == 0);
  CHECK_THROWS_AS(rf_sweep({}, 3), ContractError);
}

TEST_CASE("timed pair echoes its config") {
  const CostPair p = bench_pair(12, 10, 4, 3, 3, 5, 10);
  CHECK(p.iac.h == 12);
  CHECK(p.iac.w == 10);
  CHECK(p.iac.sets == 3);
  CHECK(p.fac.taps == 5);
  CHECK(p.iac.macs == macs_iac(12, 10, 4, 3, 3));
  CHECK(p.fac.params == 4 * 25);
  CHECK(p.iac.params == 3 * 4 * 7);
  for (const CostReport* r : {&p.iac, &p.fac}) {
    CHECK(r->wall_ns_per_call > 0);
    CHECK(std::isfinite(r->wall_ns_per_call));
  }
  CHECK(format_pair(p).find("ratio") != std::string::npos);
  CHECK_THROWS_AS(bench_pair(8, 8, 2, 2, 3, 5, 9), ContractError);
}
