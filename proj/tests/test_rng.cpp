#include <doctest.h>

#include <cmath>
#include <set>

#include "oracles.hpp"
#include "qsim/rng.hpp"

using qsim::CounterRng;

TEST_CASE("key 0 reproduces the reference SplitMix64 sequence") {
  CounterRng rng(0);
  oracle::SplitMix64 ref{0};
  for (int i = 0; i < 16; ++i) CHECK(rng.next_u64() == ref.next());
  // Published first output of SplitMix64 seeded with 0.
  CHECK(CounterRng(0).next_u64() == 0xE220A8397B1DCDAFULL);
}

TEST_CASE("frozen substream keys and first draws") {
  CHECK(qsim::substream_key(0, 0) == 0x399CB48BC72E8D68ULL);
  CHECK(qsim::substream_key(20240917, 0) == 0xD8C8883C4C52A666ULL);
  CHECK(qsim::substream_key(20240917, 1) == 0xDC7B191037673DEBULL);
  CHECK(qsim::substream_key(1, 7) == 0xD81A4CC77ACD0755ULL);

  CounterRng rng(20240917);
  CHECK(rng.next_u64() == 0xECC0BDD111346B50ULL);
  CHECK(rng.next_u64() == 0xD42D057AD0753E3DULL);
  CHECK(rng.next_u64() == 0x36CC4EA32E1C7E53ULL);
  CounterRng u(20240917);
  CHECK(u.uniform() == 0.9248160014551147);
  CHECK(u.uniform() == 0.8288119721259662);
}

TEST_CASE("a stream can be resumed from its counter") {
  CounterRng a(42);
  for (int i = 0; i < 5; ++i) a.next_u64();
  CounterRng b(42, a.counter());
  for (int i = 0; i < 5; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("substreams are deterministic and distinct") {
  const CounterRng base(7);
  std::set<std::uint64_t> keys;
  for (std::uint64_t i = 0; i < 1000; ++i) keys.insert(base.substream(i).key());
  CHECK(keys.size() == 1000);
  CHECK(base.substream(3).key() == CounterRng(7).substream(3).key());
}

TEST_CASE("uniform lies in [0, 1) and normals have unit variance") {
  CounterRng rng(99);
  double mean = 0.0, m2 = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
  }
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    REQUIRE(std::isfinite(x));
    mean += x;
    m2 += x * x;
  }
  mean /= n;
  CHECK(std::abs(mean) < 0.02);
  CHECK(std::abs(m2 / n - 1.0) < 0.03);

  double c2 = 0.0;
  for (int i = 0; i < n; ++i) c2 += std::norm(rng.complex_normal());
  CHECK(std::abs(c2 / n - 1.0) < 0.03);
}
