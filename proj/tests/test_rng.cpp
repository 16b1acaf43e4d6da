#include <doctest.h>

#include <set>

#include "groundcheck/rng.hpp"

using groundcheck::Rng;

TEST_CASE("rng is seed deterministic") {
  Rng a(1), b(1), c(2);
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
  }
  CHECK(a.next_u64() != c.next_u64());
}

TEST_CASE("state save and load resumes the stream") {
  Rng a(7);
  a.next_u64();
  a.next_u64();
  const std::string state = a.save_state();
  Rng b(0);
  b.load_state(state);
  for (int i = 0; i < 10; ++i) CHECK(a.next_u64() == b.next_u64());
  CHECK_THROWS(b.load_state("nope"));
}

TEST_CASE("bounded draws stay in range") {
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    CHECK(rng.bounded(7) < 7);
  }
  CHECK(rng.bounded(1) == 0);
}

TEST_CASE("uniform stays in the half-open unit interval") {
  Rng rng(5);
  for (int i = 0; i < 1000; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("shuffle is a permutation") {
  Rng rng(11);
  std::vector<int> v{0, 1, 2, 3, 4, 5, 6, 7};
  rng.shuffle(v);
  CHECK(std::set<int>(v.begin(), v.end()).size() == 8);
}

TEST_CASE("hash64 differs by seed and text") {
  CHECK(Rng::hash64("a") != Rng::hash64("b"));
  CHECK(Rng::hash64("a", 1) != Rng::hash64("a", 2));
  CHECK(Rng::hash64("a") == Rng::hash64("a"));
}
