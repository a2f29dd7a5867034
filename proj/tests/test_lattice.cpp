#include <doctest.h>

#include <algorithm>
#include <cstdlib>

#include "kamspec/error.hpp"
#include "kamspec/lattice.hpp"
#include "support.hpp"

using namespace kamspec;

TEST_SUITE("lattice") {

TEST_CASE("enumerate box and ball") {
  const auto line = enumerate_window(Window(1, 2));
  REQUIRE(line.size() == 5);
  for (int i = 0; i < 5; ++i) CHECK(line[static_cast<std::size_t>(i)] == MultiIndex{i - 2});

  CHECK(enumerate_window(Window(2, 1)).size() == 9);
  CHECK(enumerate_window(Window(3, 2)).size() == 125);

  // count the l1 ball by hand
  int count = 0;
  for (int a = -2; a <= 2; ++a)
    for (int b = -2; b <= 2; ++b)
      if (std::abs(a) + std::abs(b) <= 2) ++count;
  const auto ball = enumerate_window(Window(2, 2, WindowShape::ball));
  CHECK(ball.size() == static_cast<std::size_t>(count));
  CHECK(count == 13);
  for (const auto& n : ball) CHECK(l1_norm(n) <= 2);
}

TEST_CASE("enumeration is lexicographic, stable and symmetric") {
  const Window w(2, 3, WindowShape::ball);
  const auto a = enumerate_window(w);
  const auto b = enumerate_window(w);
  CHECK(a == b);
  CHECK(std::is_sorted(a.begin(), a.end()));
  for (const auto& n : a) {
    CHECK(w.contains(-n));
    CHECK(w.position(n) >= 0);
  }
  CHECK(w.contains(MultiIndex::zero(2)));
}

TEST_CASE("invalid windows") {
  CHECK_THROWS_AS(Window(0, 2), Error);
  CHECK_THROWS_AS(Window(1, -1), Error);
  CHECK_THROWS_AS(Window(kMaxDim + 1, 1), Error);
  try {
    Window(0, 1);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::invalid_window);
  }
}

TEST_CASE("l1 norm") {
  CHECK(l1_norm(MultiIndex{0, 0}) == 0);
  CHECK(l1_norm(MultiIndex{1, -1}) == 2);
  CHECK(l1_norm(MultiIndex{3, -2, 0}) == 5);
  CHECK(linf_norm(MultiIndex{3, -7, 0}) == 7);
}

TEST_CASE("l1 norm triangle inequality on random indices") {
  testing::Gen g(11);
  for (int t = 0; t < 500; ++t) {
    const int d = g.integer(1, 4);
    const auto j = g.index(d, 50);
    const auto k = g.index(d, 50);
    CHECK(l1_norm(j + k) <= l1_norm(j) + l1_norm(k));
    CHECK((l1_norm(j) == 0) == j.is_zero());
  }
}

TEST_CASE("shifted domain") {
  const Window w(1, 2);
  CHECK(shifted_domain(w, MultiIndex{0}).size() == 5);
  const auto one = shifted_domain(w, MultiIndex{1});
  REQUIRE(one.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(w.point(one[i]) == MultiIndex{static_cast<int>(i) - 2});
  CHECK(shifted_domain(w, MultiIndex{5}).empty());
}

TEST_CASE("shifted domain sizes are symmetric under negation") {
  testing::Gen g(12);
  for (WindowShape s : {WindowShape::box, WindowShape::ball}) {
    const Window w(2, 4, s);
    for (int t = 0; t < 100; ++t) {
      const auto k = g.index(2, 9);
      const auto dom = shifted_domain(w, k);
      CHECK(dom.size() == shifted_domain(w, -k).size());
      for (std::size_t p : dom) CHECK(w.contains(w.point(p) + k));
    }
  }
}

TEST_CASE("interior and buffer") {
  const Window w(1, 10, WindowShape::box, 6);
  CHECK(w.interior_radius() + w.buffer() == w.radius());
  CHECK(w.interior_positions().size() == 13);
  CHECK(w.is_interior(MultiIndex{-6}));
  CHECK_FALSE(w.is_interior(MultiIndex{7}));
  CHECK_THROWS_AS(Window(1, 3, WindowShape::box, 4), Error);
  CHECK(default_interior_radius(20, 1.0) == 16);
  CHECK(default_interior_radius(20, 0.3) == 6);
  CHECK(default_interior_radius(2, 1.0) == 0);
}

TEST_CASE("multi-index text round trip") {
  testing::Gen g(13);
  CHECK(MultiIndex{1, -2}.to_string() == "1;-2");
  CHECK(MultiIndex::parse("1;-2") == MultiIndex{1, -2});
  for (int t = 0; t < 100; ++t) {
    const auto k = g.index(g.integer(1, 4), 1000);
    CHECK(MultiIndex::parse(k.to_string()) == k);
  }
  CHECK_THROWS_AS(MultiIndex::parse("1;x"), Error);
}

}
