// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <set>

#include "rangesim/rng.hpp"
#include "rangesim/types.hpp"

using namespace rangesim;

TEST(Ipv4, ParsesAndPrints) {
  const auto a = Ipv4::parse("10.0.2.38");
  EXPECT_EQ(a, Ipv4(10, 0, 2, 38));
  EXPECT_EQ(a.str(), "10.0.2.38");
  EXPECT_EQ(a.octet(3), 38);
  EXPECT_EQ(Ipv4::parse("255.255.255.255").value(), 0xFFFFFFFFu);
}

TEST(Ipv4, RejectsMalformed) {
  for (const char* bad : {"", "10.0.2", "10.0.2.256", "10..2.3", "10.0.2.3.4", "a.b.c.d", "10.0.2.-1"}) {
    EXPECT_THROW(Ipv4::parse(bad), ParseError) << bad;
  }
}

TEST(Cidr, HostRange) {
  const auto c = Cidr::parse("10.0.2.77/24");
  EXPECT_EQ(c.network(), Ipv4(10, 0, 2, 0));
  EXPECT_EQ(c.host_count(), 254u);
  EXPECT_EQ(c.first_host(), Ipv4(10, 0, 2, 1));
  EXPECT_EQ(c.last_host(), Ipv4(10, 0, 2, 254));
  EXPECT_EQ(c.broadcast(), Ipv4(10, 0, 2, 255));
  EXPECT_EQ(c.str(), "10.0.2.0/24");
  EXPECT_EQ(Cidr::parse("1.2.3.4/32").host_count(), 1u);
  EXPECT_EQ(Cidr::parse("1.2.3.4/31").host_count(), 2u);
}

TEST(Cidr, ContainmentAndOverlap) {
  const auto lan = Cidr::parse("10.0.2.0/24");
  EXPECT_TRUE(lan.contains(Ipv4(10, 0, 2, 0)));
  EXPECT_TRUE(lan.contains(Ipv4(10, 0, 2, 255)));
  EXPECT_FALSE(lan.contains(Ipv4(10, 0, 3, 1)));
  EXPECT_TRUE(lan.overlaps(Cidr::parse("10.0.0.0/16")));
  EXPECT_TRUE(Cidr::parse("10.0.0.0/16").overlaps(lan));
  EXPECT_FALSE(lan.overlaps(Cidr::parse("10.0.1.0/24")));
  EXPECT_THROW(Cidr::parse("10.0.2.0"), ParseError);
  EXPECT_THROW(Cidr::parse("10.0.2.0/33"), ParseError);
}

TEST(Rng, SameSeedSameSequence) {
  Rng a(42), b(42), c(43);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next();
    EXPECT_EQ(x, b.next());
    differs = differs || x != c.next();
  }
  EXPECT_TRUE(differs);
}

TEST(Rng, DrawsStayInRange) {
  Rng r(7);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 2000; ++i) {
    const auto x = r.below(10);
    ASSERT_LT(x, 10u);
    seen.insert(x);
    const auto y = r.between(-3, 3);
    ASSERT_GE(y, -3);
    ASSERT_LE(y, 3);
    const double u = r.unit();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    ASSERT_GE(r.exponential(2.0), 0.0);
  }
  EXPECT_EQ(seen.size(), 10u);
}

TEST(Rng, ShuffleIsAPermutation) {
  std::vector<int> v(50);
  for (int i = 0; i < 50; ++i) v[static_cast<std::size_t>(i)] = i;
  Rng r(3);
  r.shuffle(v);
  std::set<int> s(v.begin(), v.end());
  EXPECT_EQ(s.size(), 50u);
  EXPECT_EQ(*s.begin(), 0);
  EXPECT_EQ(*s.rbegin(), 49);
}
