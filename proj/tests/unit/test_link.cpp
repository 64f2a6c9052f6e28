#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>

#include "sabandit/link.hpp"

using namespace sabandit;

TEST(Link, LinearValues) {
  EXPECT_DOUBLE_EQ(link_mean(LinkKind::kLinear, 1.5), 1.5);
  EXPECT_DOUBLE_EQ(link_mean_derivative(LinkKind::kLinear, -3.0), 1.0);
  EXPECT_DOUBLE_EQ(link_cumulant(LinkKind::kLinear, 2.0), 2.0);
}

TEST(Link, LogisticValues) {
  EXPECT_DOUBLE_EQ(link_mean(LinkKind::kLogistic, 0.0), 0.5);
  EXPECT_DOUBLE_EQ(link_mean_derivative(LinkKind::kLogistic, 0.0), 0.25);
  EXPECT_NEAR(link_cumulant(LinkKind::kLogistic, 0.0), std::log(2.0), 1e-15);
}

TEST(Link, CumulantDerivativeIsMean) {
  for (LinkKind link : {LinkKind::kLinear, LinkKind::kLogistic}) {
    for (double z = -30.0; z <= 30.0; z += 0.37) {
      const double h = 1e-5;
      const double fd = (link_cumulant(link, z + h) - link_cumulant(link, z - h)) / (2 * h);
      EXPECT_NEAR(fd, link_mean(link, z), 1e-8 * std::max(1.0, std::abs(z))) << z;
      const double fd2 = (link_mean(link, z + h) - link_mean(link, z - h)) / (2 * h);
      EXPECT_NEAR(fd2, link_mean_derivative(link, z), 1e-8) << z;
    }
  }
}

TEST(Link, LogisticIsIncreasingAndStable) {
  double prev = -1.0;
  for (double z = -40.0; z <= 40.0; z += 0.5) {
    const double mu = link_mean(LinkKind::kLogistic, z);
    EXPECT_GE(mu, prev);
    prev = mu;
    EXPECT_GT(link_mean_derivative(LinkKind::kLogistic, z), 0.0);
    EXPECT_LE(link_mean_derivative(LinkKind::kLogistic, z), 0.25);
  }
  EXPECT_NEAR(link_cumulant(LinkKind::kLogistic, 800.0), 800.0, 1e-9);
  EXPECT_NEAR(link_cumulant(LinkKind::kLogistic, -800.0), 0.0, 1e-12);
}

TEST(Link, ParseRoundTrip) {
  for (LinkKind link : {LinkKind::kLinear, LinkKind::kLogistic}) {
    EXPECT_EQ(parse_link(to_string(link)), link);
  }
  EXPECT_THROW(parse_link("probit"), std::invalid_argument);
}
