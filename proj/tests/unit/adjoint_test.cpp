#include <gtest/gtest.h>

#include "adjoint.hpp"

namespace rebot {
namespace {

constexpr double kTol = 1e-5;

TEST(Adjoint, Conv) {
  auto r = testing::conv_adjoint(50, 101);
  EXPECT_EQ(r.cases, 50);
  EXPECT_LT(r.max_rel_error, kTol) << r.worst;
}

TEST(Adjoint, TransposedConv) {
  auto r = testing::tconv_adjoint(50, 202);
  EXPECT_EQ(r.cases, 50);
  EXPECT_LT(r.max_rel_error, kTol) << r.worst;
}

TEST(Adjoint, Linear) {
  auto r = testing::linear_adjoint(50, 303);
  EXPECT_EQ(r.cases, 50);
  EXPECT_LT(r.max_rel_error, kTol) << r.worst;
}

}  // namespace
}  // namespace rebot
