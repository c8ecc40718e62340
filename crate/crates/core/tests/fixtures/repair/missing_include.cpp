#include "geo.h"
#include "geometry_v2.h"
#include <gtest/gtest.h>

TEST(Manhattan, Diagonal) {
  EXPECT_EQ(geo::Manhattan(geo::Point{0, 0}, geo::Point{2, 2}), 4);
}
