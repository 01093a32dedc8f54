#include <gtest/gtest.h>

#include "ridesim/pricing.hpp"

using namespace ridesim;

TEST(SoloFare, BaseAndPerKm) {
    PricingParams p;
    EXPECT_DOUBLE_EQ(solo_fare(p, 5000.0), 19.0);
}

TEST(SoloFare, MinimumClamp) {
    PricingParams p;
    EXPECT_DOUBLE_EQ(solo_fare(p, 1000.0), 10.0);
    EXPECT_DOUBLE_EQ(solo_fare(p, 2000.0), 10.0);
    EXPECT_GT(solo_fare(p, 2001.0), 10.0);
}

TEST(SoloFare, RejectsNonPositiveDistance) {
    PricingParams p;
    EXPECT_THROW(solo_fare(p, 0.0), Error);
    EXPECT_THROW(share_fare(p, -5.0), Error);
}

TEST(ShareFare, DiscountAppliedAfterClamp) {
    PricingParams p;
    p.discount = 0.2;
    EXPECT_DOUBLE_EQ(share_fare(p, 5000.0), 15.2);
    p.discount = 0.4;
    EXPECT_DOUBLE_EQ(share_fare(p, 1000.0), 6.0);
    p.discount = 0.0;
    EXPECT_EQ(share_fare(p, 3700.0), solo_fare(p, 3700.0));
}

TEST(ShareFare, NeverAboveSolo) {
    for (double theta : {0.0, 0.05, 0.2, 0.5, 0.9}) {
        PricingParams p;
        p.discount = theta;
        double prev = 0.0;
        for (double d = 100.0; d < 30000.0; d += 250.0) {
            const double s = share_fare(p, d);
            if (theta == 0.0) EXPECT_EQ(s, solo_fare(p, d));
            else EXPECT_LT(s, solo_fare(p, d));
            EXPECT_GE(s, prev);
            prev = s;
        }
    }
}

TEST(PricingParams, Validation) {
    PricingParams p;
    EXPECT_NO_THROW(p.validate());
    p.discount = 1.0;
    EXPECT_THROW(p.validate(), ConfigError);
    p.discount = 0.1;
    p.per_km = -1;
    EXPECT_THROW(p.validate(), ConfigError);
}
