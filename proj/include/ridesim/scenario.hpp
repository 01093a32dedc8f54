#pragma once

// Closed-form revenue-per-unit-time comparison of one pooled pair against solo service,
// and carbon-credit valuation of saved emissions.

#include <algorithm>
#include <cmath>

#include "ridesim/errors.hpp"

namespace ridesim::scenario {

// Solo: the vehicle drives x1 to the pickup, then the trip L1, earning w1.
inline double revenue_rate_solo(double w1, double x1_m, double l1_m, double speed_mps) {
    const double hours = (x1_m + l1_m) / speed_mps / 3600.0;
    if (!(hours > 0.0)) throw Error("revenue rate with zero travel time");
    return w1 / hours;
}

// Shared: legs x1..x4 serve both customers at (1 - theta)(w1 + w2).
inline double revenue_rate_share(double theta, double w1, double w2, double x1_m, double x2_m, double x3_m,
                                 double x4_m, double speed_mps) {
    const double hours = (x1_m + x2_m + x3_m + x4_m) / speed_mps / 3600.0;
    if (!(hours > 0.0)) throw Error("revenue rate with zero travel time");
    return (1.0 - theta) * (w1 + w2) / hours;
}

// mu_share / mu_solo from the discount, the fare ratio w2/w1 and the distance ratio
// (x1+x2+x3+x4)/(x1+L1). Pooling loses no revenue when the result is >= 1.
inline double revenue_ratio(double theta, double fare_ratio, double dist_ratio) {
    return (1.0 - theta) * (1.0 + fare_ratio) / dist_ratio;
}

// Discount at which revenue_ratio == 1, clamped to [0, 1).
inline double breakeven_discount(double fare_ratio, double dist_ratio) {
    const double t = 1.0 - dist_ratio / (1.0 + fare_ratio);
    return std::clamp(t, 0.0, std::nextafter(1.0, 0.0));
}

// grams of CO2 at a price per metric ton.
inline double carbon_credit_value(double saved_co2_g, double price_per_ton) {
    return saved_co2_g * price_per_ton / 1e6;
}

} // namespace ridesim::scenario
