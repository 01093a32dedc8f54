#pragma once

#include <algorithm>

#include "ridesim/errors.hpp"

namespace ridesim {

// Upfront fare parameters. Currency is CNY throughout.
struct PricingParams {
    double base_fare = 4.0;   // k1
    double per_km = 3.0;      // k2
    double min_fare = 10.0;
    double discount = 0.0;    // theta, ride-sharing discount in [0, 1)
    double pooled_trip_subsidy = 0.0; // paid to the platform per successfully pooled customer

    void validate() const {
        if (base_fare < 0 || per_km < 0 || min_fare < 0)
            throw ConfigError("fares must be non-negative");
        if (!(discount >= 0.0 && discount < 1.0)) throw ConfigError("discount must be in [0, 1)");
        if (pooled_trip_subsidy < 0) throw ConfigError("subsidy must be non-negative");
    }
};

inline double solo_fare(const PricingParams& p, double distance_m) {
    if (!(distance_m > 0.0)) throw Error("fare requires a positive trip distance");
    return std::max(p.min_fare, p.base_fare + p.per_km * distance_m / 1000.0);
}

// The discount is applied after the minimum-fare clamp.
inline double share_fare(const PricingParams& p, double distance_m) {
    return (1.0 - p.discount) * solo_fare(p, distance_m);
}

} // namespace ridesim
