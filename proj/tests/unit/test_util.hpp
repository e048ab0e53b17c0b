#pragma once

#include "silmpc/scenario_data.hpp"

namespace silmpc::testing {

// Frame with constant disturbances and a proper calendar.
inline TimeSeriesFrame constant_frame(std::int64_t n, double theta_air = 10.0, double p_pv = 0.0,
                                      double p_dem = -254.0, double p_s1 = 20.0, double p_s2 = 12.0,
                                      CalendarClock clock = {}) {
    TimeSeriesFrame f;
    f.clock = clock;
    for (std::int64_t k = 0; k < n; ++k) {
        f.theta_air.push_back(theta_air);
        f.p_pv.push_back(p_pv);
        f.p_dem.push_back(p_dem);
        f.p_server1.push_back(p_s1);
        f.p_server2.push_back(p_s2);
        f.tod.push_back(tod(clock, k));
        f.dow.push_back(dow(clock, k));
    }
    return f;
}

}  // namespace silmpc::testing
