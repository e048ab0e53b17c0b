#pragma once

// Simulated calendar, synthetic weather/load generation and CSV ingestion.
//
// The calendar uses fixed 365-day years (no leap days, no DST). Step 0 of a
// clock is Jan 1, 00:00 of `year`; `start_weekday` is the weekday of that
// instant with Monday = 0.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "silmpc/building_model.hpp"

namespace silmpc {

inline constexpr int kDaysPerYear = 365;
inline constexpr int kMonthsPerYear = 12;

struct CalendarClock {
    int year = 2019;
    int start_weekday = 0;
    double ts = 0.5;

    int steps_per_day() const;
    std::int64_t steps_per_year() const { return static_cast<std::int64_t>(steps_per_day()) * kDaysPerYear; }

    void validate() const;

    bool operator==(const CalendarClock&) const = default;
};

// Hour of day in [0, 24).
double tod(const CalendarClock& clock, std::int64_t k);
// Day of week in 0..6, Monday = 0.
int dow(const CalendarClock& clock, std::int64_t k);
// Day of year in 0..364.
int day_of_year(const CalendarClock& clock, std::int64_t k);

// Months counted from Jan of the clock's year; negative steps fall into
// earlier years (floor semantics), so index -1 is December of year-1.
std::int64_t month_index(const CalendarClock& clock, std::int64_t k);
std::int64_t month_start_step(const CalendarClock& clock, std::int64_t month_index);

// "YYYY-MM-DDTHH:MM:SS" for step k.
std::string iso_timestamp(const CalendarClock& clock, std::int64_t k);

struct TimeSeriesFrame {
    CalendarClock clock;
    std::int64_t start_step = 0;  // calendar step of row 0
    std::vector<double> theta_air;
    std::vector<double> p_pv;
    std::vector<double> p_dem;
    std::vector<double> p_server1;
    std::vector<double> p_server2;
    std::vector<double> tod;
    std::vector<int> dow;

    std::size_t size() const { return theta_air.size(); }
    std::int64_t length() const { return static_cast<std::int64_t>(size()); }

    Disturbance disturbance(std::int64_t k, const Eigen::VectorXd& q_other) const;

    // Throws ParameterError naming the first offending row.
    void validate() const;

    bool operator==(const TimeSeriesFrame&) const = default;
};

struct GeneratorConfig {
    std::uint64_t seed = 42;

    double temp_mean = 10.0;            // degC
    double temp_annual_amplitude = 9.0;
    double temp_coldest_day = 15.0;     // day of year of the annual minimum
    double temp_diurnal_amplitude = 4.0;
    double temp_peak_hour = 15.0;
    double temp_noise_std = 1.5;        // stationary std of the AR(1) term
    double temp_ar = 0.9;

    double pv_capacity = 750.0;         // kWp
    double pv_system_efficiency = 0.85;
    double cloud_ar = 0.97;
    double cloud_noise_std = 1.2;       // std of the latent cloud process

    double demand_base = 190.0;         // kW, excluding servers
    double demand_workday_bump = 90.0;  // kW on workdays during [work_start, work_end)
    double work_start = 7.0;
    double work_end = 19.0;
    double demand_noise_std = 10.0;
    double demand_ar = 0.8;

    double server1_base = 20.0;  // kW
    double server2_base = 12.0;
    double server_drift_amplitude = 3.0;
    double server_noise_std = 0.8;
    double server_ar = 0.995;

    void validate() const;
};

// Deterministic in (cfg, clock, n_steps); the first m rows of a longer span
// equal a span of length m.
TimeSeriesFrame generate_span(const GeneratorConfig& cfg, const CalendarClock& clock, std::int64_t n_steps);

// Header: timestamp,theta_air_C,p_pv_kW,p_dem_kW,p_server1_kW,p_server2_kW
void write_csv(const TimeSeriesFrame& frame, const std::filesystem::path& path);
void write_csv(const TimeSeriesFrame& frame, std::ostream& out);
TimeSeriesFrame load_csv(const std::filesystem::path& path);
TimeSeriesFrame parse_csv(std::istream& in);

}  // namespace silmpc
