#include "silmpc/scenario_data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "silmpc/errors.hpp"
#include "silmpc/format.hpp"
#include "silmpc/rng.hpp"

namespace silmpc {
namespace {

constexpr std::array<int, kMonthsPerYear> kMonthDays = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};

constexpr std::array<int, kMonthsPerYear + 1> month_offsets() {
    std::array<int, kMonthsPerYear + 1> off{};
    for (int m = 0; m < kMonthsPerYear; ++m) off[m + 1] = off[m] + kMonthDays[m];
    return off;
}
constexpr auto kMonthOffsets = month_offsets();

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

std::int64_t floor_mod(std::int64_t a, std::int64_t b) { return a - floor_div(a, b) * b; }

// Days since 1970-01-01 in the proleptic Gregorian calendar.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = floor_div(y, 400);
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

int weekday_monday0(std::int64_t y, unsigned m, unsigned d) {
    // 1970-01-01 was a Thursday (Monday=0 -> 3).
    return static_cast<int>(floor_mod(days_from_civil(y, m, d) + 3, 7));
}

// AR(1) with stationary standard deviation `stddev`.
struct Ar1 {
    double coeff;
    double innovation_std;
    double value = 0.0;

    Ar1(double phi, double stddev) : coeff(phi), innovation_std(stddev * std::sqrt(1.0 - phi * phi)) {}

    double next(double shock) {
        value = coeff * value + innovation_std * shock;
        return value;
    }
};

enum Stream : std::uint64_t { kTemp = 1, kCloud, kDemand, kServer1, kServer2 };

const char* const kCsvHeader = "timestamp,theta_air_C,p_pv_kW,p_dem_kW,p_server1_kW,p_server2_kW";

}  // namespace

int CalendarClock::steps_per_day() const {
    const double spd = 24.0 / ts;
    return static_cast<int>(std::lround(spd));
}

void CalendarClock::validate() const {
    if (!(ts > 0.0)) throw ParameterError("clock ts must be positive");
    const double spd = 24.0 / ts;
    if (std::abs(spd - std::round(spd)) > 1e-9) throw ParameterError("clock ts must divide 24 h evenly");
    if (start_weekday < 0 || start_weekday > 6) throw ParameterError("start_weekday must be in 0..6");
}

double tod(const CalendarClock& clock, std::int64_t k) {
    const std::int64_t spd = clock.steps_per_day();
    return static_cast<double>(floor_mod(k, spd)) * clock.ts;
}

int dow(const CalendarClock& clock, std::int64_t k) {
    const std::int64_t day = floor_div(k, clock.steps_per_day());
    return static_cast<int>(floor_mod(day + clock.start_weekday, 7));
}

int day_of_year(const CalendarClock& clock, std::int64_t k) {
    const std::int64_t day = floor_div(k, clock.steps_per_day());
    return static_cast<int>(floor_mod(day, kDaysPerYear));
}

std::int64_t month_index(const CalendarClock& clock, std::int64_t k) {
    const std::int64_t day = floor_div(k, clock.steps_per_day());
    const std::int64_t year = floor_div(day, kDaysPerYear);
    const int doy = static_cast<int>(day - year * kDaysPerYear);
    int month = 0;
    while (month + 1 < kMonthsPerYear && kMonthOffsets[month + 1] <= doy) ++month;
    return year * kMonthsPerYear + month;
}

std::int64_t month_start_step(const CalendarClock& clock, std::int64_t index) {
    const std::int64_t year = floor_div(index, kMonthsPerYear);
    const int month = static_cast<int>(index - year * kMonthsPerYear);
    return (year * kDaysPerYear + kMonthOffsets[month]) * clock.steps_per_day();
}

std::string iso_timestamp(const CalendarClock& clock, std::int64_t k) {
    const std::int64_t spd = clock.steps_per_day();
    const std::int64_t day = floor_div(k, spd);
    const std::int64_t year_off = floor_div(day, kDaysPerYear);
    const int doy = static_cast<int>(day - year_off * kDaysPerYear);
    int month = 0;
    while (month + 1 < kMonthsPerYear && kMonthOffsets[month + 1] <= doy) ++month;
    const int dom = doy - kMonthOffsets[month] + 1;
    const auto seconds = static_cast<std::int64_t>(std::llround(static_cast<double>(floor_mod(k, spd)) * clock.ts * 3600.0));
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%04lld-%02d-%02dT%02lld:%02lld:%02lld",
                  static_cast<long long>(clock.year + year_off), month + 1, dom,
                  static_cast<long long>(seconds / 3600), static_cast<long long>((seconds / 60) % 60),
                  static_cast<long long>(seconds % 60));
    return buf;
}

Disturbance TimeSeriesFrame::disturbance(std::int64_t k, const Eigen::VectorXd& q_other) const {
    const auto i = static_cast<std::size_t>(k);
    Disturbance d;
    d.theta_air = theta_air.at(i);
    d.q_other = q_other;
    d.p_pv = p_pv[i];
    d.p_dem = p_dem[i];
    d.p_server = {p_server1[i], p_server2[i]};
    return d;
}

void TimeSeriesFrame::validate() const {
    const std::size_t n = size();
    if (p_pv.size() != n || p_dem.size() != n || p_server1.size() != n || p_server2.size() != n ||
        tod.size() != n || dow.size() != n)
        throw ParameterError("time series frame arrays differ in length");
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = [&] { return "row " + std::to_string(i) + ": "; };
        if (!std::isfinite(theta_air[i]) || !std::isfinite(p_pv[i]) || !std::isfinite(p_dem[i]) ||
            !std::isfinite(p_server1[i]) || !std::isfinite(p_server2[i]))
            throw ParameterError(row() + "non-finite value");
        if (p_pv[i] < 0.0) throw ParameterError(row() + "p_pv must be >= 0");
        if (p_dem[i] > 0.0) throw ParameterError(row() + "p_dem must be <= 0 (consumption)");
        if (std::abs(p_server1[i]) + std::abs(p_server2[i]) > std::abs(p_dem[i]))
            throw ParameterError(row() + "server loads exceed total demand");
        if (!(tod[i] >= 0.0 && tod[i] < 24.0)) throw ParameterError(row() + "tod out of [0, 24)");
        if (dow[i] < 0 || dow[i] > 6) throw ParameterError(row() + "dow out of 0..6");
    }
}

void GeneratorConfig::validate() const {
    if (temp_annual_amplitude < 0.0 || temp_diurnal_amplitude < 0.0 || temp_noise_std < 0.0)
        throw ParameterError("temperature amplitudes must be nonnegative");
    if (pv_capacity < 0.0 || demand_base < 0.0 || demand_workday_bump < 0.0)
        throw ParameterError("capacities and loads must be nonnegative");
    for (double phi : {temp_ar, cloud_ar, demand_ar, server_ar})
        if (!(phi >= 0.0 && phi < 1.0)) throw ParameterError("AR coefficients must lie in [0, 1)");
}

TimeSeriesFrame generate_span(const GeneratorConfig& cfg, const CalendarClock& clock, std::int64_t n_steps) {
    cfg.validate();
    clock.validate();
    if (n_steps <= 0) throw ParameterError("n_steps must be positive");
    constexpr double two_pi = 2.0 * std::numbers::pi;

    TimeSeriesFrame f;
    f.clock = clock;
    const auto n = static_cast<std::size_t>(n_steps);
    for (auto* v : {&f.theta_air, &f.p_pv, &f.p_dem, &f.p_server1, &f.p_server2, &f.tod}) v->resize(n);
    f.dow.resize(n);

    Ar1 temp_noise(cfg.temp_ar, cfg.temp_noise_std);
    Ar1 cloud(cfg.cloud_ar, cfg.cloud_noise_std);
    Ar1 demand_noise(cfg.demand_ar, cfg.demand_noise_std);
    Ar1 server1_noise(cfg.server_ar, cfg.server_noise_std);
    Ar1 server2_noise(cfg.server_ar, cfg.server_noise_std);

    for (std::size_t i = 0; i < n; ++i) {
        const auto k = static_cast<std::int64_t>(i);
        const double hour = tod(clock, k);
        const int weekday = dow(clock, k);
        const double doy = day_of_year(clock, k) + hour / 24.0;

        const double annual = -cfg.temp_annual_amplitude * std::cos(two_pi * (doy - cfg.temp_coldest_day) / kDaysPerYear);
        const double diurnal = cfg.temp_diurnal_amplitude * std::cos(two_pi * (hour - cfg.temp_peak_hour) / 24.0);
        f.theta_air[i] = cfg.temp_mean + annual + diurnal + temp_noise.next(hashed_gaussian(cfg.seed, kTemp, i));

        const double season = std::sin(two_pi * (doy - 80.0) / kDaysPerYear);
        const double day_length = 12.0 + 4.0 * season;
        const double sunrise = 12.0 - 0.5 * day_length;
        double sun = 0.0;
        if (hour > sunrise && hour < sunrise + day_length) sun = std::sin(std::numbers::pi * (hour - sunrise) / day_length);
        const double elevation = 0.55 + 0.45 * season;
        const double latent = cloud.next(hashed_gaussian(cfg.seed, kCloud, i));
        const double clearness = 0.15 + 0.85 / (1.0 + std::exp(-(latent + 0.8)));
        f.p_pv[i] = cfg.pv_capacity * cfg.pv_system_efficiency * sun * elevation * clearness;

        const double drift1 = cfg.server_drift_amplitude * std::sin(two_pi * doy / kDaysPerYear);
        const double drift2 = cfg.server_drift_amplitude * std::sin(two_pi * doy / kDaysPerYear + 1.3);
        f.p_server1[i] = std::max(0.5, cfg.server1_base + drift1 + server1_noise.next(hashed_gaussian(cfg.seed, kServer1, i)));
        f.p_server2[i] = std::max(0.5, cfg.server2_base + drift2 + server2_noise.next(hashed_gaussian(cfg.seed, kServer2, i)));

        const bool working = weekday < 5 && hour >= cfg.work_start && hour < cfg.work_end;
        const double other = cfg.demand_base + (working ? cfg.demand_workday_bump : 0.0) +
                             demand_noise.next(hashed_gaussian(cfg.seed, kDemand, i));
        f.p_dem[i] = -(std::max(0.0, other) + f.p_server1[i] + f.p_server2[i]);

        f.tod[i] = hour;
        f.dow[i] = weekday;
    }
    return f;
}

void write_csv(const TimeSeriesFrame& frame, std::ostream& out) {
    out << kCsvHeader << '\n';
    std::string line;
    for (std::size_t i = 0; i < frame.size(); ++i) {
        line = iso_timestamp(frame.clock, frame.start_step + static_cast<std::int64_t>(i));
        for (double v : {frame.theta_air[i], frame.p_pv[i], frame.p_dem[i], frame.p_server1[i], frame.p_server2[i]}) {
            line += ',';
            append_double(line, v);
        }
        out << line << '\n';
    }
}

void write_csv(const TimeSeriesFrame& frame, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    write_csv(frame, out);
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

namespace {

struct ParsedTime {
    int year, month, day, hour, minute, second;
};

bool parse_timestamp(const std::string& s, ParsedTime& t) {
    char tail = 0;
    const int got = std::sscanf(s.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%c", &t.year, &t.month, &t.day, &t.hour,
                                &t.minute, &t.second, &tail);
    if (got != 6) return false;
    if (t.month < 1 || t.month > 12 || t.day < 1 || t.day > kMonthDays[t.month - 1]) return false;
    return t.hour >= 0 && t.hour < 24 && t.minute >= 0 && t.minute < 60 && t.second >= 0 && t.second < 60;
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

}  // namespace

TimeSeriesFrame parse_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || split(line).empty() || line.find_first_not_of(" \r\t") == std::string::npos)
        throw ParseError("empty CSV: missing header");
    const auto header = split(line);
    const std::vector<std::string> expected = split(kCsvHeader);
    for (const auto& col : expected)
        if (std::find(header.begin(), header.end(), col) == header.end())
            throw ParseError("missing column '" + col + "'");
    std::array<std::size_t, 6> pos{};
    for (std::size_t c = 0; c < expected.size(); ++c)
        pos[c] = static_cast<std::size_t>(std::find(header.begin(), header.end(), expected[c]) - header.begin());

    TimeSeriesFrame f;
    std::vector<ParsedTime> times;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (line.find_first_not_of(" \r\t") == std::string::npos) continue;
        const auto fields = split(line);
        const auto where = [&] { return "row " + std::to_string(row) + ": "; };
        if (fields.size() != header.size()) throw ParseError(where() + "expected " + std::to_string(header.size()) + " fields");
        ParsedTime t{};
        if (!parse_timestamp(fields[pos[0]], t)) throw ParseError(where() + "bad timestamp '" + fields[pos[0]] + "'");
        times.push_back(t);
        std::array<double, 5> v{};
        for (std::size_t c = 0; c < 5; ++c) {
            if (!parse_double(fields[pos[c + 1]], v[c]))
                throw ParseError(where() + "cannot parse " + expected[c + 1] + " '" + fields[pos[c + 1]] + "'");
            if (!std::isfinite(v[c])) throw ParseError(where() + expected[c + 1] + " is not finite");
        }
        if (v[1] < 0.0) throw ParseError(where() + "p_pv_kW must be >= 0");
        if (v[2] > 0.0) throw ParseError(where() + "p_dem_kW must be <= 0");
        if (std::abs(v[3]) + std::abs(v[4]) > std::abs(v[2]))
            throw ParseError(where() + "server loads exceed total demand");
        f.theta_air.push_back(v[0]);
        f.p_pv.push_back(v[1]);
        f.p_dem.push_back(v[2]);
        f.p_server1.push_back(v[3]);
        f.p_server2.push_back(v[4]);
    }
    if (times.empty()) throw ParseError("CSV has no data rows");

    const auto seconds_of_year = [](const ParsedTime& t) {
        return (static_cast<std::int64_t>(kMonthOffsets[t.month - 1] + t.day - 1) * 86400) + t.hour * 3600 +
               t.minute * 60 + t.second;
    };
    double ts = 0.5;
    if (times.size() > 1) {
        const std::int64_t dt = (static_cast<std::int64_t>(times[1].year - times[0].year) * kDaysPerYear * 86400) +
                                seconds_of_year(times[1]) - seconds_of_year(times[0]);
        if (dt <= 0) throw ParseError("row 2: non-monotone timestamps");
        ts = static_cast<double>(dt) / 3600.0;
    }
    CalendarClock clock;
    clock.year = times[0].year;
    clock.ts = ts;
    clock.start_weekday = weekday_monday0(times[0].year, 1, 1);
    try {
        clock.validate();
    } catch (const ParameterError& e) {
        throw ParseError(std::string("row 2: unsupported sampling interval: ") + e.what());
    }
    const double start = static_cast<double>(seconds_of_year(times[0])) / (3600.0 * ts);
    if (std::abs(start - std::round(start)) > 1e-9) throw ParseError("row 1: timestamp not aligned to the sampling grid");
    f.clock = clock;
    f.start_step = static_cast<std::int64_t>(std::llround(start));

    for (std::size_t i = 0; i < times.size(); ++i) {
        const std::int64_t k = f.start_step + static_cast<std::int64_t>(i);
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02d", times[i].year, times[i].month, times[i].day,
                      times[i].hour, times[i].minute, times[i].second);
        if (iso_timestamp(clock, k) != buf)
            throw ParseError("row " + std::to_string(i + 1) + ": non-monotone or irregular timestamp " + buf);
        f.tod.push_back(tod(clock, k));
        f.dow.push_back(dow(clock, k));
    }
    f.validate();
    return f;
}

TimeSeriesFrame load_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path.string());
    return parse_csv(in);
}

}  // namespace silmpc
