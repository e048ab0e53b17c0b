#include "silmpc/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <string>

#include "silmpc/errors.hpp"

namespace silmpc {
namespace {

using nlohmann::json;

// Serializes fields into a JSON object.
class Writer {
public:
    explicit Writer(json& out) : out_(out) { out_ = json::object(); }

    template <typename T>
    void operator()(const char* key, T& value) {
        out_[key] = encode(value);
    }
    template <typename F>
    void section(const char* key, F&& fields) {
        json sub;
        Writer w(sub);
        fields(w);
        out_[key] = sub;
    }

private:
    static json encode(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }
    static json encode(const Eigen::MatrixXd& m) {
        json rows = json::array();
        for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(encode(Eigen::VectorXd(m.row(i).transpose())));
        return rows;
    }
    static json encode(const std::optional<std::filesystem::path>& p) { return p ? json(p->string()) : json(nullptr); }
    static json encode(const RegressorKind& k) { return k == RegressorKind::Ridge ? "ridge" : "gbt"; }
    template <typename T>
    static json encode(const T& v) {
        return v;
    }

    json& out_;
};

// Reads fields that are present, rejects unknown keys.
class Reader {
public:
    Reader(const json& in, std::string path) : in_(in), path_(std::move(path)) {
        if (!in_.is_object()) throw ParseError("config: '" + path_ + "' must be an object");
    }
    ~Reader() noexcept(false) {
        if (std::uncaught_exceptions() > 0) return;
        for (const auto& [key, _] : in_.items())
            if (!seen_.count(key)) throw ParseError("config: unknown key '" + qualified(key) + "'");
    }

    template <typename T>
    void operator()(const char* key, T& value) {
        seen_.insert(key);
        const auto it = in_.find(key);
        if (it == in_.end()) return;
        try {
            decode(*it, value, qualified(key));
        } catch (const json::exception& e) {
            throw ParseError("config: bad value for '" + qualified(key) + "': " + e.what());
        }
    }
    template <typename F>
    void section(const char* key, F&& fields) {
        seen_.insert(key);
        const auto it = in_.find(key);
        if (it == in_.end()) return;
        Reader sub(*it, qualified(key));
        fields(sub);
    }

private:
    std::string qualified(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    static void decode(const json& j, Eigen::VectorXd& v, const std::string& key) {
        const auto values = j.get<std::vector<double>>();
        if (v.size() != 0 && static_cast<Eigen::Index>(values.size()) != v.size())
            throw ParseError("config: '" + key + "' needs " + std::to_string(v.size()) + " entries");
        v = Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
    }
    static void decode(const json& j, Eigen::MatrixXd& m, const std::string& key) {
        const auto rows = j.get<std::vector<std::vector<double>>>();
        if (static_cast<Eigen::Index>(rows.size()) != m.rows()) throw ParseError("config: '" + key + "' row count");
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (static_cast<Eigen::Index>(rows[i].size()) != m.cols())
                throw ParseError("config: '" + key + "' column count");
            for (std::size_t c = 0; c < rows[i].size(); ++c)
                m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = rows[i][c];
        }
    }
    static void decode(const json& j, std::optional<std::filesystem::path>& p, const std::string&) {
        if (j.is_null())
            p.reset();
        else
            p = j.get<std::string>();
    }
    static void decode(const json& j, RegressorKind& k, const std::string& key) {
        const auto s = j.get<std::string>();
        if (s == "ridge")
            k = RegressorKind::Ridge;
        else if (s == "gbt")
            k = RegressorKind::GradientBoosting;
        else
            throw ParseError("config: '" + key + "' must be \"ridge\" or \"gbt\"");
    }
    static void decode(const json& j, double& v, const std::string& key) {
        if (!j.is_number()) throw ParseError("config: '" + key + "' must be a number");
        v = j.get<double>();
    }
    static void decode(const json& j, bool& v, const std::string& key) {
        if (!j.is_boolean()) throw ParseError("config: '" + key + "' must be true or false");
        v = j.get<bool>();
    }
    template <typename T>
    static void decode(const json& j, T& v, const std::string& key) {
        if constexpr (std::is_integral_v<T>) {
            if (!j.is_number_integer()) throw ParseError("config: '" + key + "' must be an integer");
            if constexpr (std::is_unsigned_v<T>) {
                if (!j.is_number_unsigned() && j.get<std::int64_t>() < 0)
                    throw ParseError("config: '" + key + "' must be nonnegative");
            }
        }
        v = j.get<T>();
    }

    const json& in_;
    std::string path_;
    std::set<std::string> seen_;
};

template <typename V>
void visit_bounds(V& v, OperatingBounds& b) {
    v("p_bat_min", b.p_bat_min);
    v("p_bat_max", b.p_bat_max);
    v("e_bat_min", b.e_bat_min);
    v("p_chp_min", b.p_chp_min);
    v("q_heat_max", b.q_heat_max);
    v("q_cool_min", b.q_cool_min);
    v("q_rad_max", b.q_rad_max);
    v("theta_min", b.theta_min);
    v("theta_max", b.theta_max);
    v("p_buy_max", b.p_buy_max);
    v("p_sell_max", b.p_sell_max);
}

template <typename V>
void visit_building(V& v, BuildingParameters& p) {
    v("cth", p.network.cth);
    v("beta", p.network.beta);
    v("ha", p.network.ha);
    v("q_other", p.q_other);
    v("eps_c", p.eps_c);
    v("c_chp", p.c_chp);
    v("p_chp_max", p.p_chp_max);
    v("e_bat_max", p.e_bat_max);
    v("ts", p.ts);
    v.section("bounds", [&](V& s) { visit_bounds(s, p.bounds); });
}

template <typename V>
void visit_generator(V& v, GeneratorConfig& g) {
    v("seed", g.seed);
    v("temp_mean", g.temp_mean);
    v("temp_annual_amplitude", g.temp_annual_amplitude);
    v("temp_coldest_day", g.temp_coldest_day);
    v("temp_diurnal_amplitude", g.temp_diurnal_amplitude);
    v("temp_peak_hour", g.temp_peak_hour);
    v("temp_noise_std", g.temp_noise_std);
    v("temp_ar", g.temp_ar);
    v("pv_capacity", g.pv_capacity);
    v("pv_system_efficiency", g.pv_system_efficiency);
    v("cloud_ar", g.cloud_ar);
    v("cloud_noise_std", g.cloud_noise_std);
    v("demand_base", g.demand_base);
    v("demand_workday_bump", g.demand_workday_bump);
    v("work_start", g.work_start);
    v("work_end", g.work_end);
    v("demand_noise_std", g.demand_noise_std);
    v("demand_ar", g.demand_ar);
    v("server1_base", g.server1_base);
    v("server2_base", g.server2_base);
    v("server_drift_amplitude", g.server_drift_amplitude);
    v("server_noise_std", g.server_noise_std);
    v("server_ar", g.server_ar);
}

template <typename V>
void visit_twin(V& v, StudyConfig& c) {
    ExogenousModel& m = c.twin;
    v("occupancy_gain", m.occupancy_gain);
    v("solar_gain", m.solar_gain);
    v("lag1_gain", m.lag1_gain);
    v("lag2_gain", m.lag2_gain);
    v("demand_gain", m.demand_gain);
    v("transition_gain", m.transition_gain);
    v("transition_center", m.transition_center);
    v("transition_width", m.transition_width);
    v("work_start", m.work_start);
    v("work_end", m.work_end);
    v("ramp_hours", m.ramp_hours);
    v("weekday_mask", m.weekday_mask);
    v("server_load_gain", m.server_load_gain);
    v("server_ambient_gain", m.server_ambient_gain);
    v("server_demand_gain", m.server_demand_gain);
    v("theta_ref", m.theta_ref);
    v("p_dem_ref", m.p_dem_ref);
    v("p_server_ref", m.p_server_ref);
    v("scale", m.scale);
    v("noise_ratio", m.noise_ratio);
    v("noise_std", m.noise_std);
    v("seed", m.seed);
    v("calibrate_noise", c.calibrate_twin_noise);
    v.section("mismatch", [&](V& s) {
        s("enabled", c.mismatch.enabled);
        s("amplitude", c.mismatch.amplitude);
        s("seed", c.mismatch.seed);
    });
    v.section("measurement", [&](V& s) {
        s("noise_std", c.measurement.noise_std);
        s("seed", c.measurement.seed);
    });
}

template <typename V>
void visit_solver(V& v, QpSettings& s) {
    v("eps_abs", s.eps_abs);
    v("eps_rel", s.eps_rel);
    v("eps_prim_inf", s.eps_prim_inf);
    v("max_iter", s.max_iter);
    v("rho", s.rho);
    v("sigma", s.sigma);
    v("alpha", s.alpha);
    v("adaptive_rho", s.adaptive_rho);
    v("adaptive_rho_interval", s.adaptive_rho_interval);
    v("check_interval", s.check_interval);
    v("scaling_iter", s.scaling_iter);
    v("polish", s.polish);
}

template <typename V>
void visit_ocp(V& v, OcpConfig& o) {
    v("np", o.np);
    v("w_comf", o.w_comf);
    v("w_server", o.w_server);
    v("w_mon", o.w_mon);
    v("theta_ref", o.theta_ref);
    v("server_lo", o.server_lo);
    v("server_hi", o.server_hi);
    v("c_buy", o.c_buy);
    v("c_sell", o.c_sell);
    v("c_gas", o.c_gas);
    v("c_peak", o.c_peak);
    v("eta_boiler", o.eta_boiler);
    v("eta_chp_el", o.eta_chp_el);
    v.section("solver", [&](V& s) { visit_solver(s, o.solver); });
}

template <typename V>
void visit_estimator(V& v, EstimatorConfig& e) {
    v("building_kind", e.building_kind);
    v("server_kind", e.server_kind);
    v("ridge_lambda", e.ridge_lambda);
    v.section("gbt", [&](V& s) {
        s("n_trees", e.gbt.n_trees);
        s("max_depth", e.gbt.max_depth);
        s("learning_rate", e.gbt.learning_rate);
        s("min_samples_leaf", e.gbt.min_samples_leaf);
        s("subsample", e.gbt.subsample);
        s("seed", e.gbt.seed);
        s("max_bins", e.gbt.max_bins);
    });
}

template <typename V>
void visit_harness(V& v, HarnessConfig& h) {
    v("seed", h.seed);
    v("study_year", h.study_year);
    v("study_start_weekday", h.study_start_weekday);
    v("year_steps", h.year_steps);
    v("window_months", h.window_months);
    v("min_training_rows", h.min_training_rows);
    v("initial_building_temp", h.initial_building_temp);
    v("initial_server_temp", h.initial_server_temp);
    v("initial_e_bat", h.initial_e_bat);
    v("data_csv", h.data_csv);
    v("save_models", h.save_models);
}

template <typename V>
void visit_study(V& v, StudyConfig& c) {
    v.section("building", [&](V& s) { visit_building(s, c.building); });
    v.section("generator", [&](V& s) { visit_generator(s, c.generator); });
    v.section("twin", [&](V& s) { visit_twin(s, c); });
    v.section("ocp", [&](V& s) { visit_ocp(s, c.ocp); });
    v.section("estimator", [&](V& s) { visit_estimator(s, c.estimator); });
    v.section("harness", [&](V& s) { visit_harness(s, c.harness); });
}

}  // namespace

void StudyConfig::validate() const {
    building.validate();
    CalendarClock clock;
    clock.ts = building.ts;
    clock.start_weekday = harness.study_start_weekday;
    clock.validate();
    generator.validate();
    twin.validate();
    ocp.validate();
    estimator.gbt.validate();
    if (estimator.ridge_lambda < 0.0) throw ParameterError("ridge_lambda must be >= 0");
    if (mismatch.amplitude < 0.0 || mismatch.amplitude >= 1.0) throw ParameterError("mismatch amplitude in [0, 1)");
    if (measurement.noise_std < 0.0) throw ParameterError("measurement noise must be >= 0");
    if (harness.year_steps < 0) throw ParameterError("year_steps must be >= 0");
    if (harness.window_months < 1) throw ParameterError("window_months must be positive");
    if (harness.study_start_weekday < 0 || harness.study_start_weekday > 6)
        throw ParameterError("study_start_weekday must be in 0..6");
    if (harness.initial_e_bat < building.bounds.e_bat_min || harness.initial_e_bat > building.e_bat_max)
        throw ParameterError("initial battery energy outside its bounds");
    if (twin.kelvin_per_kw.size() != kNumZones) throw ParameterError("twin kelvin_per_kw must have 9 entries");
}

nlohmann::json to_json(const StudyConfig& cfg) {
    json out;
    Writer w(out);
    StudyConfig copy = cfg;
    visit_study(w, copy);
    return out;
}

StudyConfig study_config_from_json(const nlohmann::json& j) {
    StudyConfig cfg;
    {
        Reader r(j, "");
        visit_study(r, cfg);
    }
    cfg.twin.kelvin_per_kw = cfg.building.ts * cfg.building.network.cth.cwiseInverse();
    cfg.validate();
    return cfg;
}

StudyConfig load_study_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file " + path.string());
    json j;
    try {
        j = json::parse(in, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    return study_config_from_json(j);
}

std::string config_fingerprint(const StudyConfig& cfg) {
    const std::string text = to_json(cfg).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace silmpc
