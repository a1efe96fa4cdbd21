#pragma once

// Discrete-time first-order model of a small enclosed test chamber with a
// heater, an exhaust fan and an evaporative coolant, plus the closed
// sense -> predict -> actuate loop around it.

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "comfort/comfort_core.hpp"
#include "comfort/control.hpp"
#include "comfort/errors.hpp"
#include "comfort/kv_config.hpp"

namespace comfort {

struct PlantParams {
    double ambient_temp_c = 24.5;
    double ambient_rh_fraction = 0.50;
    double thermal_time_constant_s = 1800.0;
    double humidity_time_constant_s = 2400.0;
    double heater_gain_c_per_step = 0.05;
    double coolant_temp_drop_c_per_step = 0.04;
    double coolant_rh_rise_per_step = 0.002;
    double exhaust_mixing_factor = 0.01;  // fraction of the gap to ambient closed per step
    double step_seconds = 10.0;
    double sensor_noise_std_temp_c = 0.05;
    double sensor_noise_std_rh = 0.005;  // fraction
    double air_velocity_ms = kDefaultAirVelocity;
    std::uint64_t noise_seed = 1;

    void validate() const {
        const auto finite = [](double v) { return std::isfinite(v); };
        if (!finite(ambient_temp_c)) throw InvalidArgument("ambient temperature must be finite");
        if (!(ambient_rh_fraction >= 0.0 && ambient_rh_fraction <= 1.0))
            throw InvalidArgument("ambient humidity must be a fraction in [0, 1]");
        if (!(thermal_time_constant_s > 0.0) || !(humidity_time_constant_s > 0.0))
            throw InvalidArgument("time constants must be positive");
        if (!(heater_gain_c_per_step >= 0.0) || !(coolant_temp_drop_c_per_step >= 0.0) ||
            !(coolant_rh_rise_per_step >= 0.0))
            throw InvalidArgument("actuator gains must be non-negative");
        if (!(exhaust_mixing_factor >= 0.0 && exhaust_mixing_factor <= 1.0))
            throw InvalidArgument("exhaust mixing factor must lie in [0, 1]");
        if (!(step_seconds > 0.0)) throw InvalidArgument("step length must be positive");
        if (!(sensor_noise_std_temp_c >= 0.0) || !(sensor_noise_std_rh >= 0.0))
            throw InvalidArgument("sensor noise standard deviations must be non-negative");
        if (!(air_velocity_ms >= 0.0)) throw InvalidArgument("air velocity must be non-negative");
    }
};

struct ChamberState {
    double temp_c = 24.5;
    double rh_fraction = 0.5;
    std::uint64_t step_index = 0;
    std::uint64_t cumulative_heater_steps = 0;
    std::uint64_t cumulative_cooling_steps = 0;

    static ChamberState at_ambient(const PlantParams& p) {
        return {p.ambient_temp_c, p.ambient_rh_fraction, 0, 0, 0};
    }

    friend bool operator==(const ChamberState&, const ChamberState&) = default;
};

// Relaxation toward ambient, then actuator effects, then exhaust mixing.
inline ChamberState plant_step(const ChamberState& state, ActuatorCommand command,
                               const PlantParams& p) {
    const double a_temp = 1.0 - std::exp(-p.step_seconds / p.thermal_time_constant_s);
    const double a_rh = 1.0 - std::exp(-p.step_seconds / p.humidity_time_constant_s);

    ChamberState next = state;
    next.temp_c = std::lerp(state.temp_c, p.ambient_temp_c, a_temp);
    next.rh_fraction = std::lerp(state.rh_fraction, p.ambient_rh_fraction, a_rh);

    if (command.heater_on()) next.temp_c += p.heater_gain_c_per_step;
    if (command.coolant_on()) {
        next.temp_c -= p.coolant_temp_drop_c_per_step;
        next.rh_fraction += p.coolant_rh_rise_per_step;
    }
    if (command.exhaust_on()) {
        next.temp_c = std::lerp(next.temp_c, p.ambient_temp_c, p.exhaust_mixing_factor);
        next.rh_fraction = std::lerp(next.rh_fraction, p.ambient_rh_fraction, p.exhaust_mixing_factor);
    }
    next.rh_fraction = std::clamp(next.rh_fraction, 0.0, 1.0);

    ++next.step_index;
    if (command.heater_on()) ++next.cumulative_heater_steps;
    if (command.coolant_on()) ++next.cumulative_cooling_steps;
    return next;
}

inline EnvironmentSample read_sensor(const ChamberState& state, const PlantParams& p,
                                     std::mt19937_64& rng) {
    double t = state.temp_c;
    double rh = state.rh_fraction;
    if (p.sensor_noise_std_temp_c > 0.0)
        t += std::normal_distribution<double>(0.0, p.sensor_noise_std_temp_c)(rng);
    if (p.sensor_noise_std_rh > 0.0)
        rh += std::normal_distribution<double>(0.0, p.sensor_noise_std_rh)(rng);
    rh = std::clamp(rh, 0.0, 1.0);
    return EnvironmentSample{t, rh, p.air_velocity_ms, t};
}

struct TraceRecord {
    std::uint64_t step = 0;
    EnvironmentSample sensed;
    ControlDecision decision;
    StepStatus status = StepStatus::Ok;
    bool sensor_rejected = false;  // reading outside the engine's valid range
};

struct EnergyReport {
    std::uint64_t steps = 0;
    double heater_duty = 0.0;
    double exhaust_duty = 0.0;
    double coolant_duty = 0.0;
    std::array<double, 5> band_occupancy{};  // indexed like kAllComfortClasses
    std::uint64_t failed_steps = 0;          // solver failures or rejected readings

    double occupancy(ComfortClass c) const { return band_occupancy[static_cast<std::size_t>(c)]; }
};

struct SimulationResult {
    std::vector<TraceRecord> trace;
    EnergyReport report;
    ChamberState final_state;
};

struct ControllerConfig {
    PmvSource source = PmvSource::Analytic;
    OccupantProfile occupant = OccupantProfile::office_default();
    const MlpModel* model = nullptr;
    SolverOptions solver{};
};

// read_sensor -> controller -> plant_step, n_steps times. Per-step failures
// are recorded and the loop continues with the held decision.
inline SimulationResult run_closed_loop(const ChamberState& initial, const PlantParams& params,
                                        const ControllerConfig& config, std::size_t n_steps) {
    if (n_steps == 0) throw InvalidCount("simulation needs at least one step");
    params.validate();

    Controller controller(config.source, config.occupant, config.model, config.solver);
    std::mt19937_64 rng(params.noise_seed);
    SimulationResult result;
    result.trace.reserve(n_steps);
    ChamberState state = initial;

    std::array<std::uint64_t, 5> band_counts{};
    std::uint64_t exhaust_steps = 0;
    for (std::size_t i = 0; i < n_steps; ++i) {
        TraceRecord rec;
        rec.step = state.step_index;
        rec.sensed = read_sensor(state, params, rng);

        StepOutcome outcome;
        try {
            rec.sensed.validate();
            outcome = controller.step(rec.sensed);
        } catch (const InvalidArgument&) {
            rec.sensor_rejected = true;
            outcome.status = StepStatus::HeldAfterNonConvergence;
            outcome.decision = controller.last_decision().value_or(
                ControlDecision{ComfortClass::Comfortable, ActuatorCommand::all_off(),
                                std::numeric_limits<double>::quiet_NaN(), config.source});
        }
        rec.decision = outcome.decision;
        rec.status = outcome.status;
        if (rec.status != StepStatus::Ok) ++result.report.failed_steps;
        ++band_counts[static_cast<std::size_t>(rec.decision.comfort_class)];
        if (rec.decision.command.exhaust_on()) ++exhaust_steps;

        state = plant_step(state, rec.decision.command, params);
        result.trace.push_back(rec);
    }

    auto& r = result.report;
    const double n = static_cast<double>(n_steps);
    r.steps = n_steps;
    r.heater_duty = static_cast<double>(state.cumulative_heater_steps - initial.cumulative_heater_steps) / n;
    r.coolant_duty =
        static_cast<double>(state.cumulative_cooling_steps - initial.cumulative_cooling_steps) / n;
    r.exhaust_duty = static_cast<double>(exhaust_steps) / n;
    for (std::size_t c = 0; c < band_counts.size(); ++c)
        r.band_occupancy[c] = static_cast<double>(band_counts[c]) / n;
    result.final_state = state;
    return result;
}

// ---------------------------------------------------------------------------
// Files

inline void write_trace_csv(std::ostream& out, const std::vector<TraceRecord>& trace) {
    out << kTraceHeader << '\n';
    for (const auto& rec : trace) write_trace_line(out, rec.step, rec.sensed, rec.decision);
}

inline void write_trace_csv(const std::string& path, const std::vector<TraceRecord>& trace) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write trace to '" + path + "'");
    write_trace_csv(out, trace);
    if (!out) throw IoError("write failed for '" + path + "'");
}

inline void write_energy_report(std::ostream& out, const EnergyReport& r) {
    const auto f = [](double v) { return detail::format_fixed(v, 6); };
    out << "format = comfort-energy-report\n"
        << "version = 1\n"
        << "steps = " << r.steps << '\n'
        << "failed_steps = " << r.failed_steps << '\n'
        << "heater_duty = " << f(r.heater_duty) << '\n'
        << "exhaust_duty = " << f(r.exhaust_duty) << '\n'
        << "coolant_duty = " << f(r.coolant_duty) << '\n';
    for (ComfortClass c : kAllComfortClasses) {
        std::string key(to_string(c));
        for (auto& ch : key) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
        out << "occupancy_" << key << " = " << f(r.occupancy(c)) << '\n';
    }
}

inline void write_energy_report(const std::string& path, const EnergyReport& r) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write energy report to '" + path + "'");
    write_energy_report(out, r);
    if (!out) throw IoError("write failed for '" + path + "'");
}

struct SimulationConfig {
    PlantParams plant;
    ChamberState initial;
};

// Plant parameter file. Every key is optional; missing keys keep the
// defaults above. Humidities are given in percent.
inline SimulationConfig read_simulation_config(const KeyValueDoc& doc) {
    SimulationConfig cfg;
    auto& p = cfg.plant;
    p.ambient_temp_c = doc.get_double("ambient_temp_c", p.ambient_temp_c);
    p.ambient_rh_fraction = doc.get_double("ambient_rh_pct", p.ambient_rh_fraction * 100.0) / 100.0;
    p.thermal_time_constant_s = doc.get_double("thermal_time_constant_s", p.thermal_time_constant_s);
    p.humidity_time_constant_s = doc.get_double("humidity_time_constant_s", p.humidity_time_constant_s);
    p.heater_gain_c_per_step = doc.get_double("heater_gain_c_per_step", p.heater_gain_c_per_step);
    p.coolant_temp_drop_c_per_step =
        doc.get_double("coolant_temp_drop_c_per_step", p.coolant_temp_drop_c_per_step);
    p.coolant_rh_rise_per_step =
        doc.get_double("coolant_rh_rise_pct_per_step", p.coolant_rh_rise_per_step * 100.0) / 100.0;
    p.exhaust_mixing_factor = doc.get_double("exhaust_mixing_factor", p.exhaust_mixing_factor);
    p.step_seconds = doc.get_double("step_seconds", p.step_seconds);
    p.sensor_noise_std_temp_c = doc.get_double("sensor_noise_std_temp_c", p.sensor_noise_std_temp_c);
    p.sensor_noise_std_rh = doc.get_double("sensor_noise_std_rh_pct", p.sensor_noise_std_rh * 100.0) / 100.0;
    p.air_velocity_ms = doc.get_double("air_velocity_ms", p.air_velocity_ms);
    p.noise_seed = doc.get_uint("noise_seed", p.noise_seed);
    p.validate();

    cfg.initial = ChamberState::at_ambient(p);
    cfg.initial.temp_c = doc.get_double("initial_temp_c", p.ambient_temp_c);
    cfg.initial.rh_fraction = doc.get_double("initial_rh_pct", p.ambient_rh_fraction * 100.0) / 100.0;
    if (!std::isfinite(cfg.initial.temp_c))
        throw InvalidArgument("initial temperature must be finite");
    if (!(cfg.initial.rh_fraction >= 0.0 && cfg.initial.rh_fraction <= 1.0))
        throw InvalidArgument("initial humidity must lie in [0, 100] percent");
    return cfg;
}

}  // namespace comfort
