#pragma once

// Analytic Fanger thermal-comfort engine.
//
// All temperatures are in degrees Celsius, pressures in pascal, heat fluxes
// in W/m^2 of body surface. Relative humidity is a fraction in [0, 1]; the
// percent form only appears at I/O boundaries.

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>

#include "comfort/errors.hpp"

namespace comfort {

inline constexpr double kWattsPerMet = 58.15;
inline constexpr double kM2KPerClo = 0.155;

inline constexpr double kPmvFloor = -4.0;
inline constexpr double kPmvCeiling = 4.0;

inline constexpr double kDefaultAirVelocity = 0.1;

struct EnvironmentSample {
    double air_temp_c = 0.0;
    double rel_humidity = 0.0;
    double air_velocity_ms = kDefaultAirVelocity;
    double mean_radiant_temp_c = 0.0;

    // Radiant temperature follows the air temperature (no radiant asymmetry).
    static EnvironmentSample from_percent(double temp_c, double rh_pct,
                                          double air_velocity_ms = kDefaultAirVelocity) {
        return EnvironmentSample{temp_c, rh_pct / 100.0, air_velocity_ms, temp_c};
    }

    void validate() const {
        if (!std::isfinite(air_temp_c) || air_temp_c < -40.0 || air_temp_c > 80.0)
            throw InvalidArgument("air temperature must be finite and within [-40, 80] C");
        if (!(rel_humidity >= 0.0 && rel_humidity <= 1.0))
            throw InvalidArgument("relative humidity must be a fraction in [0, 1]");
        if (!(air_velocity_ms >= 0.0) || !std::isfinite(air_velocity_ms))
            throw InvalidArgument("air velocity must be finite and non-negative");
        if (!std::isfinite(mean_radiant_temp_c))
            throw InvalidArgument("mean radiant temperature must be finite");
    }
};

// Clothing area factor f_cl as a function of clothing insulation (m^2K/W).
// Piecewise ISO 7730 relation; the two branches differ by 3.1e-4 at the
// 0.078 breakpoint.
inline double clothing_area_factor(double icl_m2kw) {
    if (!(icl_m2kw >= 0.0))
        throw InvalidArgument("clothing insulation must be non-negative");
    return icl_m2kw <= 0.078 ? 1.00 + 1.290 * icl_m2kw : 1.05 + 0.645 * icl_m2kw;
}

class OccupantProfile {
public:
    OccupantProfile(double metabolic_rate_wm2, double mechanical_work_wm2,
                    double clothing_insulation_m2kw)
        : metabolic_rate_(metabolic_rate_wm2),
          mechanical_work_(mechanical_work_wm2),
          clothing_insulation_(clothing_insulation_m2kw) {
        if (!(metabolic_rate_ > 0.0) || !std::isfinite(metabolic_rate_))
            throw InvalidArgument("metabolic rate must be positive");
        if (!(mechanical_work_ >= 0.0) || !std::isfinite(mechanical_work_))
            throw InvalidArgument("mechanical work must be non-negative");
        if (!(metabolic_rate_ > mechanical_work_))
            throw InvalidArgument("metabolic rate must exceed mechanical work");
        if (!std::isfinite(clothing_insulation_))
            throw InvalidArgument("clothing insulation must be finite");
        clothing_area_factor_ = comfort::clothing_area_factor(clothing_insulation_);
    }

    static OccupantProfile from_met_clo(double met, double clo, double work_wm2 = 0.0) {
        return OccupantProfile(met * kWattsPerMet, work_wm2, clo * kM2KPerClo);
    }

    // Light sedentary office occupant: 1.2 met, 0.5 clo, no external work.
    static OccupantProfile office_default() { return OccupantProfile(69.78, 0.0, 0.0775); }

    double metabolic_rate_wm2() const noexcept { return metabolic_rate_; }
    double mechanical_work_wm2() const noexcept { return mechanical_work_; }
    double clothing_insulation_m2kw() const noexcept { return clothing_insulation_; }
    double clothing_area_factor() const noexcept { return clothing_area_factor_; }

    // Mean skin temperature implied by the internal heat production.
    double skin_temperature_c() const noexcept {
        return 35.7 - 0.028 * (metabolic_rate_ - mechanical_work_);
    }

private:
    double metabolic_rate_;
    double mechanical_work_;
    double clothing_insulation_;
    double clothing_area_factor_ = 1.0;
};

// Magnus-Tetens water vapour partial pressure in Pa.
inline double vapor_pressure(const EnvironmentSample& sample) {
    const double t = sample.air_temp_c;
    return sample.rel_humidity * (610.6 * std::exp(17.260 * t / (273.3 + t)));
}

// Natural vs forced convection, whichever dominates.
inline double convective_coefficient(double tcl_c, const EnvironmentSample& sample) {
    const double natural = 2.38 * std::pow(std::abs(tcl_c - sample.air_temp_c), 0.25);
    const double forced = 12.1 * std::sqrt(sample.air_velocity_ms);
    return std::max(natural, forced);
}

// Heat balance of the clothed body: f(tcl) = rhs(tcl) - tcl. The clothing
// surface temperature is the root of this function.
inline double clothing_balance_residual(double tcl_c, const EnvironmentSample& sample,
                                        const OccupantProfile& occupant) {
    const double fcl = occupant.clothing_area_factor();
    const double hc = convective_coefficient(tcl_c, sample);
    const double radiative = 3.96e-8 * fcl *
                             (std::pow(tcl_c + 273.0, 4) -
                              std::pow(sample.mean_radiant_temp_c + 273.0, 4));
    const double convective = fcl * hc * (tcl_c - sample.air_temp_c);
    const double rhs = occupant.skin_temperature_c() -
                       occupant.clothing_insulation_m2kw() * (radiative + convective);
    return rhs - tcl_c;
}

struct SolverOptions {
    double initial_guess_c = 25.0;
    double step_tolerance = 1e-5;
    double residual_tolerance = 1e-4;
    double derivative_step = 1e-4;
    int max_iterations = 100;
};

struct ClothingSolve {
    double tcl_c = 0.0;
    int iterations = 0;
};

// Newton-Raphson on clothing_balance_residual with a central-difference
// derivative. h_c is re-evaluated inside every residual call.
inline ClothingSolve solve_clothing_temperature(const EnvironmentSample& sample,
                                                const OccupantProfile& occupant,
                                                const SolverOptions& options = {}) {
    // Bare skin: the balance collapses to tcl = skin temperature.
    if (occupant.clothing_insulation_m2kw() == 0.0)
        return {occupant.skin_temperature_c(), 0};

    const auto residual = [&](double t) {
        return clothing_balance_residual(t, sample, occupant);
    };

    double tcl = options.initial_guess_c;
    const double h = options.derivative_step;
    for (int i = 1; i <= options.max_iterations; ++i) {
        const double f = residual(tcl);
        const double slope = (residual(tcl + h) - residual(tcl - h)) / (2.0 * h);
        if (slope == 0.0 || !std::isfinite(slope))
            throw NonConvergence("zero or non-finite derivative in clothing temperature solve",
                                 tcl, i);
        const double next = tcl - f / slope;
        if (!std::isfinite(next))
            throw NonConvergence("clothing temperature iterate became non-finite", tcl, i);
        const bool small_step = std::abs(next - tcl) < options.step_tolerance;
        tcl = next;
        if (small_step && std::abs(residual(tcl)) < options.residual_tolerance)
            return {tcl, i};
    }
    throw NonConvergence("clothing temperature did not converge within " +
                             std::to_string(options.max_iterations) + " iterations",
                         tcl, options.max_iterations);
}

struct PmvResult {
    double pmv = 0.0;      // clamped to [-4, 4]
    double pmv_raw = 0.0;  // before clamping
    double tcl_c = 0.0;
    double hc_wm2k = 0.0;
    double pa_pascal = 0.0;
    int solver_iterations = 0;
};

inline PmvResult compute_pmv(const EnvironmentSample& sample, const OccupantProfile& occupant,
                             const SolverOptions& options = {}) {
    sample.validate();

    const double m = occupant.metabolic_rate_wm2();
    const double mw = m - occupant.mechanical_work_wm2();
    const double fcl = occupant.clothing_area_factor();
    const double ta = sample.air_temp_c;

    PmvResult r;
    r.pa_pascal = vapor_pressure(sample);
    const ClothingSolve solve = solve_clothing_temperature(sample, occupant, options);
    r.tcl_c = solve.tcl_c;
    r.solver_iterations = solve.iterations;
    r.hc_wm2k = convective_coefficient(r.tcl_c, sample);

    const double pa = r.pa_pascal;
    const double skin_diffusion = 3.05e-3 * (5733.0 - 6.99 * mw - pa);
    const double sweating = 0.42 * (mw - kWattsPerMet);
    const double latent_respiration = 1.7e-5 * m * (5867.0 - pa);
    const double dry_respiration = 0.0014 * m * (34.0 - ta);
    const double radiation = 3.96e-8 * fcl *
                             (std::pow(r.tcl_c + 273.0, 4) -
                              std::pow(sample.mean_radiant_temp_c + 273.0, 4));
    const double convection = fcl * r.hc_wm2k * (r.tcl_c - ta);

    const double load = mw - skin_diffusion - sweating - latent_respiration - dry_respiration -
                        radiation - convection;
    r.pmv_raw = (0.303 * std::exp(-0.036 * m) + 0.028) * load;
    r.pmv = std::clamp(r.pmv_raw, kPmvFloor, kPmvCeiling);
    return r;
}

enum class ComfortClass { Cold, Cool, Comfortable, Warm, Hot };

// ISO 7730 sensation bands. +-0.5 is Comfortable, +-2 is Cool/Warm.
inline ComfortClass classify_comfort(double pmv) {
    if (std::isnan(pmv))
        throw InvalidArgument("cannot classify a NaN PMV");
    if (pmv < -2.0) return ComfortClass::Cold;
    if (pmv < -0.5) return ComfortClass::Cool;
    if (pmv <= 0.5) return ComfortClass::Comfortable;
    if (pmv <= 2.0) return ComfortClass::Warm;
    return ComfortClass::Hot;
}

inline std::string_view to_string(ComfortClass c) {
    switch (c) {
        case ComfortClass::Cold: return "Cold";
        case ComfortClass::Cool: return "Cool";
        case ComfortClass::Comfortable: return "Comfortable";
        case ComfortClass::Warm: return "Warm";
        case ComfortClass::Hot: return "Hot";
    }
    return "?";
}

inline constexpr ComfortClass kAllComfortClasses[] = {
    ComfortClass::Cold, ComfortClass::Cool, ComfortClass::Comfortable, ComfortClass::Warm,
    ComfortClass::Hot};

}  // namespace comfort
