#pragma once

// Band-driven on/off actuation: cooling pair when Hot, heater when Cold,
// nothing otherwise. Memoryless apart from the solver-failure fallback.

#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <string>

#include "comfort/comfort_core.hpp"
#include "comfort/errors.hpp"
#include "comfort/kv_config.hpp"
#include "comfort/mlp.hpp"

namespace comfort {

// Heating and cooling cannot be commanded together: the only reachable
// states are idle, heating, and the exhaust+coolant pair.
class ActuatorCommand {
public:
    enum class Pattern { AllOff, Heating, Cooling };

    constexpr ActuatorCommand() = default;

    static constexpr ActuatorCommand all_off() { return ActuatorCommand(Pattern::AllOff); }
    static constexpr ActuatorCommand heating() { return ActuatorCommand(Pattern::Heating); }
    static constexpr ActuatorCommand cooling() { return ActuatorCommand(Pattern::Cooling); }

    constexpr Pattern pattern() const noexcept { return pattern_; }
    constexpr bool heater_on() const noexcept { return pattern_ == Pattern::Heating; }
    constexpr bool exhaust_on() const noexcept { return pattern_ == Pattern::Cooling; }
    constexpr bool coolant_on() const noexcept { return pattern_ == Pattern::Cooling; }

    friend constexpr bool operator==(ActuatorCommand, ActuatorCommand) = default;

private:
    constexpr explicit ActuatorCommand(Pattern p) : pattern_(p) {}
    Pattern pattern_ = Pattern::AllOff;
};

enum class PmvSource { Analytic, Surrogate };

inline std::string_view to_string(PmvSource s) {
    return s == PmvSource::Analytic ? "analytic" : "surrogate";
}

struct ControlDecision {
    ComfortClass comfort_class = ComfortClass::Comfortable;
    ActuatorCommand command;
    double pmv_used = 0.0;
    PmvSource source = PmvSource::Analytic;
};

inline ControlDecision decide(double pmv, PmvSource source = PmvSource::Analytic) {
    const ComfortClass c = classify_comfort(pmv);
    ActuatorCommand cmd = ActuatorCommand::all_off();
    if (c == ComfortClass::Hot) cmd = ActuatorCommand::cooling();
    else if (c == ComfortClass::Cold) cmd = ActuatorCommand::heating();
    return {c, cmd, pmv, source};
}

enum class StepStatus { Ok, HeldAfterNonConvergence };

struct StepOutcome {
    ControlDecision decision;
    StepStatus status = StepStatus::Ok;
    bool out_of_domain = false;  // surrogate queried outside its training box
};

// One controller per loop. Holds the last decision so a failed analytic
// solve can repeat it instead of inventing a PMV.
class Controller {
public:
    Controller(PmvSource source, OccupantProfile occupant, const MlpModel* model = nullptr,
               SolverOptions solver = {})
        : source_(source), occupant_(occupant), model_(model), solver_(solver) {
        if (source_ == PmvSource::Surrogate && model_ == nullptr)
            throw MissingModel("surrogate PMV source requires a trained model");
    }

    StepOutcome step(const EnvironmentSample& sample) {
        StepOutcome out;
        if (source_ == PmvSource::Surrogate) {
            const PmvPrediction p = predict_pmv(*model_, sample.air_temp_c,
                                                sample.rel_humidity * 100.0);
            out.decision = decide(p.pmv, source_);
            out.out_of_domain = p.out_of_domain;
        } else {
            try {
                out.decision = decide(compute_pmv(sample, occupant_, solver_).pmv, source_);
            } catch (const NonConvergence&) {
                out.status = StepStatus::HeldAfterNonConvergence;
                if (last_) {
                    out.decision = *last_;
                } else {
                    out.decision = {ComfortClass::Comfortable, ActuatorCommand::all_off(),
                                    std::numeric_limits<double>::quiet_NaN(), source_};
                }
                return out;
            }
        }
        last_ = out.decision;
        return out;
    }

    PmvSource source() const noexcept { return source_; }
    const OccupantProfile& occupant() const noexcept { return occupant_; }
    const std::optional<ControlDecision>& last_decision() const noexcept { return last_; }

private:
    PmvSource source_;
    OccupantProfile occupant_;
    const MlpModel* model_;
    SolverOptions solver_;
    std::optional<ControlDecision> last_;
};

// Decision trace: same CSV conventions as the dataset file.
inline constexpr const char* kTraceHeader = "step,temp_c,rh_pct,pmv,class,heater,exhaust,coolant";

inline void write_trace_line(std::ostream& out, std::size_t step, const EnvironmentSample& sample,
                             const ControlDecision& d) {
    const auto g = [](double v) { return detail::format_g(v, 9); };
    out << step << ',' << g(sample.air_temp_c) << ',' << g(sample.rel_humidity * 100.0) << ','
        << g(d.pmv_used) << ',' << to_string(d.comfort_class) << ',' << d.command.heater_on()
        << ',' << d.command.exhaust_on() << ',' << d.command.coolant_on() << '\n';
}

}  // namespace comfort
