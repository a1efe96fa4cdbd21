#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "comfort/control.hpp"

using namespace comfort;

TEST(Decide, BandExamples) {
    EXPECT_EQ(decide(2.3).command, ActuatorCommand::cooling());
    EXPECT_EQ(decide(2.3).comfort_class, ComfortClass::Hot);
    EXPECT_EQ(decide(-2.3).command, ActuatorCommand::heating());
    EXPECT_EQ(decide(-2.3).comfort_class, ComfortClass::Cold);
    EXPECT_EQ(decide(0.1).command, ActuatorCommand::all_off());
    EXPECT_EQ(decide(1.2).command, ActuatorCommand::all_off());
    EXPECT_EQ(decide(1.2).comfort_class, ComfortClass::Warm);
    EXPECT_EQ(decide(-1.2).comfort_class, ComfortClass::Cool);
    EXPECT_EQ(decide(-1.2).command, ActuatorCommand::all_off());
}

TEST(Decide, CarriesInputsThrough) {
    const auto d = decide(0.42, PmvSource::Surrogate);
    EXPECT_EQ(d.pmv_used, 0.42);
    EXPECT_EQ(d.source, PmvSource::Surrogate);
    EXPECT_THROW(decide(NAN), InvalidArgument);
}

TEST(Decide, CommandFollowsBandEverywhere) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-4.0, 4.0);
    for (int i = 0; i < 20000; ++i) {
        const double pmv = u(rng);
        const auto d = decide(pmv);
        ASSERT_EQ(d.comfort_class, classify_comfort(pmv));
        ASSERT_EQ(d.command.heater_on(), d.comfort_class == ComfortClass::Cold);
        ASSERT_EQ(d.command.coolant_on(), d.comfort_class == ComfortClass::Hot);
        ASSERT_EQ(d.command.exhaust_on(), d.command.coolant_on());
    }
}

TEST(ActuatorCommand, HeatingAndCoolingAreExclusive) {
    for (auto cmd : {ActuatorCommand::all_off(), ActuatorCommand::heating(), ActuatorCommand::cooling(),
                     ActuatorCommand{}}) {
        EXPECT_FALSE(cmd.heater_on() && (cmd.coolant_on() || cmd.exhaust_on()));
    }
    EXPECT_EQ(ActuatorCommand{}, ActuatorCommand::all_off());
}

TEST(Controller, SurrogateWithoutModelIsRejected) {
    EXPECT_THROW(Controller(PmvSource::Surrogate, OccupantProfile::office_default()), MissingModel);
    EXPECT_NO_THROW(Controller(PmvSource::Analytic, OccupantProfile::office_default()));
}

TEST(Controller, CalibrationPointDecisions) {
    Controller c(PmvSource::Analytic, OccupantProfile::office_default());
    const auto comfy = c.step(EnvironmentSample::from_percent(25.0, 60.99));
    EXPECT_EQ(comfy.status, StepStatus::Ok);
    EXPECT_EQ(comfy.decision.comfort_class, ComfortClass::Comfortable);
    EXPECT_EQ(comfy.decision.command, ActuatorCommand::all_off());

    const auto hot = c.step(EnvironmentSample::from_percent(32.34, 62.22));
    EXPECT_NE(hot.decision.comfort_class, ComfortClass::Comfortable);
    EXPECT_EQ(hot.decision.command, ActuatorCommand::cooling());
    ASSERT_TRUE(c.last_decision().has_value());
    EXPECT_EQ(c.last_decision()->comfort_class, ComfortClass::Hot);
}

TEST(Controller, HoldsLastDecisionWhenSolverFails) {
    SolverOptions tight;
    tight.max_iterations = 1;
    Controller c(PmvSource::Analytic, OccupantProfile::office_default(), nullptr, tight);

    const auto first = c.step(EnvironmentSample::from_percent(32.34, 62.22));
    EXPECT_EQ(first.status, StepStatus::HeldAfterNonConvergence);
    EXPECT_TRUE(std::isnan(first.decision.pmv_used));
    EXPECT_EQ(first.decision.command, ActuatorCommand::all_off());
    EXPECT_FALSE(c.last_decision().has_value());
}

TEST(Controller, HeldDecisionRepeatsPreviousCommand) {
    // Three iterations are enough at 25 C but not at 32.34 C.
    SolverOptions opts;
    opts.max_iterations = 3;
    Controller c(PmvSource::Analytic, OccupantProfile::office_default(), nullptr, opts);
    const auto first = c.step(EnvironmentSample::from_percent(25.0, 50.0));
    ASSERT_EQ(first.status, StepStatus::Ok);
    const auto second = c.step(EnvironmentSample::from_percent(32.34, 50.0));
    ASSERT_EQ(second.status, StepStatus::HeldAfterNonConvergence);
    EXPECT_EQ(second.decision.comfort_class, first.decision.comfort_class);
    EXPECT_EQ(second.decision.command, first.decision.command);
    EXPECT_EQ(second.decision.pmv_used, first.decision.pmv_used);
}

TEST(Controller, SurrogateFlagsOutOfDomainQueries) {
    MlpModel model = make_model_shape(kDefaultHiddenWidths);
    model.norm = {0.0, 50.0, 0.0, 100.0, -4.0, 4.0};
    Controller c(PmvSource::Surrogate, OccupantProfile::office_default(), &model);
    const auto in_box = c.step(EnvironmentSample::from_percent(25.0, 50.0));
    EXPECT_FALSE(in_box.out_of_domain);
    // Zero network outputs the midpoint of the target range.
    EXPECT_NEAR(in_box.decision.pmv_used, 0.0, 1e-12);
    EXPECT_EQ(in_box.decision.source, PmvSource::Surrogate);
    EXPECT_TRUE(c.step(EnvironmentSample::from_percent(60.0, 50.0)).out_of_domain);
}

TEST(TraceLine, Format) {
    std::ostringstream out;
    write_trace_line(out, 12, EnvironmentSample::from_percent(25.5, 40.0), decide(2.5));
    EXPECT_EQ(out.str(), "12,25.5,40,2.5,Hot,0,1,1\n");
    EXPECT_STREQ(kTraceHeader, "step,temp_c,rh_pct,pmv,class,heater,exhaust,coolant");
}
