#pragma once

// comfortctl: gen-data, train, predict, simulate, check.
//
// Exit codes: 0 success, 1 usage error, 2 data/parse error,
// 3 numeric failure, 4 acceptance-check failure.

#include <cstdint>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "comfort/comfort.hpp"
#include "comfort/testing/checks.hpp"

namespace comfortctl {

enum class ExitStatus : int { Success = 0, Usage = 1, Data = 2, Numeric = 3, CheckFailed = 4 };

inline int code(ExitStatus s) { return static_cast<int>(s); }

inline constexpr std::uint64_t kDefaultSeed = 7;

// Settings that may come from `--config <path>`; command-line flags win.
struct RunConfig {
    comfort::OccupantProfile occupant = comfort::OccupantProfile::office_default();
    double air_velocity_ms = comfort::kDefaultAirVelocity;
    comfort::TrainConfig train;
    comfort::HiddenWidths hidden = comfort::kDefaultHiddenWidths;
    double train_fraction = 0.8;
    std::size_t dataset_size = 50000;
};

inline comfort::HiddenWidths parse_widths(const std::string& text, const std::string& source) {
    comfort::HiddenWidths widths{};
    std::string normalized = text;
    for (auto& c : normalized)
        if (c == ',') c = ' ';
    std::istringstream in(normalized);
    std::size_t count = 0;
    for (std::string tok; in >> tok;) {
        unsigned long long v = 0;
        if (count >= widths.size() || !comfort::detail::parse_uint64(tok, v) || v == 0)
            throw comfort::InvalidArgument(source + ": hidden_widths must be four positive integers");
        widths[count++] = static_cast<std::size_t>(v);
    }
    if (count != widths.size())
        throw comfort::InvalidArgument(source + ": hidden_widths must be four positive integers");
    return widths;
}

inline RunConfig load_run_config(const std::string& path) {
    RunConfig cfg;
    if (path.empty()) return cfg;
    const auto doc = comfort::KeyValueDoc::load(path);
    const auto& d = cfg.occupant;
    cfg.occupant = comfort::OccupantProfile(
        doc.get_double("occupant.metabolic_rate_wm2", d.metabolic_rate_wm2()),
        doc.get_double("occupant.mechanical_work_wm2", d.mechanical_work_wm2()),
        doc.get_double("occupant.clothing_insulation_m2kw", d.clothing_insulation_m2kw()));
    cfg.air_velocity_ms = doc.get_double("environment.air_velocity_ms", cfg.air_velocity_ms);
    auto& t = cfg.train;
    t.learning_rate = doc.get_double("train.learning_rate", t.learning_rate);
    t.adam_beta1 = doc.get_double("train.adam_beta1", t.adam_beta1);
    t.adam_beta2 = doc.get_double("train.adam_beta2", t.adam_beta2);
    t.adam_epsilon = doc.get_double("train.adam_epsilon", t.adam_epsilon);
    t.batch_size = doc.get_uint("train.batch_size", t.batch_size);
    t.epochs = doc.get_uint("train.epochs", t.epochs);
    cfg.train_fraction = doc.get_double("train.train_fraction", cfg.train_fraction);
    if (doc.has("train.hidden_widths"))
        cfg.hidden = parse_widths(doc.get_string("train.hidden_widths"), path);
    cfg.dataset_size = doc.get_uint("data.n", cfg.dataset_size);
    return cfg;
}

// Runs `body`, translating library errors into exit codes.
template <typename Body>
int guarded(std::ostream& err, Body&& body) {
    try {
        return code(body());
    } catch (const comfort::IoError& e) {
        err << "error: " << e.what() << '\n';
        return code(ExitStatus::Data);
    } catch (const comfort::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return code(ExitStatus::Data);
    } catch (const comfort::DegenerateRange& e) {
        err << "error: " << e.what() << '\n';
        return code(ExitStatus::Data);
    } catch (const comfort::NonConvergence& e) {
        err << "numeric failure: " << e.what() << '\n';
        return code(ExitStatus::Numeric);
    } catch (const comfort::DivergedTraining& e) {
        err << "numeric failure: " << e.what() << " (epoch " << e.epoch() << ")\n";
        return code(ExitStatus::Numeric);
    } catch (const comfort::UndefinedR2& e) {
        err << "numeric failure: " << e.what() << '\n';
        return code(ExitStatus::Numeric);
    } catch (const comfort::ComfortError& e) {
        err << "usage error: " << e.what() << '\n';
        return code(ExitStatus::Usage);
    }
}

inline std::string fmt(double v, int digits = 6) { return comfort::detail::format_g(v, digits); }

inline ExitStatus cmd_gen_data(std::size_t n, std::uint64_t seed, const std::string& out_path,
                               const RunConfig& cfg, std::ostream& out) {
    const auto data = comfort::generate_dataset(n, seed, cfg.occupant, cfg.air_velocity_ms);
    comfort::write_dataset_csv(out_path, data.records);
    out << "records=" << data.records.size() << '\n'
        << "resampled=" << data.resampled << '\n'
        << "seed=" << seed << '\n'
        << "path=" << out_path << '\n';
    return ExitStatus::Success;
}

inline ExitStatus cmd_train(const std::string& data_path, const std::string& model_out,
                            std::uint64_t seed, std::uint64_t data_seed, const RunConfig& cfg,
                            std::ostream& out) {
    const auto records = comfort::read_dataset_csv(data_path);
    auto split = comfort::split_and_normalize(records, cfg.train_fraction, seed);

    auto model = comfort::init_model(cfg.hidden, seed);
    model.norm = split.stats;
    comfort::TrainConfig tc = cfg.train;
    tc.seed = seed;
    const auto result = comfort::train(std::move(model), split.train, tc);
    if (result.diverged)
        throw comfort::DivergedTraining("training loss rose from " +
                                            fmt(result.loss_history.front()) + " to " +
                                            fmt(result.loss_history.back()),
                                        result.loss_history.size());
    const auto metrics = comfort::evaluate(result.model, split.test);

    comfort::save_model(model_out, result.model);
    {
        std::ofstream stats(model_out + ".stats");
        if (!stats) throw comfort::IoError("cannot write '" + model_out + ".stats'");
        comfort::write_stats(stats, {split.stats, data_seed, seed, cfg.train_fraction});
    }

    out << "train_records=" << split.train.size() << '\n'
        << "test_records=" << split.test.size() << '\n'
        << "epochs=" << result.loss_history.size() << '\n'
        << "first_epoch_loss=" << fmt(result.loss_history.front(), 9) << '\n'
        << "final_epoch_loss=" << fmt(result.loss_history.back(), 9) << '\n'
        << "mse=" << fmt(metrics.mse) << " mae=" << fmt(metrics.mae)
        << " r2=" << fmt(metrics.r_squared) << '\n';
    return ExitStatus::Success;
}

inline ExitStatus cmd_predict(const std::string& model_path, double temp_c, double rh_pct,
                              std::ostream& out) {
    const auto model = comfort::load_model(model_path);
    const auto p = comfort::predict_pmv(model, temp_c, rh_pct);
    const auto cls = comfort::classify_comfort(p.pmv);
    out << "Predicted PMV: " << comfort::detail::format_fixed(p.pmv, 3) << '\n'
        << "pmv=" << fmt(p.pmv, 9) << '\n'
        << "class=" << comfort::to_string(cls) << '\n'
        << "out_of_domain=" << (p.out_of_domain ? 1 : 0) << '\n';
    return ExitStatus::Success;
}

inline ExitStatus cmd_simulate(const std::string& params_path, std::size_t steps,
                               comfort::PmvSource source, const std::string& model_path,
                               const std::string& trace_out, const std::string& report_out,
                               const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    comfort::SimulationConfig sim;
    if (!params_path.empty())
        sim = comfort::read_simulation_config(comfort::KeyValueDoc::load(params_path));

    std::optional<comfort::MlpModel> model;
    if (source == comfort::PmvSource::Surrogate) {
        if (model_path.empty()) {
            err << "usage error: --source surrogate requires --model\n";
            return ExitStatus::Usage;
        }
        model = comfort::load_model(model_path);
    }

    comfort::ControllerConfig controller{source, cfg.occupant, model ? &*model : nullptr, {}};
    const auto result = comfort::run_closed_loop(sim.initial, sim.plant, controller, steps);

    comfort::write_trace_csv(trace_out, result.trace);
    const std::string report_path = report_out.empty() ? trace_out + ".energy" : report_out;
    comfort::write_energy_report(report_path, result.report);

    long long last_hot = -1;
    for (const auto& rec : result.trace)
        if (rec.decision.comfort_class == comfort::ComfortClass::Hot)
            last_hot = static_cast<long long>(rec.step);

    const auto& r = result.report;
    out << "steps=" << r.steps << '\n'
        << "source=" << comfort::to_string(source) << '\n'
        << "failed_steps=" << r.failed_steps << '\n'
        << "heater_duty=" << comfort::detail::format_fixed(r.heater_duty, 6) << '\n'
        << "exhaust_duty=" << comfort::detail::format_fixed(r.exhaust_duty, 6) << '\n'
        << "coolant_duty=" << comfort::detail::format_fixed(r.coolant_duty, 6) << '\n';
    for (auto c : comfort::kAllComfortClasses)
        out << "occupancy_" << comfort::to_string(c) << '='
            << comfort::detail::format_fixed(r.occupancy(c), 6) << '\n';
    out << "last_hot_step=" << last_hot << '\n'
        << "final_class=" << comfort::to_string(result.trace.back().decision.comfort_class) << '\n'
        << "final_temp_c=" << fmt(result.final_state.temp_c) << '\n'
        << "final_rh_pct=" << fmt(result.final_state.rh_fraction * 100.0) << '\n';

    if (r.failed_steps * 10 > r.steps) {
        err << "numeric failure in " << r.failed_steps << " of " << r.steps << " steps\n";
        return ExitStatus::Numeric;
    }
    return ExitStatus::Success;
}

inline ExitStatus cmd_check(const std::string& model_path, const RunConfig& cfg, std::ostream& out) {
    auto results = comfort::testing::analytic_battery(cfg.occupant);
    if (!model_path.empty()) {
        const auto model = comfort::load_model(model_path);
        for (auto& r : comfort::testing::surrogate_battery(model, cfg.occupant))
            results.push_back(std::move(r));
    } else {
        out << "mode=analytic-only\n";
    }
    std::size_t failed = 0;
    for (const auto& r : results) {
        out << (r.passed ? "PASS " : "FAIL ") << r.name << ' ' << r.detail << '\n';
        if (!r.passed) ++failed;
    }
    out << "checks=" << results.size() << " failed=" << failed << '\n';
    return failed == 0 ? ExitStatus::Success : ExitStatus::CheckFailed;
}

// Entry point shared by main() and the CLI tests.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
    CLI::App app{"Thermal-comfort pipeline: PMV engine, MLP surrogate and chamber simulator",
                 "comfortctl"};
    app.require_subcommand(1);

    std::uint64_t seed = kDefaultSeed;
    std::string config_path;
    app.add_option("--seed", seed, "Seed for every random stream")->capture_default_str();
    app.add_option("--config", config_path, "Key-value run configuration")
        ->check(CLI::ExistingFile);

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "Generate the labeled synthetic corpus");
    std::size_t n = 0;
    std::string data_out;
    gen->add_option("-n,--count", n, "Number of records (default 50000)")
        ->check(CLI::PositiveNumber);
    gen->add_option("-o,--out", data_out, "Output CSV path")->required();

    // train
    auto* tr = app.add_subcommand("train", "Train the surrogate network");
    std::string data_path, model_out;
    std::optional<std::size_t> epochs, batch;
    std::optional<double> lr, fraction;
    std::optional<std::uint64_t> data_seed;
    std::string widths_text;
    tr->add_option("-d,--data", data_path, "Dataset CSV")->required();
    tr->add_option("-o,--model-out", model_out, "Weight file to write")->required();
    tr->add_option("--epochs", epochs, "Training epochs")->check(CLI::PositiveNumber);
    tr->add_option("--batch-size", batch, "Mini-batch size")->check(CLI::PositiveNumber);
    tr->add_option("--learning-rate", lr, "Adam learning rate")->check(CLI::PositiveNumber);
    tr->add_option("--train-fraction", fraction, "Share of records used for training")
        ->check(CLI::Range(0.0, 1.0));
    tr->add_option("--hidden-widths", widths_text, "Four comma-separated hidden widths");
    tr->add_option("--data-seed", data_seed, "Seed the dataset was generated with (recorded)");

    // predict
    auto* pr = app.add_subcommand("predict", "Predict PMV for one reading");
    std::string model_path;
    double temp = 0.0, rh = 0.0;
    pr->add_option("-m,--model", model_path, "Weight file")->required();
    pr->add_option("--temp", temp, "Air temperature, C")->required()->check(CLI::Range(-40.0, 80.0));
    pr->add_option("--rh", rh, "Relative humidity, percent")->required()->check(CLI::Range(0.0, 100.0));

    // simulate
    auto* sim = app.add_subcommand("simulate", "Run the closed-loop chamber simulation");
    std::string params_path, trace_out, report_out, sim_model;
    std::size_t steps = 10000;
    std::string source_name = "analytic";
    sim->add_option("-p,--params", params_path, "Plant parameter file")->check(CLI::ExistingFile);
    sim->add_option("--steps", steps, "Number of control steps")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    sim->add_option("--source", source_name, "PMV source: analytic or surrogate")
        ->check(CLI::IsMember({"analytic", "surrogate"}))
        ->capture_default_str();
    sim->add_option("-m,--model", sim_model, "Weight file (surrogate source)");
    sim->add_option("-o,--trace-out", trace_out, "Trace CSV path")->required();
    sim->add_option("--report-out", report_out, "Energy report path (default <trace>.energy)");

    // check
    auto* chk = app.add_subcommand("check", "Run the calibration battery");
    std::string check_model;
    chk->add_option("-m,--model", check_model, "Weight file; omit for analytic-only checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e, out, err);
        return rc == 0 ? code(ExitStatus::Success) : code(ExitStatus::Usage);
    }

    RunConfig cfg;
    if (int rc = guarded(err, [&] {
            cfg = load_run_config(config_path);
            return ExitStatus::Success;
        });
        rc != 0)
        return rc;

    if (gen->parsed()) {
        const std::size_t count = n == 0 ? cfg.dataset_size : n;
        return guarded(err, [&] { return cmd_gen_data(count, seed, data_out, cfg, out); });
    }
    if (tr->parsed()) {
        if (epochs) cfg.train.epochs = *epochs;
        if (batch) cfg.train.batch_size = *batch;
        if (lr) cfg.train.learning_rate = *lr;
        if (fraction) cfg.train_fraction = *fraction;
        return guarded(err, [&] {
            if (!widths_text.empty()) cfg.hidden = parse_widths(widths_text, "--hidden-widths");
            return cmd_train(data_path, model_out, seed, data_seed.value_or(seed), cfg, out);
        });
    }
    if (pr->parsed())
        return guarded(err, [&] { return cmd_predict(model_path, temp, rh, out); });
    if (sim->parsed())
        return guarded(err, [&] {
            const auto source = source_name == "surrogate" ? comfort::PmvSource::Surrogate
                                                           : comfort::PmvSource::Analytic;
            return cmd_simulate(params_path, steps, source, sim_model, trace_out, report_out, cfg,
                                out, err);
        });
    if (chk->parsed()) return guarded(err, [&] { return cmd_check(check_model, cfg, out); });
    return code(ExitStatus::Usage);
}

}  // namespace comfortctl
