#pragma once

// Synthetic (temperature, humidity) -> PMV training corpus.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "comfort/comfort_core.hpp"
#include "comfort/errors.hpp"
#include "comfort/kv_config.hpp"

namespace comfort {

// Sampling box of the corpus.
inline constexpr double kDatasetTempMin = 0.0;
inline constexpr double kDatasetTempMax = 50.0;
inline constexpr double kDatasetRhMinPct = 0.0;
inline constexpr double kDatasetRhMaxPct = 100.0;

inline constexpr int kDatasetSignificantDigits = 9;

struct SampleRecord {
    double air_temp_c = 0.0;
    double rel_humidity_pct = 0.0;
    double pmv = 0.0;

    friend bool operator==(const SampleRecord&, const SampleRecord&) = default;
};

inline bool in_dataset_box(double temp_c, double rh_pct) {
    return temp_c >= kDatasetTempMin && temp_c <= kDatasetTempMax &&
           rh_pct >= kDatasetRhMinPct && rh_pct <= kDatasetRhMaxPct;
}

namespace detail {

// 53 random mantissa bits -> [0, 1). Independent of the standard library's
// distribution implementations.
inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Round to the value that survives a print/parse cycle at `digits` significant digits.
inline double quantize(double v, int digits) {
    double out = 0.0;
    const std::string s = format_g(v, digits);
    parse_double(s, out);
    return out;
}

}  // namespace detail

struct GeneratedDataset {
    std::vector<SampleRecord> records;
    std::size_t resampled = 0;  // draws replaced after a solver failure
};

// Draws (t, RH) uniformly over the box and labels with the analytic engine.
// Inputs are quantized to the file precision before labeling so that a
// persisted record relabels to exactly the same PMV.
inline GeneratedDataset generate_dataset(std::size_t n, std::uint64_t seed,
                                         const OccupantProfile& occupant =
                                             OccupantProfile::office_default(),
                                         double air_velocity_ms = kDefaultAirVelocity) {
    if (n == 0) throw InvalidCount("dataset size must be at least 1");

    GeneratedDataset out;
    out.records.reserve(n);
    std::mt19937_64 rng(seed);
    while (out.records.size() < n) {
        const double t = detail::quantize(
            kDatasetTempMin + (kDatasetTempMax - kDatasetTempMin) * detail::uniform01(rng),
            kDatasetSignificantDigits);
        const double rh = detail::quantize(
            kDatasetRhMinPct + (kDatasetRhMaxPct - kDatasetRhMinPct) * detail::uniform01(rng),
            kDatasetSignificantDigits);
        try {
            const auto sample = EnvironmentSample::from_percent(t, rh, air_velocity_ms);
            out.records.push_back({t, rh, compute_pmv(sample, occupant).pmv});
        } catch (const NonConvergence&) {
            ++out.resampled;
        }
    }
    return out;
}

struct NormalizationStats {
    double temp_min = 0.0;
    double temp_max = 1.0;
    double rh_min_pct = 0.0;
    double rh_max_pct = 1.0;
    double target_min = kPmvFloor;
    double target_max = kPmvCeiling;

    std::array<double, 2> normalize_input(double temp_c, double rh_pct) const {
        return {(temp_c - temp_min) / (temp_max - temp_min),
                (rh_pct - rh_min_pct) / (rh_max_pct - rh_min_pct)};
    }
    std::array<double, 2> denormalize_input(const std::array<double, 2>& x) const {
        return {temp_min + x[0] * (temp_max - temp_min),
                rh_min_pct + x[1] * (rh_max_pct - rh_min_pct)};
    }
    double normalize_target(double pmv) const {
        return (pmv - target_min) / (target_max - target_min);
    }
    double denormalize_target(double y) const {
        return target_min + y * (target_max - target_min);
    }

    void validate() const {
        const auto ok = [](double lo, double hi) {
            return std::isfinite(lo) && std::isfinite(hi) && hi > lo;
        };
        if (!ok(temp_min, temp_max)) throw DegenerateRange("temperature range is degenerate");
        if (!ok(rh_min_pct, rh_max_pct)) throw DegenerateRange("humidity range is degenerate");
        if (!ok(target_min, target_max)) throw DegenerateRange("target range is degenerate");
    }

    friend bool operator==(const NormalizationStats&, const NormalizationStats&) = default;
};

// Network-ready view of a split: inputs and targets scaled into [0, 1].
struct NormalizedSplit {
    std::vector<std::array<double, 2>> inputs;
    std::vector<double> targets;

    std::size_t size() const noexcept { return targets.size(); }
    bool empty() const noexcept { return targets.empty(); }
};

inline NormalizedSplit normalize_records(const std::vector<SampleRecord>& records,
                                         const NormalizationStats& stats) {
    NormalizedSplit out;
    out.inputs.reserve(records.size());
    out.targets.reserve(records.size());
    for (const auto& r : records) {
        out.inputs.push_back(stats.normalize_input(r.air_temp_c, r.rel_humidity_pct));
        out.targets.push_back(stats.normalize_target(r.pmv));
    }
    return out;
}

struct DatasetSplit {
    std::vector<SampleRecord> train_records;
    std::vector<SampleRecord> test_records;
    NormalizedSplit train;
    NormalizedSplit test;
    NormalizationStats stats;
};

// Seeded shuffle, split, then min-max input stats from the train part only.
// Targets use the fixed PMV clamp range.
inline DatasetSplit split_and_normalize(std::vector<SampleRecord> records, double train_fraction,
                                        std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw InvalidArgument("train fraction must lie strictly between 0 and 1");
    if (records.size() < 2) throw InvalidCount("need at least two records to split");

    std::mt19937_64 rng(seed);
    for (std::size_t i = records.size() - 1; i > 0; --i) {
        const auto j = static_cast<std::size_t>(detail::uniform01(rng) * static_cast<double>(i + 1));
        std::swap(records[i], records[std::min(j, i)]);
    }

    auto n_train = static_cast<std::size_t>(
        std::llround(train_fraction * static_cast<double>(records.size())));
    n_train = std::clamp<std::size_t>(n_train, 1, records.size() - 1);

    DatasetSplit out;
    out.train_records.assign(records.begin(), records.begin() + static_cast<std::ptrdiff_t>(n_train));
    out.test_records.assign(records.begin() + static_cast<std::ptrdiff_t>(n_train), records.end());

    auto& s = out.stats;
    s.temp_min = s.temp_max = out.train_records.front().air_temp_c;
    s.rh_min_pct = s.rh_max_pct = out.train_records.front().rel_humidity_pct;
    for (const auto& r : out.train_records) {
        s.temp_min = std::min(s.temp_min, r.air_temp_c);
        s.temp_max = std::max(s.temp_max, r.air_temp_c);
        s.rh_min_pct = std::min(s.rh_min_pct, r.rel_humidity_pct);
        s.rh_max_pct = std::max(s.rh_max_pct, r.rel_humidity_pct);
    }
    s.target_min = kPmvFloor;
    s.target_max = kPmvCeiling;
    s.validate();

    out.train = normalize_records(out.train_records, s);
    out.test = normalize_records(out.test_records, s);
    return out;
}

// ---------------------------------------------------------------------------
// Dataset file: `temp_c,rh_pct,pmv` header, one record per line, 9 significant digits.

inline constexpr const char* kDatasetHeader = "temp_c,rh_pct,pmv";

inline void write_dataset_csv(std::ostream& out, const std::vector<SampleRecord>& records) {
    out << kDatasetHeader << '\n';
    for (const auto& r : records) {
        out << detail::format_g(r.air_temp_c, kDatasetSignificantDigits) << ','
            << detail::format_g(r.rel_humidity_pct, kDatasetSignificantDigits) << ','
            << detail::format_g(r.pmv, kDatasetSignificantDigits) << '\n';
    }
}

inline void write_dataset_csv(const std::string& path, const std::vector<SampleRecord>& records) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write dataset to '" + path + "'");
    write_dataset_csv(out, records);
    if (!out) throw IoError("write failed for '" + path + "'");
}

inline std::vector<SampleRecord> read_dataset_csv(std::istream& in, const std::string& source) {
    std::string line;
    if (!std::getline(in, line) || detail::trim(line) != kDatasetHeader)
        throw ParseError(source, 1, std::string("expected header '") + kDatasetHeader + "'");

    std::vector<SampleRecord> records;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::trim(line).empty()) continue;
        std::array<double, 3> v{};
        std::size_t start = 0;
        for (std::size_t field = 0; field < 3; ++field) {
            const auto comma = line.find(',', start);
            const bool last = field == 2;
            if (last != (comma == std::string::npos))
                throw ParseError(source, lineno, "expected exactly 3 comma-separated fields");
            const auto text = std::string_view(line).substr(
                start, last ? std::string::npos : comma - start);
            if (!detail::parse_double(text, v[field]))
                throw ParseError(source, lineno,
                                 "field " + std::to_string(field + 1) + " is not a number");
            start = comma + 1;
        }
        records.push_back({v[0], v[1], v[2]});
    }
    return records;
}

inline std::vector<SampleRecord> read_dataset_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open dataset '" + path + "'");
    return read_dataset_csv(in, path);
}

// ---------------------------------------------------------------------------
// Stats file: versioned key-value document.

inline constexpr int kStatsFormatVersion = 1;

struct StatsFile {
    NormalizationStats stats;
    std::uint64_t generator_seed = 0;
    std::uint64_t split_seed = 0;
    double train_fraction = 0.8;
};

inline void write_stats(std::ostream& out, const StatsFile& f) {
    const auto g = [](double v) { return detail::format_g(v, 17); };
    out << "format = comfort-normalization\n"
        << "version = " << kStatsFormatVersion << '\n'
        << "generator_seed = " << f.generator_seed << '\n'
        << "split_seed = " << f.split_seed << '\n'
        << "train_fraction = " << g(f.train_fraction) << '\n'
        << "input_temp_min = " << g(f.stats.temp_min) << '\n'
        << "input_temp_max = " << g(f.stats.temp_max) << '\n'
        << "input_rh_pct_min = " << g(f.stats.rh_min_pct) << '\n'
        << "input_rh_pct_max = " << g(f.stats.rh_max_pct) << '\n'
        << "target_min = " << g(f.stats.target_min) << '\n'
        << "target_max = " << g(f.stats.target_max) << '\n';
}

inline StatsFile read_stats(const KeyValueDoc& doc) {
    if (doc.get_string("format") != "comfort-normalization")
        throw ParseError(doc.source(), 0, "not a normalization stats document");
    if (doc.get_uint("version") != kStatsFormatVersion)
        throw ParseError(doc.source(), 0, "unsupported stats version " + doc.get_string("version"));
    StatsFile f;
    f.generator_seed = doc.get_uint("generator_seed");
    f.split_seed = doc.get_uint("split_seed");
    f.train_fraction = doc.get_double("train_fraction");
    f.stats.temp_min = doc.get_double("input_temp_min");
    f.stats.temp_max = doc.get_double("input_temp_max");
    f.stats.rh_min_pct = doc.get_double("input_rh_pct_min");
    f.stats.rh_max_pct = doc.get_double("input_rh_pct_max");
    f.stats.target_min = doc.get_double("target_min");
    f.stats.target_max = doc.get_double("target_max");
    f.stats.validate();
    return f;
}

}  // namespace comfort
