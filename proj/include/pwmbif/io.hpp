#pragma once

#include "pwmbif/bifurcation.hpp"
#include "pwmbif/cycle_sim.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace pwmbif {

/// A converter definition as read from disk: either a preset name with
/// physical-parameter overrides, or explicit matrices. schema_version = 1.
struct ConverterDocument {
    int schema_version = 1;
    std::optional<std::string> preset;
    std::map<std::string, double> overrides;
    std::optional<ConverterSpec> explicit_spec;
};

/// Strict parse: dimensions validated, unknown fields rejected.
ConverterDocument parse_document(const std::string& json_text);
ConverterDocument load_document(const std::string& path);

/// Canonical serialization; parse(serialize(doc)) is bit-exact.
std::string serialize_document(const ConverterDocument& doc);

/// FNV-1a over the canonical serialization, as 16 hex digits.
std::string document_digest(const ConverterDocument& doc);

ConverterDocument document_for_preset(const std::string& preset,
                                      const std::map<std::string, double>& overrides);

ConverterSpec build_spec(const ConverterDocument& doc);

/// Family for sweeps: preset documents rebuild their matrices from the
/// overridden physical parameter; explicit documents only support "vs".
SpecFamily build_family(const ConverterDocument& doc, const std::string& param);

/// 12 significant digits, plain decimal point.
std::string format_number(double v);

std::string format_vector(const Vector& v);
std::string format_complex(const Complex& c);

/// Deterministic key/value report with a trailing warnings block.
struct Report {
    std::vector<std::pair<std::string, std::string>> fields;
    std::vector<std::string> warnings;

    void add(const std::string& key, const std::string& value);
    void add(const std::string& key, double value);
    void warn(const std::string& message);
    std::string render() const;
};

// CSV emitters. Header rows are mandatory; newline line terminator.
void write_trajectory_csv(const std::string& path, const std::vector<TrajectorySample>& samples,
                          int state_dim);
void write_sweep_csv(const std::string& path, const std::vector<SweepRecord>& records,
                     int state_dim);
void write_bifdiag_csv(const std::string& path, const std::vector<AttractorSample>& samples);

/// `presets show` text: the paper's parameter list for one preset.
std::string render_preset(const std::string& name);

} // namespace pwmbif
