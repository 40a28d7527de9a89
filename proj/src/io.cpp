#include "pwmbif/io.hpp"
#include "pwmbif/errors.hpp"

#include <json.hpp>

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace pwmbif {

using json = nlohmann::ordered_json;

namespace {

void reject_unknown(const json& obj, const std::vector<std::string>& allowed,
                    const std::string& where) {
    for (const auto& item : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end())
            throw IoError("unknown field \"" + item.key() + "\" in " + where);
    }
}

double number_at(const json& obj, const std::string& key, const std::string& where) {
    if (!obj.contains(key))
        throw IoError("missing field \"" + key + "\" in " + where);
    if (!obj[key].is_number())
        throw IoError("field \"" + key + "\" in " + where + " must be a number");
    return obj[key].get<double>();
}

Matrix matrix_at(const json& obj, const std::string& key, int rows, int cols,
                 const std::string& where) {
    if (!obj.contains(key))
        throw IoError("missing field \"" + key + "\" in " + where);
    const json& arr = obj[key];
    if (!arr.is_array() || static_cast<int>(arr.size()) != rows)
        throw IoError("field \"" + key + "\" in " + where + " must be a " +
                      std::to_string(rows) + "x" + std::to_string(cols) + " array");
    Matrix out(rows, cols);
    for (int i = 0; i < rows; ++i) {
        const json& row = arr[static_cast<size_t>(i)];
        if (!row.is_array() || static_cast<int>(row.size()) != cols)
            throw IoError("row " + std::to_string(i) + " of \"" + key + "\" in " + where +
                          " must have " + std::to_string(cols) + " entries");
        for (int j = 0; j < cols; ++j) {
            const json& cell = row[static_cast<size_t>(j)];
            if (!cell.is_number())
                throw IoError("non-numeric entry in \"" + key + "\" in " + where);
            out(i, j) = cell.get<double>();
        }
    }
    return out;
}

Vector vector_at(const json& obj, const std::string& key, int n, const std::string& where) {
    if (!obj.contains(key))
        throw IoError("missing field \"" + key + "\" in " + where);
    const json& arr = obj[key];
    if (!arr.is_array() || static_cast<int>(arr.size()) != n)
        throw IoError("field \"" + key + "\" in " + where + " must be a length-" +
                      std::to_string(n) + " array");
    Vector out(n);
    for (int i = 0; i < n; ++i) {
        const json& cell = arr[static_cast<size_t>(i)];
        if (!cell.is_number())
            throw IoError("non-numeric entry in \"" + key + "\" in " + where);
        out(i) = cell.get<double>();
    }
    return out;
}

json matrix_json(const Matrix& m) {
    json rows = json::array();
    for (int i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

json vector_json(const Vector& v) {
    json arr = json::array();
    for (int i = 0; i < v.size(); ++i) arr.push_back(v(i));
    return arr;
}

json row_json(const RowVector& v) {
    json arr = json::array();
    for (int i = 0; i < v.size(); ++i) arr.push_back(v(i));
    return arr;
}

ConverterSpec parse_converter(const json& conv) {
    reject_unknown(conv,
                   {"N", "A1", "A2", "B1", "B2", "E1", "E2", "u_volts", "T_seconds",
                    "control"},
                   "converter");
    if (!conv.contains("N") || !conv["N"].is_number_integer())
        throw IoError("converter.N must be an integer");
    const int N = conv["N"].get<int>();
    if (N < 1 || N > 8)
        throw IoError("converter.N out of range (1..8)");

    ConverterSpec spec;
    spec.N = N;
    spec.A1 = matrix_at(conv, "A1", N, N, "converter");
    spec.A2 = matrix_at(conv, "A2", N, N, "converter");
    spec.B1 = matrix_at(conv, "B1", N, 2, "converter");
    spec.B2 = matrix_at(conv, "B2", N, 2, "converter");
    spec.E1 = vector_at(conv, "E1", N, "converter").transpose();
    spec.E2 = vector_at(conv, "E2", N, "converter").transpose();
    spec.u = vector_at(conv, "u_volts", 2, "converter");
    spec.T = number_at(conv, "T_seconds", "converter");

    if (!conv.contains("control") || !conv["control"].is_object())
        throw IoError("converter.control must be an object");
    const json& ctl = conv["control"];
    if (!ctl.contains("type") || !ctl["type"].is_string())
        throw IoError("converter.control.type must be a string");
    const std::string type = ctl["type"].get<std::string>();
    if (type == "ramp") {
        reject_unknown(ctl, {"type", "C", "D", "ramp_v_low_volts", "ramp_v_high_volts"},
                       "converter.control");
        RampControl rc;
        rc.C = vector_at(ctl, "C", N, "converter.control").transpose();
        rc.D = vector_at(ctl, "D", 2, "converter.control").transpose();
        rc.ramp.v_low = number_at(ctl, "ramp_v_low_volts", "converter.control");
        rc.ramp.v_high = number_at(ctl, "ramp_v_high_volts", "converter.control");
        rc.ramp.period = spec.T;
        spec.control = std::move(rc);
    } else if (type == "discrete_duty") {
        reject_unknown(ctl, {"type", "base_duty", "K", "x_ref"}, "converter.control");
        DiscreteDutyControl dc;
        dc.base_duty = number_at(ctl, "base_duty", "converter.control");
        dc.K = vector_at(ctl, "K", N, "converter.control").transpose();
        dc.x_ref = vector_at(ctl, "x_ref", N, "converter.control");
        spec.control = std::move(dc);
    } else {
        throw IoError("converter.control.type must be \"ramp\" or \"discrete_duty\"");
    }
    spec.validate();
    return spec;
}

json converter_json(const ConverterSpec& spec) {
    json conv;
    conv["N"] = spec.N;
    conv["A1"] = matrix_json(spec.A1);
    conv["A2"] = matrix_json(spec.A2);
    conv["B1"] = matrix_json(spec.B1);
    conv["B2"] = matrix_json(spec.B2);
    conv["E1"] = row_json(spec.E1);
    conv["E2"] = row_json(spec.E2);
    conv["u_volts"] = vector_json(spec.u);
    conv["T_seconds"] = spec.T;
    json ctl;
    if (spec.is_ramp()) {
        const RampControl& rc = spec.ramp_control();
        ctl["type"] = "ramp";
        ctl["C"] = row_json(rc.C);
        ctl["D"] = row_json(rc.D);
        ctl["ramp_v_low_volts"] = rc.ramp.v_low;
        ctl["ramp_v_high_volts"] = rc.ramp.v_high;
    } else {
        const DiscreteDutyControl& dc = spec.duty_control();
        ctl["type"] = "discrete_duty";
        ctl["base_duty"] = dc.base_duty;
        ctl["K"] = row_json(dc.K);
        ctl["x_ref"] = vector_json(dc.x_ref);
    }
    conv["control"] = std::move(ctl);
    return conv;
}

} // namespace

ConverterDocument parse_document(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::exception& e) {
        throw IoError(std::string("converter document parse error: ") + e.what());
    }
    if (!root.is_object())
        throw IoError("converter document must be an object");
    reject_unknown(root, {"schema_version", "preset", "overrides", "converter"}, "document");
    if (!root.contains("schema_version") || !root["schema_version"].is_number_integer())
        throw IoError("schema_version must be an integer");

    ConverterDocument doc;
    doc.schema_version = root["schema_version"].get<int>();
    if (doc.schema_version != 1)
        throw IoError("unsupported schema_version " + std::to_string(doc.schema_version));

    const bool has_preset = root.contains("preset");
    const bool has_converter = root.contains("converter");
    if (has_preset == has_converter)
        throw IoError("document must carry exactly one of \"preset\" or \"converter\"");

    if (has_preset) {
        if (!root["preset"].is_string())
            throw IoError("preset must be a string");
        doc.preset = root["preset"].get<std::string>();
        preset_from_string(*doc.preset);   // validate the name early
        if (root.contains("overrides")) {
            if (!root["overrides"].is_object())
                throw IoError("overrides must be an object");
            for (const auto& item : root["overrides"].items()) {
                if (!item.value().is_number())
                    throw IoError("override \"" + item.key() + "\" must be a number");
                doc.overrides[item.key()] = item.value().get<double>();
            }
        }
    } else {
        if (root.contains("overrides"))
            throw IoError("overrides are only valid with a preset document");
        doc.explicit_spec = parse_converter(root["converter"]);
    }
    return doc;
}

ConverterDocument load_document(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open converter document: " + path);
    std::ostringstream text;
    text << in.rdbuf();
    return parse_document(text.str());
}

std::string serialize_document(const ConverterDocument& doc) {
    json root;
    root["schema_version"] = doc.schema_version;
    if (doc.preset) {
        root["preset"] = *doc.preset;
        json overrides;
        // Canonical form lists every physical parameter with defaults applied,
        // so two routes to the same converter share one digest.
        for (const auto& [key, value] :
             preset_parameters(preset_from_string(*doc.preset), doc.overrides))
            overrides[key] = value;
        root["overrides"] = std::move(overrides);
    } else if (doc.explicit_spec) {
        root["converter"] = converter_json(*doc.explicit_spec);
    } else {
        throw InvalidArgument("serialize_document: empty document");
    }
    return root.dump(2) + "\n";
}

std::string document_digest(const ConverterDocument& doc) {
    const std::string text = serialize_document(doc);
    uint64_t hash = 0xcbf29ce484222325ull;
    for (unsigned char c : text) {
        hash ^= c;
        hash *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, hash);
    return buf;
}

ConverterDocument document_for_preset(const std::string& preset,
                                      const std::map<std::string, double>& overrides) {
    preset_from_string(preset);
    ConverterDocument doc;
    doc.preset = preset;
    doc.overrides = overrides;
    return doc;
}

ConverterSpec build_spec(const ConverterDocument& doc) {
    if (doc.preset)
        return make_preset(preset_from_string(*doc.preset), doc.overrides);
    if (doc.explicit_spec)
        return *doc.explicit_spec;
    throw InvalidArgument("build_spec: empty document");
}

SpecFamily build_family(const ConverterDocument& doc, const std::string& param) {
    if (doc.preset) {
        const PresetName name = preset_from_string(*doc.preset);
        // Reject unknown parameter names up front, not at the first step.
        bool known = false;
        for (const auto& [key, value] : preset_parameters(name))
            if (key == param) known = true;
        if (!known)
            throw InvalidArgument("unknown sweep parameter \"" + param + "\" for preset " +
                                  *doc.preset);
        auto overrides = doc.overrides;
        return [name, overrides, param](double value) {
            auto local = overrides;
            local[param] = value;
            return make_preset(name, local);
        };
    }
    if (param != "vs")
        throw InvalidArgument("explicit-matrix documents only sweep \"vs\"");
    const ConverterSpec base = *doc.explicit_spec;
    return [base, param](double value) {
        ConverterSpec spec = base;
        spec.u(0) = value;
        return spec;
    };
}

std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::string format_vector(const Vector& v) {
    std::string out = "(";
    for (int i = 0; i < v.size(); ++i) {
        if (i) out += ", ";
        out += format_number(v(i));
    }
    return out + ")";
}

std::string format_complex(const Complex& c) {
    if (c.imag() == 0.0) return format_number(c.real());
    const std::string sign = c.imag() < 0.0 ? " - " : " + ";
    return format_number(c.real()) + sign + format_number(std::abs(c.imag())) + "i";
}

void Report::add(const std::string& key, const std::string& value) {
    fields.emplace_back(key, value);
}

void Report::add(const std::string& key, double value) {
    fields.emplace_back(key, format_number(value));
}

void Report::warn(const std::string& message) {
    warnings.push_back(message);
}

std::string Report::render() const {
    std::string out;
    for (const auto& [key, value] : fields)
        out += key + ": " + value + "\n";
    for (const std::string& w : warnings)
        out += "warning: " + w + "\n";
    return out;
}

namespace {

std::ofstream open_csv(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot open output file: " + path);
    return out;
}

void finish_csv(std::ofstream& out, const std::string& path) {
    out.flush();
    if (!out)
        throw IoError("write failure on output file: " + path);
}

} // namespace

void write_trajectory_csv(const std::string& path, const std::vector<TrajectorySample>& samples,
                          int state_dim) {
    std::ofstream out = open_csv(path);
    out << "t_seconds";
    for (int i = 1; i <= state_dim; ++i) out << ",x" << i;
    out << ",v_o_volts,stage\n";
    for (const TrajectorySample& s : samples) {
        out << format_number(s.t);
        for (int i = 0; i < state_dim; ++i) out << ',' << format_number(s.x(i));
        out << ',' << format_number(s.v_o) << ',' << s.stage << '\n';
    }
    finish_csv(out, path);
}

void write_sweep_csv(const std::string& path, const std::vector<SweepRecord>& records,
                     int state_dim) {
    std::ofstream out = open_csv(path);
    out << "param";
    for (int i = 1; i <= state_dim; ++i) out << ",re_lambda_" << i << ",im_lambda_" << i;
    out << ",spectral_radius,duty,status\n";
    for (const SweepRecord& rec : records) {
        out << format_number(rec.param);
        for (int i = 0; i < state_dim; ++i) {
            if (i < static_cast<int>(rec.eigenvalues.size()))
                out << ',' << format_number(rec.eigenvalues[static_cast<size_t>(i)].real())
                    << ',' << format_number(rec.eigenvalues[static_cast<size_t>(i)].imag());
            else
                out << ",,";
        }
        if (rec.orbit)
            out << ',' << format_number(rec.spectral_radius) << ','
                << format_number(rec.orbit->on_duty.front());
        else
            out << ",,";
        out << ',' << rec.status << '\n';
    }
    finish_csv(out, path);
}

void write_bifdiag_csv(const std::string& path, const std::vector<AttractorSample>& samples) {
    std::ofstream out = open_csv(path);
    out << "param,sample_index,v_o_volts\n";
    for (const AttractorSample& s : samples)
        for (size_t i = 0; i < s.v_o.size(); ++i)
            out << format_number(s.param) << ',' << i << ',' << format_number(s.v_o[i])
                << '\n';
    finish_csv(out, path);
}

std::string render_preset(const std::string& name) {
    const PresetName preset = preset_from_string(name);
    Report report;
    report.add("preset", name);
    for (const auto& [key, value] : preset_parameters(preset))
        report.add(key, value);
    return report.render();
}

} // namespace pwmbif
