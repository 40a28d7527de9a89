#include "pwmbif/errors.hpp"
#include "pwmbif/io.hpp"

#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

using namespace pwmbif;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream text;
    text << in.rdbuf();
    return text.str();
}

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name) : path("/tmp/pwmbif_test_" + name) {}
    ~TempFile() { std::remove(path.c_str()); }
};

} // namespace

TEST_CASE("documents: every preset round-trips bit-exactly") {
    for (const std::string& name : preset_names()) {
        CAPTURE(name);
        const ConverterDocument doc = document_for_preset(name, {});
        const std::string text = serialize_document(doc);
        const ConverterDocument back = parse_document(text);
        CHECK(serialize_document(back) == text);
        CHECK(document_digest(back) == document_digest(doc));

        // The rebuilt spec matches the direct preset exactly.
        const ConverterSpec a = build_spec(doc);
        const ConverterSpec b = build_spec(back);
        CHECK((a.A1 - b.A1).cwiseAbs().maxCoeff() == 0.0);
        CHECK((a.B2 - b.B2).cwiseAbs().maxCoeff() == 0.0);
        CHECK(a.T == b.T);
    }
}

TEST_CASE("documents: explicit-matrix form round-trips and validates") {
    ConverterDocument doc;
    doc.explicit_spec = make_preset(PresetName::NsBuck, {{"vs", 33.0}});
    const std::string text = serialize_document(doc);
    const ConverterDocument back = parse_document(text);
    REQUIRE(back.explicit_spec.has_value());
    CHECK(serialize_document(back) == text);
    CHECK(back.explicit_spec->u(0) == 33.0);
    CHECK(back.explicit_spec->is_ramp());
}

TEST_CASE("documents: unknown fields and bad schema are rejected") {
    CHECK_THROWS_AS(parse_document(R"({"schema_version": 1, "preset": "pd_buck",
                                       "extra": 3})"),
                    IoError);
    CHECK_THROWS_AS(parse_document(R"({"schema_version": 2, "preset": "pd_buck"})"),
                    IoError);
    CHECK_THROWS_AS(parse_document(R"({"schema_version": 1})"), IoError);
    CHECK_THROWS_AS(parse_document(R"({"schema_version": 1, "preset": "nope"})"),
                    InvalidArgument);
    CHECK_THROWS_AS(parse_document("not json at all"), IoError);

    // Dimension errors inside an explicit document.
    ConverterDocument doc;
    doc.explicit_spec = make_preset(PresetName::PdBuck);
    std::string text = serialize_document(doc);
    const auto pos = text.find("\"B1\": [");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 7, "\"B1\": [[0.0],");
    CHECK_THROWS_AS(parse_document(text), IoError);
}

TEST_CASE("documents: digest distinguishes different converters") {
    const auto base = document_for_preset("pd_buck", {});
    const auto changed = document_for_preset("pd_buck", {{"vs", 26.0}});
    CHECK(document_digest(base) != document_digest(changed));
    // Stating a default explicitly yields the canonical digest.
    const auto explicit_default = document_for_preset("pd_buck", {{"vs", 20.0}});
    CHECK(document_digest(base) == document_digest(explicit_default));
}

TEST_CASE("build_family: preset parameters sweep, unknown names rejected") {
    const auto doc = document_for_preset("pd_buck", {{"L", 10e-3}});
    const SpecFamily family = build_family(doc, "vs");
    const ConverterSpec at26 = family(26.0);
    CHECK(at26.u(0) == 26.0);
    CHECK(at26.B2(0, 0) == doctest::Approx(100.0));   // the L override sticks
    CHECK_THROWS_AS(build_family(doc, "Ip"), InvalidArgument);
}

TEST_CASE("format_number: 12 significant digits, plain decimal") {
    CHECK(format_number(0.5) == "0.5");
    CHECK(format_number(24.5165728265) == "24.5165728265");
    CHECK(format_number(-8.574e-4) == "-0.0008574");
    CHECK(format_number(1.0 / 3.0) == "0.333333333333");
}

TEST_CASE("reports: deterministic rendering") {
    Report report;
    report.add("command", "orbit --preset pd_buck");
    report.add("value", 24.5);
    report.warn("something worth knowing");
    const std::string a = report.render();
    const std::string b = report.render();
    CHECK(a == b);
    CHECK(a == "command: orbit --preset pd_buck\nvalue: 24.5\n"
               "warning: something worth knowing\n");
}

TEST_CASE("csv: trajectory header and shape") {
    TempFile tmp("traj.csv");
    std::vector<TrajectorySample> samples(2);
    samples[0].t = 0.0;
    samples[0].x = Vector::Zero(2);
    samples[0].v_o = 1.5;
    samples[0].stage = 1;
    samples[1].t = 2e-4;
    samples[1].x = Vector::Ones(2);
    samples[1].v_o = 2.5;
    samples[1].stage = 2;
    write_trajectory_csv(tmp.path, samples, 2);
    const std::string text = slurp(tmp.path);
    CHECK(text == "t_seconds,x1,x2,v_o_volts,stage\n"
                  "0,0,0,1.5,1\n"
                  "0.0002,1,1,2.5,2\n");
}

TEST_CASE("csv: bifdiag rows carry the sample index") {
    TempFile tmp("bif.csv");
    AttractorSample s;
    s.param = 19.5;
    s.v_o = {14.0, 14.1};
    write_bifdiag_csv(tmp.path, {s});
    CHECK(slurp(tmp.path) == "param,sample_index,v_o_volts\n"
                             "19.5,0,14\n"
                             "19.5,1,14.1\n");
}

TEST_CASE("csv: sweep header matches the eigenvalue count and write errors throw") {
    TempFile tmp("sweep.csv");
    SweepRecord rec;
    rec.param = 20.0;
    rec.eigenvalues = {Complex(0.5, 0.25), Complex(0.5, -0.25)};
    rec.spectral_radius = 0.559016994375;
    rec.status = "ok";
    PeriodicOrbit orbit;
    orbit.on_duty = {0.5};
    rec.orbit = orbit;
    write_sweep_csv(tmp.path, {rec}, 2);
    const std::string text = slurp(tmp.path);
    CHECK(text.rfind("param,re_lambda_1,im_lambda_1,re_lambda_2,im_lambda_2,"
                     "spectral_radius,duty,status\n", 0) == 0);
    CHECK(text.find("20,0.5,0.25,0.5,-0.25,0.559016994375,0.5,ok\n") != std::string::npos);

    CHECK_THROWS_AS(write_sweep_csv("/nonexistent-dir/out.csv", {rec}, 2), IoError);
}

TEST_CASE("render_preset: shows the paper parameter list") {
    const std::string text = render_preset("pd_buck");
    CHECK(text.find("preset: pd_buck\n") != std::string::npos);
    CHECK(text.find("T: 0.0004\n") != std::string::npos);
    CHECK(text.find("g1: 8.4\n") != std::string::npos);
    CHECK(text.find("Vl: 3.8\n") != std::string::npos);
    CHECK(text.find("Vh: 8.2\n") != std::string::npos);
    const std::string sn = render_preset("sn_buck");
    CHECK(sn.find("ki: -0.0008574\n") != std::string::npos);
    CHECK(sn.find("kv: 5.53e-05\n") != std::string::npos);
    CHECK(sn.find("Ip: 0.6785\n") != std::string::npos);
    CHECK(sn.find("Vp: 14.0263\n") != std::string::npos);
}
