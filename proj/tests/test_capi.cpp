#include "pwmbif/pwmbif.h"

#include <doctest.h>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <initializer_list>
#include <string>
#include <utility>
#include <vector>

namespace {

struct Handle {
    pwmbif_spec* spec = nullptr;
    ~Handle() { pwmbif_spec_free(spec); }
};

struct OwnedString {
    char* s = nullptr;
    ~OwnedString() { pwmbif_string_free(s); }
    std::string str() const { return s ? s : ""; }
};

Handle preset(const char* name, std::initializer_list<std::pair<const char*, double>> sets = {}) {
    std::vector<const char*> keys;
    std::vector<double> values;
    for (const auto& [k, v] : sets) {
        keys.push_back(k);
        values.push_back(v);
    }
    Handle h;
    REQUIRE(pwmbif_spec_from_preset(name, keys.data(), values.data(), keys.size(),
                                    &h.spec) == PWMBIF_OK);
    return h;
}

} // namespace

TEST_CASE("capi: invalid preset surfaces a message and INVALID status") {
    pwmbif_spec* spec = nullptr;
    CHECK(pwmbif_spec_from_preset("boost", nullptr, nullptr, 0, &spec) ==
          PWMBIF_ERR_INVALID);
    CHECK(spec == nullptr);
    CHECK(std::strlen(pwmbif_last_error()) > 0);
}

TEST_CASE("capi: spec accessors") {
    Handle h = preset("ns_buck");
    int n = 0;
    REQUIRE(pwmbif_spec_dim(h.spec, &n) == PWMBIF_OK);
    CHECK(n == 3);
    OwnedString digest;
    REQUIRE(pwmbif_spec_digest(h.spec, &digest.s) == PWMBIF_OK);
    CHECK(digest.str().size() == 16);
    OwnedString text;
    REQUIRE(pwmbif_spec_serialize(h.spec, &text.s) == PWMBIF_OK);
    CHECK(text.str().find("\"preset\": \"ns_buck\"") != std::string::npos);
}

TEST_CASE("capi: presets command lists and shows") {
    OwnedString list;
    REQUIRE(pwmbif_cmd_presets(nullptr, &list.s) == PWMBIF_OK);
    CHECK(list.str() == "pd_buck\nsn_buck\nns_buck\n");
    OwnedString one;
    REQUIRE(pwmbif_cmd_presets("sn_buck", &one.s) == PWMBIF_OK);
    CHECK(one.str().find("base_duty: 0.3") != std::string::npos);
    CHECK(pwmbif_cmd_presets("nope", &one.s) == PWMBIF_ERR_INVALID);
}

TEST_CASE("capi: orbit report is deterministic and carries the expected fields") {
    Handle h = preset("ns_buck", {{"vs", 30.0}});
    OwnedString a, b;
    REQUIRE(pwmbif_cmd_orbit(h.spec, "echo", 1, nullptr, nullptr, &a.s) == PWMBIF_OK);
    REQUIRE(pwmbif_cmd_orbit(h.spec, "echo", 1, nullptr, nullptr, &b.s) == PWMBIF_OK);
    CHECK(a.str() == b.str());
    CHECK(a.str().find("command: echo\n") != std::string::npos);
    CHECK(a.str().find("spec_digest: ") != std::string::npos);
    CHECK(a.str().find("x0: (0.25") != std::string::npos);
    CHECK(a.str().find("classification: stable") != std::string::npos);
    CHECK(a.str().find("closed_vs_fd_max_rel: ") != std::string::npos);
}

TEST_CASE("capi: duty guess reaches the unstable sn_buck orbit") {
    Handle h = preset("sn_buck", {{"vs", 19.9}});
    const double duty = 0.8;
    OwnedString report;
    REQUIRE(pwmbif_cmd_orbit(h.spec, "echo", 1, nullptr, &duty, &report.s) == PWMBIF_OK);
    CHECK(report.str().find("on_duty_1: 0.79") != std::string::npos);
    CHECK(report.str().find("classification: unstable") != std::string::npos);
}

TEST_CASE("capi: simulate validates counts before writing") {
    Handle h = preset("pd_buck");
    const char* path = "/tmp/pwmbif_capi_traj.csv";
    std::remove(path);
    OwnedString report;
    CHECK(pwmbif_cmd_simulate(h.spec, "echo", "zero", nullptr, 1, 0, 8, path, &report.s) ==
          PWMBIF_ERR_INVALID);
    CHECK(!std::ifstream(path).good());   // usage error leaves no file behind

    REQUIRE(pwmbif_cmd_simulate(h.spec, "echo", "zero", nullptr, 1, 3, 4, path,
                                &report.s) == PWMBIF_OK);
    std::ifstream in(path);
    REQUIRE(in.good());
    std::string header;
    std::getline(in, header);
    CHECK(header == "t_seconds,x1,x2,v_o_volts,stage");
    int rows = 0;
    for (std::string line; std::getline(in, line);) ++rows;
    CHECK(rows == 12);
    std::remove(path);
}

TEST_CASE("capi: locate matches the paper through the C surface") {
    Handle h = preset("pd_buck");
    OwnedString report;
    REQUIRE(pwmbif_cmd_locate(h.spec, "echo", "vs", "pd", 24.0, 25.0, 1, &report.s) ==
            PWMBIF_OK);
    CHECK(report.str().find("kind: period_doubling") != std::string::npos);
    CHECK(report.str().find("value: 24.51") != std::string::npos);
    CHECK(pwmbif_cmd_locate(h.spec, "echo", "vs", "zz", 24.0, 25.0, 1, &report.s) ==
          PWMBIF_ERR_INVALID);
    // No crossing in the bracket: numeric failure, not usage.
    CHECK(pwmbif_cmd_locate(h.spec, "echo", "vs", "pd", 15.0, 18.0, 1, &report.s) ==
          PWMBIF_ERR_NUMERIC);
}

TEST_CASE("capi: averaged agreement fields") {
    Handle h = preset("pd_buck", {{"vs", 24.5}});
    OwnedString report;
    REQUIRE(pwmbif_cmd_averaged(h.spec, "echo", -1.0, &report.s) == PWMBIF_OK);
    CHECK(report.str().find("averaged_verdict: stable") != std::string::npos);
    CHECK(report.str().find("warning: sampled-data analysis disagrees") !=
          std::string::npos);
}

TEST_CASE("capi: io failure maps to the IO status") {
    Handle h = preset("pd_buck");
    OwnedString report;
    CHECK(pwmbif_cmd_simulate(h.spec, "echo", "zero", nullptr, 1, 2, 4,
                              "/nonexistent-dir/x.csv", &report.s) == PWMBIF_ERR_IO);
}
