// pwmbif command-line front end. Talks to the library exclusively through
// the C API so the shared library surface stays honest.

#include "pwmbif/pwmbif.h"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitIo = 4;

int exit_code(pwmbif_status status) {
    switch (status) {
        case PWMBIF_OK: return 0;
        case PWMBIF_ERR_INVALID: return kExitUsage;
        case PWMBIF_ERR_NUMERIC: return kExitNumeric;
        case PWMBIF_ERR_IO: return kExitIo;
    }
    return kExitNumeric;
}

[[noreturn]] void die(pwmbif_status status) {
    std::fprintf(stderr, "error: %s\n", pwmbif_last_error());
    std::exit(exit_code(status));
}

struct SpecHandle {
    pwmbif_spec* spec = nullptr;
    ~SpecHandle() { pwmbif_spec_free(spec); }
};

struct SpecFlags {
    std::string preset;
    std::string file;
    std::vector<std::string> sets;
};

void add_spec_flags(CLI::App* cmd, SpecFlags& flags) {
    auto* preset = cmd->add_option("--preset", flags.preset, "Built-in converter preset");
    auto* file = cmd->add_option("--file", flags.file, "Converter document path");
    preset->excludes(file);
    cmd->add_option("--set", flags.sets,
                    "Physical-parameter override, key=value (repeatable)");
}

void build_spec(const SpecFlags& flags, SpecHandle& handle) {
    if (flags.preset.empty() && flags.file.empty()) {
        std::fprintf(stderr, "error: one of --preset or --file is required\n");
        std::exit(kExitUsage);
    }
    std::vector<std::string> keys;
    std::vector<double> values;
    for (const std::string& item : flags.sets) {
        const size_t eq = item.find('=');
        if (eq == std::string::npos || eq == 0) {
            std::fprintf(stderr, "error: --set expects key=value, got \"%s\"\n",
                         item.c_str());
            std::exit(kExitUsage);
        }
        try {
            size_t used = 0;
            const std::string text = item.substr(eq + 1);
            values.push_back(std::stod(text, &used));
            if (used != text.size()) throw std::invalid_argument(text);
        } catch (const std::exception&) {
            std::fprintf(stderr, "error: --set %s: value is not a number\n", item.c_str());
            std::exit(kExitUsage);
        }
        keys.push_back(item.substr(0, eq));
    }
    std::vector<const char*> key_ptrs;
    for (const std::string& k : keys) key_ptrs.push_back(k.c_str());

    const pwmbif_status status =
        flags.preset.empty()
            ? pwmbif_spec_from_file(flags.file.c_str(), key_ptrs.data(), values.data(),
                                    key_ptrs.size(), &handle.spec)
            : pwmbif_spec_from_preset(flags.preset.c_str(), key_ptrs.data(), values.data(),
                                      key_ptrs.size(), &handle.spec);
    if (status != PWMBIF_OK) die(status);
}

std::string join_echo(int argc, char** argv) {
    std::string echo;
    for (int i = 0; i < argc; ++i) {
        if (i) echo += ' ';
        echo += argv[i];
    }
    return echo;
}

void print_and_free(char* report) {
    if (report) {
        std::fputs(report, stdout);
        pwmbif_string_free(report);
    }
}

std::vector<double> parse_number_list(const std::string& text, const char* flag) {
    std::vector<double> out;
    std::stringstream stream(text);
    std::string item;
    while (std::getline(stream, item, ',')) {
        try {
            size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            std::fprintf(stderr, "error: %s expects comma-separated numbers\n", flag);
            std::exit(kExitUsage);
        }
    }
    if (out.empty()) {
        std::fprintf(stderr, "error: %s expects at least one number\n", flag);
        std::exit(kExitUsage);
    }
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sampled-data bifurcation analysis of PWM DC-DC converters"};
    app.require_subcommand(1);
    const std::string echo = join_echo(argc, argv);

    // presets
    auto* presets = app.add_subcommand("presets", "List presets or show one preset");
    std::string preset_name;
    presets->add_option("name", preset_name, "Preset to show");

    // simulate
    auto* simulate = app.add_subcommand("simulate", "Iterate the cycle map, emit a CSV");
    SpecFlags sim_spec;
    add_spec_flags(simulate, sim_spec);
    std::string from_orbit, x0_text;
    bool from_averaged = false;
    int sim_cycles = 0, sim_samples = 32;
    std::string sim_out = "trajectory.csv";
    simulate->add_option("--from-orbit", from_orbit,
                         "Start on the located m-cycle orbit (e.g. m=2)");
    simulate->add_flag("--from-averaged", from_averaged,
                       "Start at the averaged-model equilibrium");
    simulate->add_option("--x0", x0_text, "Explicit start state, comma-separated");
    simulate->add_option("--cycles", sim_cycles, "Clock cycles to simulate")->required();
    simulate->add_option("--samples-per-cycle", sim_samples, "In-cycle sample count");
    simulate->add_option("--out", sim_out, "Output CSV path");

    // orbit
    auto* orbit = app.add_subcommand("orbit", "Locate a periodic orbit and classify it");
    SpecFlags orbit_spec;
    add_spec_flags(orbit, orbit_spec);
    int orbit_m = 1;
    std::vector<std::string> orbit_guesses;
    orbit->add_option("--m", orbit_m, "Orbit period in clock cycles");
    orbit->add_option("--guess", orbit_guesses,
                      "Newton guess: duty=<v> or x0=<v1,v2,...> (repeatable)");

    // eigs
    auto* eigs = app.add_subcommand("eigs", "Orbit multipliers by a chosen method");
    SpecFlags eigs_spec;
    add_spec_flags(eigs, eigs_spec);
    int eigs_m = 1;
    std::string eigs_method = "auto";
    eigs->add_option("--m", eigs_m, "Orbit period in clock cycles");
    eigs->add_option("--method", eigs_method, "auto, closed, or fd")
        ->check(CLI::IsMember({"auto", "closed", "fd"}));

    // sweep
    auto* sweep = app.add_subcommand("sweep", "Eigenvalue locus over a parameter range");
    SpecFlags sweep_spec;
    add_spec_flags(sweep, sweep_spec);
    std::string sweep_param = "vs";
    double sweep_from = 0.0, sweep_to = 0.0;
    int sweep_steps = 0, sweep_m = 1;
    std::string sweep_out = "sweep.csv";
    sweep->add_option("--param", sweep_param, "Physical parameter to march");
    sweep->add_option("--from", sweep_from, "Range start")->required();
    sweep->add_option("--to", sweep_to, "Range end")->required();
    sweep->add_option("--steps", sweep_steps, "Number of sweep points")->required();
    sweep->add_option("--m", sweep_m, "Orbit period in clock cycles");
    sweep->add_option("--out", sweep_out, "Output CSV path");

    // locate
    auto* locate = app.add_subcommand("locate", "Bisect a bifurcation point");
    SpecFlags locate_spec;
    add_spec_flags(locate, locate_spec);
    std::string locate_param = "vs", locate_kind;
    std::vector<double> bracket;
    int locate_m = 1;
    locate->add_option("--param", locate_param, "Physical parameter to march");
    locate->add_option("--kind", locate_kind, "pd, sn, or ns")
        ->required()
        ->check(CLI::IsMember({"pd", "sn", "ns"}));
    locate->add_option("--bracket", bracket, "Bracketing parameter pair")
        ->required()
        ->expected(2);
    locate->add_option("--m", locate_m, "Orbit period in clock cycles");

    // bifdiag
    auto* bifdiag = app.add_subcommand("bifdiag", "Brute-force bifurcation diagram CSV");
    SpecFlags bif_spec;
    add_spec_flags(bifdiag, bif_spec);
    std::string bif_param = "vs", bif_inherit = "none", bif_out = "bifdiag.csv";
    double bif_from = 0.0, bif_to = 0.0;
    int bif_steps = 201, bif_burn = 500, bif_record = 64;
    bifdiag->add_option("--param", bif_param, "Physical parameter to march");
    bifdiag->add_option("--from", bif_from, "Range start")->required();
    bifdiag->add_option("--to", bif_to, "Range end")->required();
    bifdiag->add_option("--steps", bif_steps, "Number of parameter points");
    bifdiag->add_option("--burn-in", bif_burn, "Cycles discarded before recording");
    bifdiag->add_option("--record", bif_record, "Stroboscopic samples recorded per point");
    bifdiag->add_option("--inherit", bif_inherit, "none, up, or down")
        ->check(CLI::IsMember({"none", "up", "down"}));
    bifdiag->add_option("--out", bif_out, "Output CSV path");

    // averaged
    auto* averaged = app.add_subcommand("averaged", "State-space averaged model analysis");
    SpecFlags avg_spec;
    add_spec_flags(averaged, avg_spec);
    double avg_duty = -1.0;
    averaged->add_option("--duty", avg_duty,
                         "Duty ratio D_c; omitted derives the consistent duty");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    char* report = nullptr;
    pwmbif_status status = PWMBIF_OK;

    if (presets->parsed()) {
        status = pwmbif_cmd_presets(preset_name.empty() ? nullptr : preset_name.c_str(),
                                    &report);
    } else if (simulate->parsed()) {
        SpecHandle handle;
        build_spec(sim_spec, handle);
        std::string source = "zero";
        int m = 1;
        std::vector<double> x0;
        if (!from_orbit.empty()) {
            source = "orbit";
            std::string text = from_orbit;
            if (text.rfind("m=", 0) == 0) text = text.substr(2);
            try {
                m = std::stoi(text);
            } catch (const std::exception&) {
                std::fprintf(stderr, "error: --from-orbit expects m=<cycles>\n");
                return kExitUsage;
            }
        } else if (from_averaged) {
            source = "averaged";
        } else if (!x0_text.empty()) {
            source = "explicit";
            x0 = parse_number_list(x0_text, "--x0");
        }
        status = pwmbif_cmd_simulate(handle.spec, echo.c_str(), source.c_str(),
                                     x0.empty() ? nullptr : x0.data(), m, sim_cycles,
                                     sim_samples, sim_out.c_str(), &report);
    } else if (orbit->parsed()) {
        SpecHandle handle;
        build_spec(orbit_spec, handle);
        std::vector<double> guess_x0;
        double guess_duty = 0.0;
        bool has_duty = false;
        for (const std::string& g : orbit_guesses) {
            if (g.rfind("duty=", 0) == 0) {
                guess_duty = std::atof(g.c_str() + 5);
                has_duty = true;
            } else if (g.rfind("x0=", 0) == 0) {
                guess_x0 = parse_number_list(g.substr(3), "--guess x0=");
            } else {
                std::fprintf(stderr, "error: --guess expects duty=<v> or x0=<v1,...>\n");
                return kExitUsage;
            }
        }
        status = pwmbif_cmd_orbit(handle.spec, echo.c_str(), orbit_m,
                                  guess_x0.empty() ? nullptr : guess_x0.data(),
                                  has_duty ? &guess_duty : nullptr, &report);
    } else if (eigs->parsed()) {
        SpecHandle handle;
        build_spec(eigs_spec, handle);
        status = pwmbif_cmd_eigs(handle.spec, echo.c_str(), eigs_m, eigs_method.c_str(),
                                 &report);
    } else if (sweep->parsed()) {
        SpecHandle handle;
        build_spec(sweep_spec, handle);
        status = pwmbif_cmd_sweep(handle.spec, echo.c_str(), sweep_param.c_str(),
                                  sweep_from, sweep_to, sweep_steps, sweep_m,
                                  sweep_out.c_str(), &report);
    } else if (locate->parsed()) {
        SpecHandle handle;
        build_spec(locate_spec, handle);
        status = pwmbif_cmd_locate(handle.spec, echo.c_str(), locate_param.c_str(),
                                   locate_kind.c_str(), bracket[0], bracket[1], locate_m,
                                   &report);
    } else if (bifdiag->parsed()) {
        SpecHandle handle;
        build_spec(bif_spec, handle);
        status = pwmbif_cmd_bifdiag(handle.spec, echo.c_str(), bif_param.c_str(), bif_from,
                                    bif_to, bif_steps, bif_burn, bif_record,
                                    bif_inherit.c_str(), bif_out.c_str(), &report);
    } else if (averaged->parsed()) {
        SpecHandle handle;
        build_spec(avg_spec, handle);
        status = pwmbif_cmd_averaged(handle.spec, echo.c_str(), avg_duty, &report);
    }

    print_and_free(report);
    if (status != PWMBIF_OK) die(status);
    return 0;
}
