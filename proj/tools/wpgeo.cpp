#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "wpgeo/cli.hpp"

namespace {

bool write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    return static_cast<bool>(out);
}

}  // namespace

int main(int argc, char** argv) {
    using namespace wpgeo::cli;

    CLI::App app{"Weil-Petersson geometry of genus-2 surfaces"};
    app.set_help_flag("--help", "print help");
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    std::string config_path;
    std::optional<double> h, r0;
    std::optional<int> N;
    std::optional<unsigned long long> seed;
    std::optional<std::string> out;

    const char* commands[][2] = {
        {"surface-info", "systole, area and thick/thin classification"},
        {"curvature", "curvature tensor and bound report"},
        {"sweep", "uniform constants over a Fenchel-Nielsen grid"},
        {"harmonic", "Wolf map, harmonic map and energy identities"},
    };
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->set_help_flag("--help", "print help");
        sub->add_option("--config", config_path, "JSON experiment config")->required()->check(CLI::ExistingFile);
        sub->add_option("--h", h, "mesh size");
        sub->add_option("--N", N, "Poincare series depth");
        sub->add_option("--seed", seed, "random seed");
        sub->add_option("--r0", r0, "thick-part threshold");
        sub->add_option("--out", out, "output prefix (writes .json and .csv)");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kInvalidSpec;
    }
    const std::string command = app.get_subcommands().front()->get_name();

    ExperimentConfig cfg;
    try {
        cfg = load_config(config_path);
        if (h) cfg.h = *h;
        if (N) cfg.N = *N;
        if (seed) cfg.seed = *seed;
        if (r0) cfg.r0 = *r0;
        if (out) cfg.out = *out;
        validate(cfg);
    } catch (const std::exception& e) {
        std::cerr << "wpgeo: " << e.what() << '\n';
        return exit_code_for(e);
    }

    const CommandResult r = run(command, cfg);
    if (cfg.out.empty()) {
        std::cout << r.json << '\n';
    } else {
        bool ok = write_file(cfg.out + ".json", r.json + "\n");
        if (!r.csv.empty()) {
            ok = write_file(cfg.out + ".csv", r.csv) && ok;
        }
        if (!r.map_json.empty()) {
            ok = write_file(cfg.out + ".map.json", r.map_json + "\n") && ok;
        }
        if (!ok) {
            std::cerr << "wpgeo: cannot write outputs under " << cfg.out << '\n';
            return kInvalidSpec;
        }
    }
    std::cerr << r.summary << '\n';
    return r.exit_code;
}
