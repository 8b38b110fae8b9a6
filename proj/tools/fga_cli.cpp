#include "fga/experiments.hpp"
#include "fga/parallel.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"Frozen Gaussian approximation for isotropic elastic waves"};
    std::string mode, config, out = ".";
    int threads = 0;
    app.add_option("mode", mode, "decompose | propagate | reconstruct | converge | validate")
        ->required()
        ->check(CLI::IsMember({"decompose", "propagate", "reconstruct", "converge", "validate"}));
    app.add_option("--config", config, "run configuration file")->required();
    app.add_option("--out", out, "output directory");
    app.add_option("--threads", threads, "worker threads, 0 for all")->check(CLI::NonNegativeNumber);
    app.set_version_flag("--version", fga::kVersion);
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : fga::kExitConfig;
    }
    fga::set_num_threads(threads);

    fga::FgaConfig cfg;
    try {
        cfg = fga::load_config(config);
    } catch (const fga::Error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return fga::kExitConfig;
    }

    fga::RunReport rep;
    try {
        rep = fga::run_mode(mode, cfg);
    } catch (const fga::Error& e) {
        std::cerr << mode << ": " << e.what() << '\n';
        switch (e.code()) {
            case fga::ErrorCode::VariableMediumUnsupported: return fga::kExitUnsupported;
            case fga::ErrorCode::ConfigError:
            case fga::ErrorCode::MeshTooCoarse:
            case fga::ErrorCode::NyquistViolation: return fga::kExitConfig;
            default: return 1;
        }
    }

    try {
        std::filesystem::create_directories(out);
        for (const auto& f : rep.files) fga::write_text((std::filesystem::path(out) / f.name).string(), f.bytes);
    } catch (const std::exception& e) {
        std::cerr << "output error: " << e.what() << '\n';
        return 1;
    }
    std::cout << mode << " config_hash=" << fga::hash_hex(cfg.hash) << " version=" << fga::kVersion << '\n';
    for (const auto& f : rep.files) std::cout << "  wrote " << f.name << '\n';
    for (const auto& m : rep.messages) std::cout << "  " << m << '\n';
    return rep.exit_code;
}
