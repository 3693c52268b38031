#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "ksd/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"stationary kinetic solver and verification harness"};
    app.require_subcommand(1);

    std::string config_path, output_dir;
    int threads = 0;
    bool verbose = false;

    CLI::App* run = app.add_subcommand("run", "execute the scenario described by a config file");
    run->add_option("--config", config_path, "path to the JSON config")->required();
    run->add_option("--output-dir", output_dir, "overrides config output_dir");
    run->add_option("--threads", threads, "worker pool size (default: hardware)");
    run->add_flag("--verbose", verbose, "print every check");

    CLI::App* schema = app.add_subcommand("schema", "print the JSON config schema");

    CLI11_PARSE(app, argc, argv);

    if (schema->parsed()) {
        std::cout << ksd::config_schema();
        return 0;
    }

    if (threads > 0) ksd::set_thread_count(threads);
    try {
        ksd::RunConfig cfg = ksd::load_config(config_path);
        if (!output_dir.empty()) cfg.output_dir = output_dir;
        return ksd::run_scenario(cfg, verbose);
    } catch (const ksd::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
