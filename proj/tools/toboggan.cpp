// Command-line front end: toboggan --config run.json [--command NAME] [--out DIR] [--override KEY=VALUE]...

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "toboggan/toboggan.hpp"

int main(int argc, char** argv)
{
    CLI::App app{"Spectra and metrics of tobogganic Schroedinger problems"};
    std::string config_path;
    std::string command_name;
    std::string out_dir;
    std::string render_path;
    std::vector<std::string> overrides;
    app.add_option("--config", config_path, "run configuration (JSON)");
    app.add_option("--command", command_name, "spectrum, metric, shoot, compare or validate");
    app.add_option("--out", out_dir, "output directory (overrides output_dir)");
    app.add_option("--override", overrides, "KEY=VALUE with dotted keys, repeatable")->take_all();
    app.add_option("--render", render_path, "print a diagnostics.json file as a text table and exit");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : toboggan::exit_config;
    }

    using namespace toboggan;
    if (!render_path.empty()) {
        try {
            std::cout << report_render(io::read_json(render_path));
            return exit_ok;
        } catch (const error& e) {
            std::cerr << e.what() << '\n';
            return exit_code_for(e.code());
        }
    }
    if (config_path.empty()) {
        std::cerr << "ConfigError: --config is required\n";
        return exit_config;
    }

    RunConfig cfg;
    Command command{};
    try {
        cfg = load_config(config_path, overrides);
        if (!command_name.empty())
            command = parse_command(command_name);
        else if (cfg.command)
            command = *cfg.command;
        else
            throw error(errc::config, "no command given (use --command or the 'command' key)");
        if (!out_dir.empty())
            cfg.output_dir = out_dir;
    } catch (const error& e) {
        std::cerr << e.what() << '\n';
        return exit_code_for(e.code());
    }

    const RunResult result = run(cfg, command, cfg.output_dir);
    (result.exit_code == exit_ok ? std::cout : std::cerr) << to_string(command) << ": " << result.summary << '\n';
    return result.exit_code;
}
