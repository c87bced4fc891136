#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "qnet/cli.hpp"
#include "qnet/scenario.hpp"

int main(int argc, char **argv) {
    CLI::App app{"qnet scenario runner"};
    app.require_subcommand(1);
    std::string scenario_path;
    std::string golden;
    std::string format = "text";
    std::optional<std::uint64_t> seed;
    for (const auto &verb : qnet::cli::verbs()) {
        auto *sub = app.add_subcommand(verb);
        sub->add_option("--scenario", scenario_path, "scenario file")->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "overrides the scenario seed");
        sub->add_option("--golden", golden, "compare the report with this file");
        sub->add_option("--format", format, "report format")->check(CLI::IsMember({"text", "records"}));
    }
    CLI11_PARSE(app, argc, argv);
    const auto verb = app.get_subcommands().front()->get_name();

    try {
        auto s = qnet::cli::load_scenario(scenario_path);
        if (seed) s.seed = seed;
        auto report = qnet::cli::run_verb(verb, s);
        auto text = report.render(format == "records" ? qnet::cli::Format::records : qnet::cli::Format::text);
        std::cout << text;
        if (!golden.empty()) {
            std::ifstream f(golden);
            std::stringstream want;
            want << f.rdbuf();
            if (!f || want.str() != text) {
                std::cerr << "golden mismatch: " << golden << "\n";
                return 1;
            }
            std::cerr << "golden match: " << golden << "\n";
        }
        return report.ok ? 0 : 1;
    } catch (const qnet::Error &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
