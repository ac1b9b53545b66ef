#include <CLI11.hpp>
#include <iostream>

#include "dtnt/cli.hpp"
#include "dtnt/error.hpp"
#include "dtnt/version.hpp"

namespace {

using dtnt::cli::GlobalOptions;

int dispatch(const std::string& command, const std::string& config, const GlobalOptions& opts) {
    using namespace dtnt::cli;
    try {
        if (command == "generate") return run_generate(config, opts);
        if (command == "train") return run_train(config, opts);
        if (command == "track") return run_track(config, opts);
        if (command == "forecast") return run_forecast(config, opts);
        if (command == "evaluate") return run_evaluate(config, opts);
        if (command == "ablate") return run_ablate(config, opts);
        std::cerr << "unknown command: " << command << "\n";
        return kExitFailure;
    } catch (const dtnt::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitBadConfig;
    } catch (const dtnt::DatasetError& e) {
        std::cerr << "dataset error: " << e.what() << "\n";
        return kExitMissingFrames;
    } catch (const dtnt::ConfigMismatchError& e) {
        std::cerr << "shape mismatch: " << e.what() << "\n";
        return kExitShapeMismatch;
    } catch (const dtnt::ShapeError& e) {
        std::cerr << "shape mismatch: " << e.what() << "\n";
        return kExitShapeMismatch;
    } catch (const dtnt::ProtocolError& e) {
        // forecast protocol violations exit 5; evaluate misalignment exits 6
        std::cerr << "protocol error: " << e.what() << "\n";
        return command == "evaluate" ? kExitMisaligned : kExitProtocol;
    } catch (const dtnt::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"unsupervised temporal point-cloud tracking"};
    app.set_version_flag("--version", std::string("dtnt ") + dtnt::kToolVersion);
    app.require_subcommand(1);

    GlobalOptions opts;
    std::string config_path;
    std::uint64_t seed_value = 0;

    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("-c,--config", config_path, "JSON config file")->required();
        sub->add_option("--seed", seed_value, "override the config seed")
            ->each([&](const std::string&) { opts.seed = seed_value; });
        sub->add_option("--out", [&](const std::vector<std::string>& v) {
            opts.out = v.front();
            return true;
        }, "override the config output directory");
        sub->add_flag("-q,--quiet", opts.quiet, "suppress progress output");
    };

    for (const char* name : {"generate", "train", "track", "forecast", "evaluate", "ablate"}) {
        add_common(app.add_subcommand(name));
    }

    CLI11_PARSE(app, argc, argv);

    const std::string command = app.get_subcommands().front()->get_name();
    return dispatch(command, config_path, opts);
}
