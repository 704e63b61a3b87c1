#include <CLI11.hpp>
#include <filesystem>
#include <iostream>

#include "cmf/types.hpp"
#include "commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"cmfnet: weakly-supervised cross-modal 3D segmentation toolkit"};
    app.require_subcommand(1);

    cmftool::register_synth(app);
    cmftool::register_scribble(app);
    cmftool::register_train(app);
    cmftool::register_infer(app);
    cmftool::register_eval(app);
    cmftool::register_ablate(app);
    cmftool::register_plot(app);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);  // 0, no side effects
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return cmftool::kExitUsage;
    } catch (const cmf::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return cmftool::kExitUsage;
    } catch (const cmf::FormatError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return cmftool::kExitData;
    } catch (const cmf::CorruptionError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return cmftool::kExitData;
    } catch (const cmf::ValidationError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return cmftool::kExitData;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return cmftool::kExitData;
    } catch (const std::exception& e) {
        std::cerr << "failure: " << e.what() << "\n";
        return cmftool::kExitRuntime;
    }
    return cmftool::kExitOk;
}
