// Batch front-end: one subcommand per pipeline stage.

#include <CLI11.hpp>

#include <iostream>
#include <string>

#include "eurocurate/errors.hpp"
#include "eurocurate/pipeline.hpp"

using namespace eurocurate;

namespace {

struct Flags {
    std::string config;
    std::string input;
    std::string output;
    std::string manifest_out;
    std::size_t workers = 0;
    std::uint64_t seed = 0;
    std::string preset;
    double stride = 0;
};

void add_common(CLI::App* sub, Flags& f) {
    sub->add_option("--config,-c", f.config, "Pipeline config (JSON)")->required();
    sub->add_option("--input,-i", f.input, "Override the stage input path");
    sub->add_option("--output,-o", f.output, "Override the stage output path");
    sub->add_option("--manifest-out", f.manifest_out, "Manifest path (default <output>.manifest.json)");
    sub->add_option("--workers,-j", f.workers, "Worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--seed", f.seed, "Override the config seed");
}

StageOptions to_options(const CLI::App* sub, const Flags& f) {
    StageOptions o;
    if (sub->count("--input")) o.input = f.input;
    if (sub->count("--output")) o.output = f.output;
    if (sub->count("--manifest-out")) o.manifest_out = f.manifest_out;
    if (sub->count("--workers")) o.workers = f.workers;
    if (sub->count("--seed")) o.seed = f.seed;
    if (sub->get_option_no_throw("--preset") && sub->count("--preset")) o.preset = f.preset;
    if (sub->get_option_no_throw("--stride") && sub->count("--stride"))
        o.stride = static_cast<std::int64_t>(f.stride);
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"eurocurate: corpus curation and training-recipe tooling"};
    app.require_subcommand(1);
    Flags flags;

    for (const auto& name : stage_names()) {
        auto* sub = app.add_subcommand(name, "Run the " + name + " stage");
        add_common(sub, flags);
        if (name == "arch") sub->add_option("--preset", flags.preset, "Architecture preset (1.7b, 9b, 22b)");
        if (name == "schedule") {
            sub->add_option("--preset", flags.preset, "Schedule preset (eurollm22b, table1)");
            sub->add_option("--stride", flags.stride, "Row stride in tokens")->check(CLI::PositiveNumber);
        }
    }
    auto* vc = app.add_subcommand("validate-config", "List config violations");
    vc->add_option("config", flags.config, "Pipeline config (JSON)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfigError;
    }

    PipelineConfig config;
    try {
        config = load_config(flags.config);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfigError;
    }

    if (vc->parsed()) {
        auto violations = validate_config(config);
        for (const auto& v : violations) std::cout << v << '\n';
        return violations.empty() ? kExitOk : kExitConfigError;
    }

    for (auto* sub : app.get_subcommands()) {
        StageResult r = run_stage(sub->get_name(), config, to_options(sub, flags));
        std::cout << r.printed;
        if (!r.message.empty()) std::cerr << (r.exit_code ? "error: " : "") << r.message << '\n';
        if (r.exit_code != kExitConfigError && !r.manifest.stage.empty()) {
            std::cerr << r.manifest.stage << ": in=" << r.manifest.input_records
                      << " out=" << r.manifest.output_records;
            for (const auto& [reason, n] : r.manifest.counts) std::cerr << ' ' << reason << '=' << n;
            std::cerr << '\n';
        }
        return r.exit_code;
    }
    return kExitConfigError;
}
