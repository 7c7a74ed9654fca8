// Writes the synthetic end-to-end fixture (corpus, models, config).

#include <CLI11.hpp>

#include <iostream>

#include "fixture_corpus.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Generate the end-to-end fixture corpus"};
    eurocurate::fixture::FixtureSpec spec;
    std::string dir;
    double megabytes = 50;
    app.add_option("--out,-o", dir, "Output directory")->required();
    app.add_option("--seed", spec.seed, "Generator seed");
    app.add_option("--megabytes", megabytes, "Approximate corpus size")->check(CLI::PositiveNumber);
    CLI11_PARSE(app, argc, argv);
    spec.dir = dir;
    spec.target_bytes = static_cast<std::size_t>(megabytes * 1024 * 1024);
    try {
        auto files = eurocurate::fixture::write_fixture(spec);
        std::cout << files.corpus.string() << ": " << files.documents << " documents, " << files.bytes << " bytes\n"
                  << "config: " << files.config.string() << '\n';
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
