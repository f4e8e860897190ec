#include <iostream>

#include <CLI11.hpp>

#include "fixtures.hpp"
#include "malens/error.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Writes a self-contained fixture corpus", "malens-fixtures"};
  std::string kind = "walkthrough";
  std::string output;
  std::uint64_t seed = 7;
  std::size_t utterances = 8;
  app.add_option("kind", kind, "walkthrough or synthetic")
      ->check(CLI::IsMember({"walkthrough", "synthetic"}));
  app.add_option("--output", output, "Destination directory")->required();
  app.add_option("--seed", seed, "Synthetic corpus seed");
  app.add_option("--utterances", utterances, "Synthetic corpus size");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    const malens::fixtures::CorpusPlan plan =
        kind == "walkthrough" ? malens::fixtures::walkthrough()
                              : malens::fixtures::synthetic_corpus(seed, utterances).plan;
    const auto paths = malens::fixtures::write_corpus(plan, output);
    std::cout << "manifest " << paths.manifest.string() << "\n"
              << "fixtures " << paths.fixtures.string() << "\n";
    if (!paths.space.empty()) std::cout << "space " << paths.space.string() << "\n";
  } catch (const malens::Error& e) {
    std::cerr << "malens-fixtures: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
