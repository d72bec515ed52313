// Writes a coarse/fine/merge weight set that needs no training: all-zero
// networks, seeded random networks, or the hand-built clip-aware merge.

#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "lhdr/errors.hpp"
#include "lhdr/models.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Write an untrained lhdr weight set"};
  std::string kind = "clip-aware";
  std::string out;
  std::uint64_t seed = 0;
  float scale = 0.5f;
  float tolerance = 2.0e-4f;
  app.add_option("--kind", kind, "zero | random | clip-aware")
      ->check(CLI::IsMember({"zero", "random", "clip-aware"}));
  app.add_option("--out", out, "Output directory")->required();
  app.add_option("--seed", seed, "Seed for --kind random");
  app.add_option("--scale", scale, "Uniform half-width for --kind random");
  app.add_option("--tolerance", tolerance, "Darkening tolerance for --kind clip-aware");
  CLI11_PARSE(app, argc, argv);

  try {
    lhdr::ModelSet models = kind == "zero"     ? lhdr::zero_model_set()
                            : kind == "random" ? lhdr::random_model_set(seed, scale)
                                               : lhdr::clip_aware_model_set(tolerance);
    lhdr::save_model_set(models, out);
    std::cout << "wrote " << kind << " weights (" << models.param_count() << " parameters) to "
              << out << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
