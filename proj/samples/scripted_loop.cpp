// Runs the design loop for one task against a scripted transcript and prints
// the outcome report of the chosen reward.
//
//   scripted_loop <task-index> <transcript.json> [seed]

#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <string>

#include "dlm/dlm.hpp"

int main(int argc, char** argv) {
  if (argc < 3) {
    std::cerr << "usage: scripted_loop <task-index> <transcript.json> [seed]\n";
    return 2;
  }
  try {
    const auto& task = dlm::task_by_index(std::stoi(argv[1]));
    const std::uint64_t seed = argc > 3 ? std::stoull(argv[3]) : 1;
    const auto inst = dlm::generate_instance(dlm::derive_seed(seed, "instance", {}), 48, 5);
    auto llm = dlm::ScriptedBackend::from_file(argv[2]);
    dlm::LoopConfig cfg;
    cfg.seed = seed;
    const auto result = dlm::run(task, inst, llm, cfg);

    std::cout << "task " << task.index << ": " << task.label << "\n"
              << "chosen reward: " << dlm::dsl::render(result.reward) << "\n\n";
    dlm::Rng rng(dlm::derive_seed(seed, "report", {}));
    std::cout << dlm::render(dlm::analyze(result.policy, inst, dlm::kDefaultAnalysisSteps, rng));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
