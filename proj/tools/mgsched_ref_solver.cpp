// Reference external solver: reads a conic text program and writes a
// solution file using the built-in branch and bound. Any executable with the
// same calling convention can be plugged in via MGSCHED_EXTERNAL_SOLVER.
//
//   mgsched_ref_solver <problem.mgc> <solution.txt> [rel_gap]

#include <cstdlib>
#include <iostream>
#include <string>

#include "mgsched/conic/text_io.hpp"
#include "mgsched/solver/bnb.hpp"
#include "mgsched/solver/external.hpp"

int main(int argc, char** argv) {
  if (argc < 3) {
    std::cerr << "usage: " << argv[0] << " <problem.mgc> <solution.txt> [rel_gap]\n";
    return 2;
  }
  try {
    const auto prog = mgsched::conic::read_text_file(argv[1]);
    mgsched::solver::SolveOptions o;
    if (argc > 3) o.rel_gap = std::stod(argv[3]);
    const auto res = mgsched::solver::solve_misocp(prog, o);
    mgsched::solver::write_solution_file(prog, res.point, argv[2]);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
