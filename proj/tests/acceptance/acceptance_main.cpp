// Runs every acceptance check at full size and prints one PASS/FAIL line per
// check. Options: --quick (reduced sizes), --workers N, --seed S.

#include <cstdlib>
#include <iostream>
#include <string>

#include "ctrw/parallel.hpp"
#include "ctrw/verify.hpp"

int main(int argc, char** argv) {
    ctrw::verify::VerifyOptions options;
    int workers = 1;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--quick") {
            options.quick = true;
        } else if (arg == "--workers" && i + 1 < argc) {
            workers = std::atoi(argv[++i]);
        } else if (arg == "--seed" && i + 1 < argc) {
            options.seed = std::strtoull(argv[++i], nullptr, 10);
        } else {
            std::cerr << "usage: acceptance [--quick] [--workers N] [--seed S]\n";
            return 2;
        }
    }
    options.workers = ctrw::resolve_workers(workers);
    options.on_check = [](const ctrw::verify::CheckOutcome& o) {
        std::cout << ctrw::verify::report_line(o) << std::endl;
    };
    const auto outcomes = ctrw::verify::run_acceptance(options);
    int failed = 0;
    for (const auto& o : outcomes) failed += !o.passed;
    std::cout << (failed == 0 ? "all " + std::to_string(outcomes.size()) + " checks passed"
                              : std::to_string(failed) + " of " + std::to_string(outcomes.size()) + " checks failed")
              << std::endl;
    return failed == 0 ? 0 : 1;
}
