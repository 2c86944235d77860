// Builds a synthetic ten-venue dataset, fits the pooled model and prints
// revised targets for a few high first-innings scores.

#include <iostream>

#include "odi/odi.hpp"

int main() {
    const auto records = odi::generate_synthetic_dataset(odi::demo_spec(), 2024);
    const auto ds = odi::categorize(records);

    const auto model = odi::build_model(ds, "overall", odi::Family::NegBin);
    std::cout << "C = " << model.c_ratio << " (" << model.bat_first_wins << " bat-first wins, "
              << model.bat_second_wins << " bat-second wins)\n";

    for (std::int64_t xf : {300, 325, 350, 375}) {
        const auto rt = odi::revise_target(model, xf);
        std::cout << "first innings " << xf << " -> chase must exceed " << rt.revised_target << '\n';
    }
}
