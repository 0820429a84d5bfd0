#pragma once

#include <filesystem>
#include <string>

#include "fedscore/eval.hpp"

namespace fedscore {

// Standalone SVG of psi versus model size m: bars plus a connecting line,
// with the selected size highlighted. Pure text generation — identical
// input yields byte-identical markup.
std::string render_parsimony_svg(const ParsimonyCurve& curve, int selected_m);

void plot_parsimony(const ParsimonyCurve& curve, int selected_m,
                    const std::filesystem::path& path);

}  // namespace fedscore
