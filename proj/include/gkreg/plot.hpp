#pragma once

#include <string>

namespace gkreg {

enum class PlotKind { ReVsT, Rho, Spectrum, Objective };

PlotKind plot_kind_from_name(const std::string& name);

// Renders a CSV produced by the sweep/solve commands into a standalone
// SVG 1.1 document. Output is deterministic: fixed ordering, fixed float
// formatting, no timestamps. Required columns per kind:
//   re_vs_t:   method, t, re            (sweep results csv)
//   rho:       c, t, rho_log10, t_opt_rho, t_opt_min, t_opt_g
//   spectrum:  series, index, value
//   objective: method, zeta, value
// Missing columns are reported by name.
void emit_plot(const std::string& csv_path, PlotKind kind, const std::string& out_path);

}  // namespace gkreg
