#pragma once

#include "selfrep/cnc.hpp"
#include "selfrep/energy.hpp"
#include "selfrep/optimizer.hpp"

#include <ostream>
#include <string>

namespace selfrep {

// All numbers are written with 17 significant digits so files round-trip and
// are byte-stable for identical inputs.

void write_trace_csv(std::ostream& out, const OptimizerTrace& trace);
void write_sweep_csv(std::ostream& out, const SweepResult& sweep);
/// Header: variant,n,h,pairs,median_seconds,fitted_slope
void write_cost_csv(std::ostream& out, const CostProfile& profile);

std::string validation_text(const ModelParams& params, const ValidationReport& report);
std::string energy_json(const EnergyBreakdown& energy, double epsilon);
std::string cnc_json(const CncReport& report);

}  // namespace selfrep
