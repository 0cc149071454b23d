#pragma once

#include <iosfwd>
#include <string>

#include "recbase/recommenders.hpp"

namespace recbase {

/// Writes a model as a tab-separated triple file preceded by a '#' header
/// carrying kind, artifact, dimensions and hyper-parameters. Weights are
/// printed with round-trip precision.
void save_model(std::ostream& out, const TrainedModel& model);
void save_model(const std::string& path, const TrainedModel& model);

/// Reads a model written by save_model; `train` must have the recorded
/// dimensions.
TrainedModel load_model(std::istream& in, InteractionPtr train);
TrainedModel load_model(const std::string& path, InteractionPtr train);

}  // namespace recbase
