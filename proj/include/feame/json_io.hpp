#pragma once

#include "feame/ame.hpp"
#include "feame/inference.hpp"
#include "feame/likelihood.hpp"
#include "feame/mc.hpp"
#include "feame/re_mle.hpp"
#include "feame/weights.hpp"

#include "json.hpp"

#include <string>

namespace feame {

using json = nlohmann::ordered_json;

/// Doubles as shortest round-trip text; fixed key order; NaN as null.
std::string dump(const json& j, bool pretty = true);

json to_json(const ThetaEstimate& e, const ModelSpec& spec);
/// Reads "theta" of a ThetaEstimate document or a bare {"beta":[...],"gamma":[...]}.
Theta theta_from_json(const json& j);

json to_json(const WeightTable& t);
json to_json(const AmeEstimate& e);
json to_json(const HeterogeneityDist& h);
HeterogeneityDist heterogeneity_from_json(const json& j);
json to_json(const ReEstimate& e);
json to_json(const HausmanResult& r);
json to_json(const BootstrapResult& r);
json to_json(const DgpSpec& d);
json to_json(const ExperimentConfig& c);
ExperimentConfig experiment_config_from_json(const json& j);
json to_json(const ExperimentResult& r);
json to_json(const std::vector<DecompositionRow>& rows);

}  // namespace feame
