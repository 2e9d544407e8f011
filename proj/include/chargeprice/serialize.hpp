#pragma once

#include <json.hpp>

#include "chargeprice/coupled.hpp"
#include "chargeprice/opf.hpp"
#include "chargeprice/paths.hpp"
#include "chargeprice/pricing.hpp"
#include "chargeprice/sensitivity.hpp"
#include "chargeprice/ue.hpp"
#include "chargeprice/verify.hpp"

namespace chargeprice {

using json = nlohmann::ordered_json;

json to_json(const Eigen::VectorXd& v);
json to_json(const Eigen::MatrixXd& m);  // row-major nested arrays

/// Paths are listed with external node ids so the output is readable on its own.
json ue_json(const UESolution& sol, const TransportNetwork& net, const ODDemand& demand, const PathStructure& ps);
json sensitivity_json(const SensitivityResult& s, const TransportNetwork& net, std::span<const int> owned);
json iterate_json(const PriceIterate& it);
json opf_json(const OPFSolution& opf, const PowerNetwork& net);
json certificate_json(const UECertificate& cert);
json comparison_json(const GradientComparison& c);
json cycle_json(const CoupledCycle& c);

}  // namespace chargeprice
