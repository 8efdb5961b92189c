#pragma once

#include "mspmdp/bounds.hpp"
#include "mspmdp/lipschitz.hpp"
#include "mspmdp/model.hpp"
#include "mspmdp/solver.hpp"

#include <json.hpp>

#include <string>

namespace mspmdp {

using Json = nlohmann::ordered_json;

// Numbers enter JSON documents rounded to ten significant digits.
double json_round(double v);

Json law_to_json(const Law& law);
Law law_from_json(const Json& j);

Json instance_to_json(const ProblemInstance& instance);
ProblemInstance instance_from_json(const Json& j);

Json tree_to_json(const ScenarioTree& tree);
ScenarioTree tree_from_json(const Json& j);

Json solve_report_to_json(const SolveReport& report, const ScenarioTree* tree = nullptr);
Json constant_table_to_json(const ConstantTable& table);
Json bound_report_to_json(const BoundReport& report);
std::string bound_report_to_markdown(const BoundReport& report);
std::string bound_report_to_csv(const BoundReport& report);

ProblemInstance load_instance(const std::string& path);
void save_instance(const ProblemInstance& instance, const std::string& path);

}  // namespace mspmdp
