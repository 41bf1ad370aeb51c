// Copyright 2026 The hqfl Authors
// SPDX-License-Identifier: Apache-2.0
//
// JSON forms of the domain values (nlohmann ADL hooks). from_json throws
// InputError on malformed documents rather than json exceptions.

#pragma once

#include <nlohmann/json.hpp>

#include "hqfl/distfit.hpp"
#include "hqfl/error.hpp"
#include "hqfl/model.hpp"
#include "hqfl/speed_model.hpp"

namespace hqfl {

void to_json(nlohmann::json& j, const QuantStrategy& s);
void from_json(const nlohmann::json& j, QuantStrategy& s);
void to_json(nlohmann::json& j, const ClientProfile& p);
void from_json(const nlohmann::json& j, ClientProfile& p);
void to_json(nlohmann::json& j, const ModelSpec& m);
void from_json(const nlohmann::json& j, ModelSpec& m);
void to_json(nlohmann::json& j, const TopologyNode& n);
void from_json(const nlohmann::json& j, TopologyNode& n);
void to_json(nlohmann::json& j, const Topology& t);
void from_json(const nlohmann::json& j, Topology& t);
void to_json(nlohmann::json& j, const AssignmentEntry& e);
void from_json(const nlohmann::json& j, AssignmentEntry& e);

nlohmann::json assignment_to_json(const StrategyAssignment& a);
StrategyAssignment assignment_from_json(const nlohmann::json& j);

// Parses `text` and converts to T, mapping every json error to InputError.
template <typename T>
T parse_json_as(const std::string& text) {
  try {
    return nlohmann::json::parse(text).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed JSON: ") + e.what());
  }
}

namespace distfit {
void to_json(nlohmann::json& j, const Distribution& d);
void from_json(const nlohmann::json& j, Distribution& d);
void to_json(nlohmann::json& j, const FitResult& f);
void from_json(const nlohmann::json& j, FitResult& f);
}  // namespace distfit

namespace speed {
void to_json(nlohmann::json& j, const HardwareProfile& h);
void from_json(const nlohmann::json& j, HardwareProfile& h);
}  // namespace speed

}  // namespace hqfl
