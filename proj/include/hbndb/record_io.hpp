#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "hbndb/model.hpp"

namespace hbndb {

using json = nlohmann::json;

// Canonical record serialization: one JSON object per line, keys sorted,
// optional fields omitted when absent, doubles printed with the shortest
// round-trip representation, infinite lifetimes written as the string "inf".
json to_json(const DipoleMoment& dipole);
json to_json(const TransitionRecord& transition);
json to_json(const DefectRecord& record);

DipoleMoment dipole_from_json(const json& j);
TransitionRecord transition_from_json(const json& j);
DefectRecord record_from_json(const json& j);

std::string serialize_record(const DefectRecord& record);
DefectRecord parse_record_line(std::string_view line);

// Whole record file: records sorted by id, one per line, trailing newline per line.
std::string serialize_records(std::vector<DefectRecord> records);
std::vector<DefectRecord> parse_records(std::string_view text);

// One row per transition: id,formula,charge,spin_multiplicity,host_group,spin_channel,
// zpl_eV,zpl_nm,mu_exc_sq_D2,mu_em_sq_D2,pol_exc_deg,pol_em_deg,visibility_exc,visibility_em,
// misalignment_deg,radiative_rate_s,radiative_lifetime_s,nonradiative_rate_s,quantum_efficiency,total_hr_factor.
// Absent values are empty cells.
std::string transitions_csv(const std::vector<DefectRecord>& records);

}  // namespace hbndb
