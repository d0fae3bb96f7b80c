#pragma once

#include <string>

#include <json.hpp>

#include "ibr/certify.hpp"
#include "ibr/region.hpp"
#include "ibr/sim.hpp"

namespace ibr {

nlohmann::json to_json(const Gain& g);
Gain gain_from_json(const nlohmann::json& j);

nlohmann::json to_json(const QuadraticForm& q);   // dim, q upper triangle (row-major), r, c
nlohmann::json to_json(const LyapunovCertificate& lyap);
nlohmann::json to_json(const Multipliers& m);
nlohmann::json to_json(const AchievabilityCertificate& cert);
nlohmann::json to_json(const ViolationSummary& v);
nlohmann::json to_json(const SegmentMetrics& m);
nlohmann::json to_json(const HullGroup& g);
nlohmann::json to_json(const ValidationReport& r);
nlohmann::json to_json(const RegionReport& r);
nlohmann::json to_json(const CoverReport& r);

// Header: t,p,q,u_p,u_q,u_alpha,u_beta,v_g,pf,u_out,m_state,m_in_lo,m_in_hi
std::string trajectory_csv(const TrajectoryRecord& traj);

}  // namespace ibr
