#pragma once

#include <string>

#include "croute/oracle.hpp"
#include "croute/simulator.hpp"

namespace croute {

// Canonical JSON reports: keys sorted, rationals rendered as "p/q" strings,
// so identical inputs and seeds give byte-identical output.
std::string load_report_json(const SchemeBundle& b, const LoadReport& rep);
std::string size_report_json(const SchemeBundle& b, const SizeReport& rep);
std::string build_report_json(const SchemeBundle& b);
std::string evaluate_report_json(const SchemeBundle& b, const LoadReport& rep,
                                 const CongestionCertificate& oracle);
std::string certificate_json(const Graph& g, const CongestionCertificate& cert);

}  // namespace croute
