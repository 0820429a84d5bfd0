#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "fedscore/glm.hpp"

namespace fedscore {

// One federation round: the lead's anchor estimate plus the design layout
// every site must encode against.
struct BroadcastPacket {
    int version = 1;
    DesignEncoding encoding;
    Eigen::VectorXd beta_bar;
};

// A remote site's entire contribution: aggregate derivatives only, never rows.
struct SiteMessage {
    int site_id = 0;
    std::size_t n = 0;
    Eigen::VectorXd grad;
    Eigen::MatrixXd hess;
};

// Every real number on the wire is printed in a fixed 24-character scientific
// form (" 1.2345678901234567e+005", leading '-' or space): 17 significant
// digits round-trip a double exactly, and the fixed width makes payload size
// a function of the coefficient dimension alone — never of a site's row count.
// The space is insignificant JSON whitespace, so payloads stay valid JSON.
std::string wire_real(double v);

std::string serialize_broadcast(const BroadcastPacket& packet);
BroadcastPacket parse_broadcast(const std::string& text);

std::string serialize_site_message(const SiteMessage& message);
SiteMessage parse_site_message(const std::string& text);

// Append-only audit log of everything that crossed the simulated wire.
struct TranscriptEntry {
    std::string type;   // "broadcast", "reply", "lead_summary"
    int from_site = 0;
    int to_site = -1;   // -1 = all sites
    std::string payload;
};

struct Transcript {
    std::vector<TranscriptEntry> entries;

    std::size_t count(const std::string& type) const;
    Json to_json() const;
};

}  // namespace fedscore
