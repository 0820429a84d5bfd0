#include "fedscore/wire.hpp"

#include <cmath>
#include <cstdio>

#include "fedscore/errors.hpp"

namespace fedscore {

std::string wire_real(double v) {
    if (!std::isfinite(v)) throw NumericError("wire payloads must be finite");
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%+.16e", v);
    std::string s(buf);
    // JSON forbids a leading '+' on numbers; a leading space is plain
    // insignificant whitespace, so non-negative values get one. That keeps
    // every value exactly 24 bytes wide regardless of sign or magnitude.
    if (s[0] == '+') s[0] = ' ';
    // Pad the exponent to three digits for the same reason.
    auto e = s.find('e');
    std::string digits = s.substr(e + 2);
    while (digits.size() < 3) digits.insert(digits.begin(), '0');
    return s.substr(0, e + 2) + digits;
}

namespace {

std::string wire_vector(const Eigen::VectorXd& v) {
    std::string out = "[";
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (i) out += ",";
        out += wire_real(v[i]);
    }
    return out + "]";
}

std::string wire_matrix(const Eigen::MatrixXd& m) {
    std::string out = "[";
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        if (r) out += ",";
        out += "[";
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            if (c) out += ",";
            out += wire_real(m(r, c));
        }
        out += "]";
    }
    return out + "]";
}

Eigen::VectorXd json_vector(const Json& j, const char* what) {
    if (!j.is_array()) throw DataError(std::string(what) + ": expected an array");
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    Eigen::Index i = 0;
    for (const auto& x : j) {
        if (!x.is_number()) throw DataError(std::string(what) + ": non-numeric entry");
        v[i++] = x.get<double>();
    }
    return v;
}

Eigen::MatrixXd json_matrix(const Json& j, const char* what) {
    if (!j.is_array()) throw DataError(std::string(what) + ": expected an array of rows");
    const auto rows = static_cast<Eigen::Index>(j.size());
    Eigen::MatrixXd m(rows, rows == 0 ? 0 : static_cast<Eigen::Index>(j.front().size()));
    Eigen::Index r = 0;
    for (const auto& row : j) {
        Eigen::VectorXd v = json_vector(row, what);
        if (v.size() != m.cols()) throw DataError(std::string(what) + ": ragged matrix");
        m.row(r++) = v;
    }
    return m;
}

}  // namespace

std::string serialize_broadcast(const BroadcastPacket& packet) {
    std::string out = "{\"version\":" + std::to_string(packet.version);
    out += ",\"encoding\":" + packet.encoding.to_json().dump();
    out += ",\"beta_bar\":" + wire_vector(packet.beta_bar);
    return out + "}";
}

BroadcastPacket parse_broadcast(const std::string& text) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const Json::exception& e) {
        throw DataError(std::string("broadcast packet: ") + e.what());
    }
    BroadcastPacket packet;
    if (!j.contains("version") || !j.contains("encoding") || !j.contains("beta_bar"))
        throw DataError("broadcast packet: missing version/encoding/beta_bar");
    packet.version = j["version"].get<int>();
    packet.encoding = DesignEncoding::from_json(j["encoding"]);
    packet.beta_bar = json_vector(j["beta_bar"], "broadcast beta_bar");
    if (static_cast<std::size_t>(packet.beta_bar.size()) != packet.encoding.width())
        throw DataError("broadcast packet: beta_bar length does not match encoding width");
    return packet;
}

std::string serialize_site_message(const SiteMessage& message) {
    std::string out = "{\"site_id\":" + wire_real(static_cast<double>(message.site_id));
    out += ",\"n\":" + wire_real(static_cast<double>(message.n));
    out += ",\"grad\":" + wire_vector(message.grad);
    out += ",\"hess\":" + wire_matrix(message.hess);
    return out + "}";
}

SiteMessage parse_site_message(const std::string& text) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const Json::exception& e) {
        throw DataError(std::string("site message: ") + e.what());
    }
    if (!j.contains("site_id") || !j.contains("n") || !j.contains("grad") || !j.contains("hess"))
        throw DataError("site message: missing site_id/n/grad/hess");
    SiteMessage m;
    m.site_id = static_cast<int>(j["site_id"].get<double>());
    m.n = static_cast<std::size_t>(j["n"].get<double>());
    m.grad = json_vector(j["grad"], "site message grad");
    m.hess = json_matrix(j["hess"], "site message hess");
    if (m.hess.rows() != m.grad.size() || m.hess.cols() != m.grad.size())
        throw DataError("site message: hess dimensions do not match grad");
    return m;
}

std::size_t Transcript::count(const std::string& type) const {
    std::size_t c = 0;
    for (const auto& e : entries)
        if (e.type == type) ++c;
    return c;
}

Json Transcript::to_json() const {
    Json arr = Json::array();
    for (const auto& e : entries) {
        Json je;
        je["type"] = e.type;
        je["from_site"] = e.from_site;
        je["to_site"] = e.to_site;
        je["payload"] = e.payload;
        arr.push_back(std::move(je));
    }
    return arr;
}

}  // namespace fedscore
