#include "fedscore/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "fedscore/errors.hpp"
#include "fedscore/jsonio.hpp"

namespace fedscore {

namespace {

// Parse one RFC-4180 record starting at `pos`; advances `pos` past the
// record's line terminator.
std::vector<std::string> parse_record(const std::string& text, std::size_t& pos) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    while (pos < text.size()) {
        const char c = text[pos];
        if (quoted) {
            if (c == '"') {
                if (pos + 1 < text.size() && text[pos + 1] == '"') {
                    field.push_back('"');
                    pos += 2;
                } else {
                    quoted = false;
                    ++pos;
                }
            } else {
                field.push_back(c);
                ++pos;
            }
            continue;
        }
        if (c == '"' && field.empty()) {
            quoted = true;
            ++pos;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
            ++pos;
        } else if (c == '\r' || c == '\n') {
            if (c == '\r' && pos + 1 < text.size() && text[pos + 1] == '\n') ++pos;
            ++pos;
            fields.push_back(std::move(field));
            return fields;
        } else {
            field.push_back(c);
            ++pos;
        }
    }
    fields.push_back(std::move(field));
    return fields;
}

bool is_missing(const std::string& cell) { return cell.empty() || cell == "NA"; }

double parse_double(const std::string& cell, std::size_t row, const std::string& column) {
    double value = 0.0;
    const char* begin = cell.data();
    const char* end = begin + cell.size();
    auto res = std::from_chars(begin, end, value);
    if (res.ec != std::errc{} || res.ptr != end) {
        throw DataError("row " + std::to_string(row) + ", column '" + column +
                        "': cannot parse numeric value '" + cell + "'");
    }
    return value;
}

int parse_outcome(const std::string& cell, std::size_t row, const std::string& column) {
    if (cell == "0") return 0;
    if (cell == "1") return 1;
    throw DataError("row " + std::to_string(row) + ", column '" + column +
                    "': outcome must be 0 or 1, got '" + cell + "'");
}

std::string quote_if_needed(const std::string& field) {
    if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out.push_back('"');
    return out;
}

}  // namespace

SiteDataset load_csv(const std::filesystem::path& path, const Schema& schema,
                     LoadReport* report) {
    schema.validate();
    if (!std::filesystem::exists(path)) throw IoError("file not found: " + path.string());
    const std::string text = read_text_file(path);
    if (text.empty()) throw DataError("empty CSV file: " + path.string());

    std::size_t pos = 0;
    const std::vector<std::string> header = parse_record(text, pos);

    const std::size_t p = schema.variables.size();
    // Map CSV column -> schema variable index; -2 = outcome, -3 = split tag.
    std::vector<int> mapping(header.size());
    std::vector<bool> seen(p, false);
    bool outcome_seen = false;
    for (std::size_t c = 0; c < header.size(); ++c) {
        const std::string& name = header[c];
        if (name == schema.outcome_name) {
            if (outcome_seen) throw DataError("duplicate outcome column '" + name + "'");
            outcome_seen = true;
            mapping[c] = -2;
            continue;
        }
        if (name == "split") {
            mapping[c] = -3;
            continue;
        }
        const int idx = schema.index_of(name);
        if (idx < 0) throw DataError("unknown column '" + name + "'");
        if (seen[static_cast<std::size_t>(idx)]) {
            throw DataError("duplicate column '" + name + "'");
        }
        seen[static_cast<std::size_t>(idx)] = true;
        mapping[c] = idx;
    }
    if (!outcome_seen) throw DataError("missing outcome column '" + schema.outcome_name + "'");
    for (std::size_t v = 0; v < p; ++v) {
        if (!seen[v]) throw DataError("missing column '" + schema.variables[v].name + "'");
    }

    SiteDataset data;
    data.schema = schema;
    for (const auto& spec : schema.variables) {
        if (spec.kind == VariableKind::Continuous) {
            data.columns.emplace_back(std::vector<double>{});
        } else {
            data.columns.emplace_back(std::vector<int>{});
        }
    }

    LoadReport local_report;
    std::size_t row_number = 1;  // header is row 1
    while (pos < text.size()) {
        // Skip a trailing blank line.
        if (text[pos] == '\n' || text[pos] == '\r') {
            std::size_t probe = pos;
            const auto rest = parse_record(text, probe);
            if (rest.size() == 1 && rest[0].empty() && probe >= text.size()) break;
        }
        const std::vector<std::string> record = parse_record(text, pos);
        ++row_number;
        if (record.size() != header.size()) {
            throw DataError("row " + std::to_string(row_number) + ": expected " +
                            std::to_string(header.size()) + " fields, got " +
                            std::to_string(record.size()));
        }
        bool missing = false;
        for (std::size_t c = 0; c < record.size(); ++c) {
            if (mapping[c] != -3 && is_missing(record[c])) {
                missing = true;
                break;
            }
        }
        if (missing) {
            ++local_report.rows_excluded_missing;
            continue;
        }

        int outcome = 0;
        Split tag = Split::Train;
        std::vector<double> numeric(p, 0.0);
        std::vector<int> codes(p, 0);
        for (std::size_t c = 0; c < record.size(); ++c) {
            const int m = mapping[c];
            if (m == -2) {
                outcome = parse_outcome(record[c], row_number, header[c]);
            } else if (m == -3) {
                const auto parsed = split_from_name(record[c]);
                if (!parsed) {
                    throw DataError("row " + std::to_string(row_number) +
                                    ": unknown split tag '" + record[c] + "'");
                }
                tag = *parsed;
            } else {
                const auto& spec = schema.variables[static_cast<std::size_t>(m)];
                if (spec.kind == VariableKind::Continuous) {
                    numeric[static_cast<std::size_t>(m)] =
                        parse_double(record[c], row_number, header[c]);
                } else {
                    const int code = spec.category_index(record[c]);
                    if (code < 0) {
                        throw DataError("row " + std::to_string(row_number) + ", column '" +
                                        header[c] + "': label '" + record[c] +
                                        "' is not a declared category");
                    }
                    codes[static_cast<std::size_t>(m)] = code;
                }
            }
        }
        for (std::size_t v = 0; v < p; ++v) {
            if (schema.variables[v].kind == VariableKind::Continuous) {
                std::get<std::vector<double>>(data.columns[v]).push_back(numeric[v]);
            } else {
                std::get<std::vector<int>>(data.columns[v]).push_back(codes[v]);
            }
        }
        data.outcome.push_back(outcome);
        data.split.push_back(tag);
        ++local_report.rows_loaded;
    }

    if (data.n_rows() == 0) {
        throw DataError("no usable rows in " + path.string() + " (" +
                        std::to_string(local_report.rows_excluded_missing) +
                        " excluded for missing values)");
    }
    if (report) *report = local_report;
    return data;
}

void save_csv(const std::filesystem::path& path, const SiteDataset& data,
              bool with_split_column) {
    std::ostringstream out;
    for (const auto& spec : data.schema.variables) out << quote_if_needed(spec.name) << ',';
    out << quote_if_needed(data.schema.outcome_name);
    if (with_split_column) out << ",split";
    out << '\n';
    for (std::size_t r = 0; r < data.n_rows(); ++r) {
        for (std::size_t v = 0; v < data.columns.size(); ++v) {
            const auto& spec = data.schema.variables[v];
            if (spec.kind == VariableKind::Continuous) {
                out << format_number(data.numeric_column(v)[r]);
            } else {
                out << quote_if_needed(data.category_label(v, r));
            }
            out << ',';
        }
        out << data.outcome[r];
        if (with_split_column) out << ',' << split_name(data.split[r]);
        out << '\n';
    }
    write_text_file(path, out.str());
}

}  // namespace fedscore
