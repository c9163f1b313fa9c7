#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <vector>

namespace a2a::csv {

/// One parsed record and the 1-based physical line it started on.
struct Record {
    std::size_t line_no = 0;
    std::vector<std::string> fields;
};

/// RFC 4180 reader: double-quoted fields may contain commas, quotes ("")
/// and newlines. A trailing '\r' before '\n' is dropped. Blank lines are
/// skipped.
std::vector<Record> read_all(std::istream& in);

/// Writes one record, quoting fields that need it.
void write_record(std::ostream& out, const std::vector<std::string>& fields);

}  // namespace a2a::csv
