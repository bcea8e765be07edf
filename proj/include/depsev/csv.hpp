#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace depsev::csv {

using Row = std::vector<std::string>;

/// RFC-4180 parse of a whole stream: quoted fields, embedded commas,
/// quotes and newlines. Rows may have differing lengths; callers validate.
std::vector<Row> read(std::istream& in);

std::vector<Row> read_file(const std::string& path);

/// Quotes a field only when needed.
std::string escape(const std::string& field);

void write_row(std::ostream& out, const Row& row);

void write(std::ostream& out, const std::vector<Row>& rows);

}  // namespace depsev::csv
