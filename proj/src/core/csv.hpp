#pragma once

#include <string>
#include <vector>

namespace psychbench::csv {

// RFC-4180-style parsing: quoted fields, doubled-quote escapes, LF or CRLF
// line ends. Returns rows of fields; a trailing newline does not produce an
// empty final row.
std::vector<std::vector<std::string>> parse(const std::string& text);

// Quotes a field when it contains a comma, quote or newline.
std::string escape(const std::string& field);

std::string join_row(const std::vector<std::string>& fields);

// Shortest decimal representation that parses back to the same double.
std::string format_double(double value);

double parse_double(const std::string& text, const std::string& context);
int parse_int(const std::string& text, const std::string& context);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace psychbench::csv
