#pragma once

#include <string>
#include <vector>

#include "ddopt/bilevel.hpp"
#include "ddopt/robust.hpp"

namespace ddopt {
namespace io {

// Whole-file text helpers. Both throw Error on filesystem failure.
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

// JSON serialization. Output is pretty-printed with two-space indentation,
// fixed key order and a trailing newline, so repeated dumps of the same
// instance are byte-identical.
std::string to_json(const bilevel::CpspInstance& inst);
std::string to_json(const robust::RtsptwInstance& inst);

// Parsers for the formats above. Unknown or missing fields, malformed JSON
// and structurally invalid instances raise ParseError.
bilevel::CpspInstance cpsp_from_json(const std::string& text);
robust::RtsptwInstance rtsptw_from_json(const std::string& text);

// Reads the "type" tag ("cpsp" or "rtsptw") so callers can dispatch.
std::string instance_type(const std::string& text);

// One row per scenario-expansion round:
// iteration,objective,scenarios,labels,seconds.
std::string iteration_log_csv(const std::vector<robust::IterationRecord>& log);

}  // namespace io
}  // namespace ddopt
