#pragma once

#include <iosfwd>

namespace nlimb {

// Command-line entry point. Returns 0 on success, 1 on a runtime failure and
// 2 on a usage or configuration error.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace nlimb
