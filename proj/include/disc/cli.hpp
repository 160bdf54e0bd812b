#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace disc {

/// Exit codes: 0 success, 1 a run failed or a check did not pass, 2 bad usage or input.
int cli_main(int argc, const char* const* argv);
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace disc
