#pragma once

#include <string>
#include <vector>

namespace pcdream::cli {

// Entry point for the pcdream executable. Exit codes: 0 success, 2 usage or
// validation error, 3 numeric failure (NaN loss, gradient blow-up).
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args); // args without the program name

} // namespace pcdream::cli
