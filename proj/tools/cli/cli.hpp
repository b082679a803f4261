#pragma once

#include <ostream>

namespace mosaic::cli {

// Entry point of the `mosaic` tool; returns the process exit status.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mosaic::cli
