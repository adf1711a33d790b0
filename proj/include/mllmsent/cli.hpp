#pragma once

#include <ostream>

namespace mllmsent::cli {

/// Command-line entry point. Returns 0 on success, 2 when some images failed,
/// 1 on fatal errors.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mllmsent::cli
