#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace detcal {

/// Entry point of the `detcal` command line tool. `args` excludes the
/// program name. Returns 0 on success, 1 on validation errors (including
/// unknown flags) and 2 on I/O errors.
int cli_main(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

} // namespace detcal
